"""SplitMix64: a counter-based 64-bit generator, identical on every platform."""
import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z):
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed=0):
        self.state = seed & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix(self.state)

    def random(self, size=None):
        """Uniform doubles in [0, 1) from the top 53 bits."""
        if size is None:
            return (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return np.array([(self.next_u64() >> 11) * (1.0 / (1 << 53)) for _ in range(int(np.prod(size)))]).reshape(size)

    def integers(self, lo, hi, size=None):
        """Integers in [lo, hi). Modulo bias is below 2^-40 for the ranges used here."""
        span = hi - lo
        if size is None:
            return lo + self.next_u64() % span
        return np.array([lo + self.next_u64() % span for _ in range(int(np.prod(size)))]).reshape(size)

    def uniform(self, lo, hi, size=None):
        return lo + (hi - lo) * self.random(size)

    def choice(self, n, k):
        """``k`` distinct indices from ``range(n)`` (partial Fisher-Yates)."""
        idx = list(range(n))
        for i in range(k):
            j = i + self.next_u64() % (n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(sorted(idx[:k]))

    def spawn(self, key):
        """Independent stream for case ``key``; order of use does not matter."""
        return SplitMix64(_mix((self.state ^ _mix(key + 1)) & _MASK))
