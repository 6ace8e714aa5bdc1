import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from specwass import kernels
from specwass._jit import JIT_ENABLED
from specwass.core import build_grid_line


def _run_simplex(kernel, C, a, b):
    n1, n2 = C.shape
    N = n1 + n2 - 1
    bi = np.zeros(N, dtype=np.int64)
    bj = np.zeros(N, dtype=np.int64)
    if C.dtype == object:
        flow = np.full(N, Fraction(0), dtype=object)
        u = np.full(n1, Fraction(0), dtype=object)
        v = np.full(n2, Fraction(0), dtype=object)
        eps = Fraction(0)
    else:
        flow, u, v, eps = np.zeros(N), np.zeros(n1), np.zeros(n2), 1e-12
    status, piv = kernel(C, a, b, eps, bi, bj, flow, u, v)
    return status, sum(C[bi[k], bj[k]] * flow[k] for k in range(N)), u, v


@pytest.mark.skipif(not JIT_ENABLED, reason="compiled flavour unavailable")
def test_simplex_flavours_agree():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n1, n2 = rng.integers(1, 15, 2)
        C = rng.random((n1, n2))
        a = rng.random(n1) + 0.1
        b = rng.random(n2) + 0.1
        a /= a.sum()
        b *= a.sum() / b.sum()
        s1, v1, u1, w1 = _run_simplex(kernels._transport_simplex_jit, C, a, b)
        s2, v2, u2, w2 = _run_simplex(kernels.transport_simplex_py, C, a, b)
        assert s1 == s2 == kernels.OPTIMAL
        assert abs(v1 - v2) <= 1e-12


def test_simplex_degenerate_and_fraction():
    # equal marginals on a permutation cost: heavily degenerate
    n = 6
    C = np.array([[Fraction(abs(i - j)) for j in range(n)] for i in range(n)], dtype=object)
    a = np.array([Fraction(1, n)] * n, dtype=object)
    status, value, u, v = _run_simplex(kernels.transport_simplex_py, C, a, a.copy())
    assert status == kernels.OPTIMAL and value == 0
    assert all(u[i] + v[j] <= C[i, j] for i in range(n) for j in range(n))


def test_metric_closure_flavours():
    rng = np.random.default_rng(4)
    D = rng.random((30, 30)) * 5
    ref = kernels.metric_closure_numpy(D)
    assert np.allclose(kernels.metric_closure(D), ref)
    assert np.all(np.diag(ref) == 0)
    # triangle inequality of the closure
    for k in range(30):
        assert np.all(ref <= ref[:, k, None] + ref[None, k, :] + 1e-12)
    E = np.array([[Fraction(0), Fraction(5)], [Fraction(1), Fraction(0)]], dtype=object)
    assert kernels.metric_closure_numpy(E)[0, 1] == 5


@pytest.mark.parametrize("n,m,reach", [(9, 9, 0.25), (12, 7, 0.6), (5, 17, 0.1)])
def test_grid_geodesic_flavours(n, m, reach):
    base = build_grid_line(n, 0, 1)
    rng = np.random.default_rng(n)
    inv_p = 1.0 / (0.5 + rng.random(n))
    K = kernels.fiber_reach_levels(inv_p, m, reach)
    for src in (0, n * m // 2, n * m - 1):
        a = kernels.grid_geodesic_numpy(base.dist, inv_p, m, reach, K, src)
        b = kernels.grid_geodesic(base.dist, inv_p, m, reach, K, src)
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_fiber_reach_levels():
    inv_p = np.ones(4)
    assert kernels.fiber_reach_levels(inv_p, 65, 0.25) == 16
    assert kernels.fiber_reach_levels(inv_p, 65, 0.0) == 1
    assert kernels.fiber_reach_levels(inv_p, 5, 10.0) == 4


def test_fallback_path_runs_without_jit(tmp_path):
    code = (
        "import specwass, numpy as np\n"
        "from specwass import kernels\n"
        "assert not specwass.JIT_ENABLED\n"
        "from specwass.core import *\n"
        "from specwass.solver import solve\n"
        "l = build_grid_line(5, 0, 1)\n"
        "r = solve(CostMatrix.from_space(l), Distribution.point_mass(l, 0), Distribution.uniform(l))\n"
        "assert abs(r.plan.value - 0.5) < 1e-12\n"
        "t = build_two_sheet(l, 2.0, 5)\n"
        "assert t.distance(t.node(0, 0), t.node(0, 4)) == 0.5\n"
        "print('ok')\n"
    )
    env = dict(os.environ, SPECWASS_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"
