"""Hot loops: transportation simplex, metric closure, product-grid geodesics.

Each kernel exists in two flavours. The numba-compiled one is used when
:data:`specwass._jit.JIT_ENABLED` is true; otherwise the pure Python/numpy
fallback runs. ``benchmarks/bench_kernels.py`` times both.

The transportation simplex is written so that the *same* source also runs on
``dtype=object`` arrays of :class:`fractions.Fraction`; that is how the exact
rational mode of :mod:`specwass.solver` works.
"""
import numpy as np

from ._jit import JIT_ENABLED, jit

__all__ = [
    "transport_simplex",
    "transport_simplex_py",
    "metric_closure",
    "metric_closure_numpy",
    "grid_geodesic",
    "grid_geodesic_numpy",
    "fiber_reach_levels",
]

# status codes returned by the simplex
OPTIMAL = 0
ITERATION_LIMIT = 1


def transport_simplex_py(C, a, b, eps, bi, bj, flow, u, v):
    """Balanced transportation problem by primal network simplex.

    Minimises ``sum C[i, j] x[i, j]`` subject to row sums ``a`` and column
    sums ``b`` (``sum(a) == sum(b)``). The basis is a spanning tree of the
    complete bipartite graph with ``n1 + n2 - 1`` arcs, stored in
    ``bi``/``bj``/``flow``; ``u``/``v`` receive the node prices with
    ``u[0] = 0`` and ``u[i] + v[j] = C[i, j]`` on tree arcs.

    Start: north-west corner rule. Pricing: block search, switching to
    Bland's rule after a run of degenerate pivots (anti-cycling).

    Returns ``(status, pivots)``.
    """
    n1 = C.shape[0]
    n2 = C.shape[1]
    nn = n1 + n2
    N = nn - 1
    zero = C[0, 0] - C[0, 0]

    # north-west corner
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(N):
        x = ra[i] if ra[i] <= rb[j] else rb[j]
        if x < zero:
            x = zero
        bi[k] = i
        bj[k] = j
        flow[k] = x
        ra[i] = ra[i] - x
        rb[j] = rb[j] - x
        if i == n1 - 1:
            j += 1
        elif j == n2 - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    deg = np.zeros(nn, dtype=np.int64)
    start = np.zeros(nn + 1, dtype=np.int64)
    fill = np.zeros(nn, dtype=np.int64)
    adj = np.zeros(2 * N, dtype=np.int64)
    parent = np.zeros(nn, dtype=np.int64)
    parc = np.zeros(nn, dtype=np.int64)
    depth = np.zeros(nn, dtype=np.int64)
    queue = np.zeros(nn, dtype=np.int64)
    seen = np.zeros(nn, dtype=np.bool_)
    path_p = np.zeros(nn, dtype=np.int64)
    path_q = np.zeros(nn, dtype=np.int64)
    cycle = np.zeros(nn, dtype=np.int64)

    total = n1 * n2
    block = int(np.sqrt(total))
    if block < 16:
        block = 16
    cursor = 0
    degenerate_run = 0
    bland = False
    max_pivots = 50 * total + 10 * nn + 1000
    pivots = 0
    status = ITERATION_LIMIT

    while pivots <= max_pivots:
        # rebuild tree adjacency, BFS order and node prices
        for t in range(nn):
            deg[t] = 0
            fill[t] = 0
            seen[t] = False
        for k in range(N):
            deg[bi[k]] += 1
            deg[n1 + bj[k]] += 1
        start[0] = 0
        for t in range(nn):
            start[t + 1] = start[t] + deg[t]
        for k in range(N):
            r = bi[k]
            c = n1 + bj[k]
            adj[start[r] + fill[r]] = k
            fill[r] += 1
            adj[start[c] + fill[c]] = k
            fill[c] += 1
        u[0] = zero
        parent[0] = -1
        parc[0] = -1
        depth[0] = 0
        seen[0] = True
        queue[0] = 0
        head = 0
        tail = 1
        while head < tail:
            node = queue[head]
            head += 1
            for s in range(start[node], start[node + 1]):
                k = adj[s]
                r = bi[k]
                c = n1 + bj[k]
                other = c if node == r else r
                if seen[other]:
                    continue
                seen[other] = True
                parent[other] = node
                parc[other] = k
                depth[other] = depth[node] + 1
                if other >= n1:
                    v[other - n1] = C[r, bj[k]] - u[r]
                else:
                    u[other] = C[r, bj[k]] - v[bj[k]]
                queue[tail] = other
                tail += 1

        # pricing
        enter = -1
        best = zero
        if bland:
            for p in range(total):
                ii = p // n2
                jj = p - ii * n2
                red = C[ii, jj] - u[ii] - v[jj]
                if red < -eps:
                    enter = p
                    break
        else:
            scanned = 0
            p = cursor
            while scanned < total:
                ii = p // n2
                jj = p - ii * n2
                red = C[ii, jj] - u[ii] - v[jj]
                if red < -eps and (enter < 0 or red < best):
                    enter = p
                    best = red
                scanned += 1
                p += 1
                if p == total:
                    p = 0
                if enter >= 0 and scanned % block == 0:
                    break
            cursor = p
        if enter < 0:
            status = OPTIMAL
            break

        ei = enter // n2
        ej = enter - ei * n2
        # tree path between row ei and column ej
        p_node = ei
        q_node = n1 + ej
        np_ = 0
        nq = 0
        while p_node != q_node:
            if depth[p_node] >= depth[q_node]:
                path_p[np_] = parc[p_node]
                np_ += 1
                p_node = parent[p_node]
            else:
                path_q[nq] = parc[q_node]
                nq += 1
                q_node = parent[q_node]
        # cycle from column ej back to row ei; even positions lose flow
        L = 0
        for t in range(nq):
            cycle[L] = path_q[t]
            L += 1
        for t in range(np_ - 1, -1, -1):
            cycle[L] = path_p[t]
            L += 1

        leave = -1
        theta = zero
        for t in range(0, L, 2):
            k = cycle[t]
            if leave < 0 or flow[k] < theta:
                leave = k
                theta = flow[k]
            elif bland and flow[k] == theta:
                if bi[k] * n2 + bj[k] < bi[leave] * n2 + bj[leave]:
                    leave = k

        for t in range(L):
            k = cycle[t]
            if t % 2 == 0:
                flow[k] = flow[k] - theta
            else:
                flow[k] = flow[k] + theta
        bi[leave] = ei
        bj[leave] = ej
        flow[leave] = theta
        pivots += 1

        if theta <= eps:
            degenerate_run += 1
            if degenerate_run > 2 * nn:
                bland = True
        else:
            degenerate_run = 0
            bland = False

    for k in range(N):
        if flow[k] < zero:
            flow[k] = zero
    return status, pivots


_transport_simplex_jit = jit(transport_simplex_py)


def transport_simplex(C, a, b, eps, bi, bj, flow, u, v):
    """Dispatch: compiled kernel for float64 input, Python path otherwise."""
    if JIT_ENABLED and C.dtype == np.float64:
        return _transport_simplex_jit(C, a, b, eps, bi, bj, flow, u, v)
    return transport_simplex_py(C, a, b, eps, bi, bj, flow, u, v)


# ---------------------------------------------------------------------------
# shortest-path closure with zero diagonal


def metric_closure_numpy(D):
    """Floyd-Warshall closure of ``D`` with the diagonal forced to zero.

    Works on float and on ``object`` (Fraction) arrays.
    """
    out = np.array(D, copy=True)
    n = out.shape[0]
    for i in range(n):
        out[i, i] = out[i, i] - out[i, i]
    for k in range(n):
        out = np.minimum(out, out[:, k, None] + out[None, k, :])
    return out


@jit
def _metric_closure_jit(D):
    n = D.shape[0]
    out = D.copy()
    for i in range(n):
        out[i, i] = 0.0
    for k in range(n):
        for i in range(n):
            dik = out[i, k]
            for j in range(n):
                cand = dik + out[k, j]
                if cand < out[i, j]:
                    out[i, j] = cand
    return out


def metric_closure(D):
    if JIT_ENABLED and D.dtype == np.float64:
        return _metric_closure_jit(D)
    return metric_closure_numpy(D)


# ---------------------------------------------------------------------------
# geodesics on the product grid  base x {0, ..., m-1}
#
# node index = level * n + base_index. Edges are generated on the fly:
#   same level          : every base pair, weight base_dist[i, j]
#   adjacent levels     : every base pair (cell sides + diagonals)
#   levels k > 1 apart  : every base pair whose weight is <= reach
# cross-level weight = hypot(base_dist[i, j], k * (inv_p[i] + inv_p[j]) / 2 / (m - 1))


def fiber_reach_levels(inv_p, m, reach):
    """Largest level offset that can carry an edge of length ``<= reach``."""
    if m < 2:
        return 0
    step = float(np.min(inv_p)) / (m - 1)
    if step <= 0.0:
        return m - 1
    K = int(np.floor(reach / step + 1e-12))
    return max(1, min(K, m - 1))


@jit
def _grid_geodesic_jit(base_dist, inv_p, m, reach, K, src):
    n = base_dist.shape[0]
    N = n * m
    dist = np.full(N, np.inf)
    done = np.zeros(N, dtype=np.bool_)
    cap = 4 * N + 16
    hk = np.empty(cap, dtype=np.float64)
    hv = np.empty(cap, dtype=np.int64)
    size = 0
    denom = float(m - 1) if m > 1 else 1.0

    dist[src] = 0.0
    hk[0] = 0.0
    hv[0] = src
    size = 1
    while size > 0:
        # pop min
        dcur = hk[0]
        node = hv[0]
        size -= 1
        if size > 0:
            lk = hk[size]
            lv = hv[size]
            pos = 0
            while True:
                c = 2 * pos + 1
                if c >= size:
                    break
                if c + 1 < size and hk[c + 1] < hk[c]:
                    c += 1
                if hk[c] < lk:
                    hk[pos] = hk[c]
                    hv[pos] = hv[c]
                    pos = c
                else:
                    break
            hk[pos] = lk
            hv[pos] = lv
        if done[node]:
            continue
        done[node] = True
        s = node // n
        i = node - s * n
        lo = s - K
        if lo < 0:
            lo = 0
        hi = s + K
        if hi > m - 1:
            hi = m - 1
        for t in range(lo, hi + 1):
            k = t - s if t >= s else s - t
            for j in range(n):
                if k == 0:
                    if j == i:
                        continue
                    w = base_dist[i, j]
                else:
                    vert = (k * (0.5 * (inv_p[i] + inv_p[j]))) / denom
                    d = base_dist[i, j]
                    if d == 0.0:
                        w = vert
                    else:
                        w = np.sqrt(d * d + vert * vert)
                    if k > 1 and w > reach:
                        continue
                nb = t * n + j
                if done[nb]:
                    continue
                cand = dcur + w
                if cand < dist[nb]:
                    dist[nb] = cand
                    if size == cap:
                        cap2 = 2 * cap
                        hk2 = np.empty(cap2, dtype=np.float64)
                        hv2 = np.empty(cap2, dtype=np.int64)
                        hk2[:size] = hk[:size]
                        hv2[:size] = hv[:size]
                        hk = hk2
                        hv = hv2
                        cap = cap2
                    pos = size
                    size += 1
                    while pos > 0:
                        par = (pos - 1) // 2
                        if hk[par] > cand:
                            hk[pos] = hk[par]
                            hv[pos] = hv[par]
                            pos = par
                        else:
                            break
                    hk[pos] = cand
                    hv[pos] = nb
    return dist


def grid_geodesic_numpy(base_dist, inv_p, m, reach, K, src):
    """Dense O(N^2) Dijkstra; each relaxation step is one vectorised block."""
    base_dist = np.asarray(base_dist, dtype=np.float64)
    inv_p = np.asarray(inv_p, dtype=np.float64)
    n = base_dist.shape[0]
    N = n * m
    denom = float(m - 1) if m > 1 else 1.0
    dist = np.full(N, np.inf)
    done = np.zeros(N, dtype=bool)
    dist[src] = 0.0
    cols = np.arange(n)
    for _ in range(N):
        node = int(np.argmin(np.where(done, np.inf, dist)))
        dcur = dist[node]
        if not np.isfinite(dcur) or done[node]:
            break
        done[node] = True
        s, i = divmod(node, n)
        lo, hi = max(0, s - K), min(m - 1, s + K)
        levels = np.arange(lo, hi + 1)
        k = np.abs(levels - s)[:, None].astype(np.float64)
        d = base_dist[i][None, :]
        vert = (k * (0.5 * (inv_p[i] + inv_p)[None, :])) / denom
        w = np.where(d == 0.0, vert, np.sqrt(d * d + vert * vert))
        w = np.where(k == 0.0, np.broadcast_to(d, w.shape), w)
        keep = (k <= 1.0) | (w <= reach)
        keep &= ~((k == 0.0) & (cols[None, :] == i))
        idx = (levels[:, None] * n + cols[None, :])[keep]
        cand = dcur + w[keep]
        better = cand < dist[idx]
        dist[idx[better]] = cand[better]
    return dist


def grid_geodesic(base_dist, inv_p, m, reach, K, src):
    if JIT_ENABLED:
        return _grid_geodesic_jit(
            np.ascontiguousarray(base_dist, dtype=np.float64),
            np.ascontiguousarray(inv_p, dtype=np.float64),
            int(m), float(reach), int(K), int(src),
        )
    return grid_geodesic_numpy(base_dist, inv_p, m, reach, K, src)
