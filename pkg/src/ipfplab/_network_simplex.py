"""Transportation-problem network simplex (numba kernel).

Nodes 0..m-1 are sources, m..m+n-1 sinks. The basis is a spanning tree of
m+n-1 cells; duals satisfy ``u[i] + v[j] = C[i, j]`` on basic cells.
Entering cell: most negative reduced cost (Dantzig). With integer supplies
and integer costs held in float64 every quantity stays an exact integer.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
MAX_PIVOTS = 1


@njit(cache=True)
def _least_cost_start(a, b, C, bi, bj, x):
    """Matrix-minimum basic solution; each allocation retires exactly one line."""
    m, n = a.shape[0], b.shape[0]
    ra = a.copy()
    rb = b.copy()
    row_done = np.zeros(m, np.bool_)
    col_done = np.zeros(n, np.bool_)
    rows_left = m
    cols_left = n
    order = np.argsort(C.ravel(), kind="mergesort")
    k = 0
    for t in range(order.shape[0]):
        if k == m + n - 1:
            break
        i = order[t] // n
        j = order[t] % n
        if row_done[i] or col_done[j]:
            continue
        q = min(ra[i], rb[j])
        bi[k] = i
        bj[k] = j
        x[k] = q
        k += 1
        ra[i] -= q
        rb[j] -= q
        if (ra[i] <= rb[j] and rows_left > 1) or cols_left == 1:
            row_done[i] = True
            rows_left -= 1
        else:
            col_done[j] = True
            cols_left -= 1


@njit(cache=True)
def transport_simplex(a, b, C, tol, max_pivots):
    """Solve min <C, X> s.t. X 1 = a, X^T 1 = b, X >= 0.

    Returns (bi, bj, x, pot, status, pivots); ``pot[:m]`` are source duals
    and ``pot[m:]`` sink duals.
    """
    m, n = a.shape[0], b.shape[0]
    nn = m + n
    nb = nn - 1
    bi = np.empty(nb, np.int64)
    bj = np.empty(nb, np.int64)
    x = np.empty(nb, np.float64)
    _least_cost_start(a, b, C, bi, bj, x)

    deg = np.empty(nn, np.int64)
    start = np.empty(nn + 1, np.int64)
    fill = np.empty(nn, np.int64)
    adj = np.empty(2 * nb, np.int64)
    pot = np.empty(nn, np.float64)
    parent_node = np.empty(nn, np.int64)
    parent_edge = np.empty(nn, np.int64)
    depth = np.empty(nn, np.int64)
    queue = np.empty(nn, np.int64)
    path_a = np.empty(nn, np.int64)
    path_b = np.empty(nn, np.int64)

    status = MAX_PIVOTS
    pivots = 0
    while pivots <= max_pivots:
        deg[:] = 0
        for k in range(nb):
            deg[bi[k]] += 1
            deg[m + bj[k]] += 1
        start[0] = 0
        for v in range(nn):
            start[v + 1] = start[v] + deg[v]
            fill[v] = start[v]
        for k in range(nb):
            adj[fill[bi[k]]] = k
            fill[bi[k]] += 1
            adj[fill[m + bj[k]]] = k
            fill[m + bj[k]] += 1

        # duals and rooted tree from source 0
        depth[:] = -1
        pot[0] = 0.0
        depth[0] = 0
        parent_node[0] = -1
        parent_edge[0] = -1
        head = 0
        tail = 1
        queue[0] = 0
        while head < tail:
            v = queue[head]
            head += 1
            for t in range(start[v], start[v + 1]):
                k = adj[t]
                w = m + bj[k] if v < m else bi[k]
                if depth[w] < 0:
                    pot[w] = C[bi[k], bj[k]] - pot[v]
                    depth[w] = depth[v] + 1
                    parent_node[w] = v
                    parent_edge[w] = k
                    queue[tail] = w
                    tail += 1

        best = -tol
        p = -1
        q = -1
        for i in range(m):
            ui = pot[i]
            for j in range(n):
                r = C[i, j] - ui - pot[m + j]
                if r < best:
                    best = r
                    p = i
                    q = j
        if p < 0:
            status = OPTIMAL
            break
        if pivots == max_pivots:
            break
        pivots += 1

        # tree path between sink q and source p; the cycle closes through (p, q)
        na = 0
        nbp = 0
        va = m + q
        vb = p
        while depth[va] > depth[vb]:
            path_a[na] = parent_edge[va]
            na += 1
            va = parent_node[va]
        while depth[vb] > depth[va]:
            path_b[nbp] = parent_edge[vb]
            nbp += 1
            vb = parent_node[vb]
        while va != vb:
            path_a[na] = parent_edge[va]
            na += 1
            va = parent_node[va]
            path_b[nbp] = parent_edge[vb]
            nbp += 1
            vb = parent_node[vb]

        # odd positions counted from either endpoint lose flow
        theta = np.inf
        leave = -1
        for t in range(0, na, 2):
            k = path_a[t]
            if x[k] < theta:
                theta = x[k]
                leave = k
        for t in range(0, nbp, 2):
            k = path_b[t]
            if x[k] < theta:
                theta = x[k]
                leave = k
        for t in range(na):
            k = path_a[t]
            x[k] = x[k] - theta if t % 2 == 0 else x[k] + theta
        for t in range(nbp):
            k = path_b[t]
            x[k] = x[k] - theta if t % 2 == 0 else x[k] + theta
        bi[leave] = p
        bj[leave] = q
        x[leave] = theta

    return bi, bj, x, pot, status, pivots
