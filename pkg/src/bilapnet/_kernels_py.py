"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``.

Every function here has the same signature and return type as its compiled
counterpart; the test suite checks the two agree.
"""

import numpy as np


def closed_form_bilaplacian(adj):
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[0]
    nbrs = [set(np.flatnonzero(adj[v]).tolist()) for v in range(n)]
    out = np.zeros((n, n), dtype=np.int64)
    for v in range(n):
        dv = len(nbrs[v])
        out[v, v] = dv * dv + dv
        for w in range(v + 1, n):
            common = len(nbrs[v] & nbrs[w])
            if w in nbrs[v]:
                common -= dv + len(nbrs[w])
            out[v, w] = out[w, v] = common
    return out


def _mask_connected(n, mask, pairs):
    nbr = [0] * n
    for k, (i, j) in enumerate(pairs):
        if (mask >> k) & 1:
            nbr[i] |= 1 << j
            nbr[j] |= 1 << i
    seen = frontier = 1
    while frontier:
        nxt = 0
        v = 0
        f = frontier
        while f:
            if f & 1:
                nxt |= nbr[v]
            f >>= 1
            v += 1
        frontier = nxt & ~seen
        seen |= nxt
    return seen == (1 << n) - 1


def connected_edge_masks(n):
    """Bitmasks (over lexicographic vertex pairs) of all connected graphs."""
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    found = [m for m in range(1 << len(pairs)) if _mask_connected(n, m, pairs)]
    return np.asarray(found, dtype=np.int64)


def _hermite_blocks(h):
    k = np.array([[12, 6 * h, -12, 6 * h],
                  [6 * h, 4 * h**2, -6 * h, 2 * h**2],
                  [-12, -6 * h, 12, -6 * h],
                  [6 * h, 2 * h**2, -6 * h, 4 * h**2]]) / h**3
    m = np.array([[156, 22 * h, 54, -13 * h],
                  [22 * h, 4 * h**2, 13 * h, -3 * h**2],
                  [54, 13 * h, 156, -22 * h],
                  [-13 * h, -3 * h**2, -22 * h, 4 * h**2]]) * h / 420
    return k, m


def assemble_hermite(n_elems, lengths):
    n_elems = np.asarray(n_elems, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=float)
    dofs = int(np.sum(2 * (n_elems + 1)))
    K = np.zeros((dofs, dofs))
    M = np.zeros((dofs, dofs))
    offset = 0
    for n, ell in zip(n_elems.tolist(), lengths.tolist()):
        ke, me = _hermite_blocks(ell / n)
        for k in range(n):
            sl = slice(offset + 2 * k, offset + 2 * k + 4)
            K[sl, sl] += ke
            M[sl, sl] += me
        offset += 2 * (n + 1)
    return K, M


def kernel_sup(phi, weights):
    """max over sample pairs (x, y) of |sum_j w_j phi_j(x) phi_j(y)|."""
    phi = np.asarray(phi, dtype=float)
    weights = np.asarray(weights, dtype=float)
    best = 0.0
    for x in range(phi.shape[0]):
        row = (phi[x] * weights) @ phi[x:].T
        best = max(best, float(np.max(np.abs(row))))
    return best
