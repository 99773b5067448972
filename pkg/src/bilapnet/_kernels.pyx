# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def closed_form_bilaplacian(const cnp.int64_t[:, ::1] adj):
    cdef Py_ssize_t n = adj.shape[0]
    cdef Py_ssize_t v, w, z
    cdef cnp.int64_t common
    out = np.zeros((n, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] res = out
    cdef cnp.int64_t[::1] deg = np.zeros(n, dtype=np.int64)
    for v in range(n):
        for z in range(n):
            deg[v] += adj[v, z]
    for v in range(n):
        res[v, v] = deg[v] * deg[v] + deg[v]
        for w in range(v + 1, n):
            common = 0
            for z in range(n):
                common += adj[v, z] * adj[w, z]
            if adj[v, w]:
                common -= deg[v] + deg[w]
            res[v, w] = common
            res[w, v] = common
    return out


cdef bint _mask_connected(int n, cnp.int64_t mask, int[:, ::1] pairs):
    cdef cnp.int64_t[32] nbr
    cdef int k, m = pairs.shape[0]
    cdef cnp.int64_t seen, frontier, nxt, full
    cdef int v
    for v in range(n):
        nbr[v] = 0
    for k in range(m):
        if (mask >> k) & 1:
            nbr[pairs[k, 0]] |= (<cnp.int64_t>1) << pairs[k, 1]
            nbr[pairs[k, 1]] |= (<cnp.int64_t>1) << pairs[k, 0]
    full = ((<cnp.int64_t>1) << n) - 1
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        for v in range(n):
            if (frontier >> v) & 1:
                nxt |= nbr[v]
        frontier = nxt & ~seen
        seen |= nxt
    return seen == full


def connected_edge_masks(int n):
    """Bitmasks (over lexicographic vertex pairs) of all connected graphs."""
    pairs_list = [(i, j) for i in range(n) for j in range(i + 1, n)]
    cdef int m = len(pairs_list)
    cdef int[:, ::1] pairs = np.array(pairs_list, dtype=np.intc).reshape(m, 2)
    cdef cnp.int64_t mask, total = (<cnp.int64_t>1) << m
    found = []
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    for mask in range(total):
        if _mask_connected(n, mask, pairs):
            found.append(mask)
    return np.asarray(found, dtype=np.int64)


def assemble_hermite(const cnp.int64_t[::1] n_elems, const double[::1] lengths):
    cdef Py_ssize_t n_edges = n_elems.shape[0]
    cdef Py_ssize_t e, k, a, b, base, dofs = 0
    for e in range(n_edges):
        dofs += 2 * (n_elems[e] + 1)
    K_out = np.zeros((dofs, dofs))
    M_out = np.zeros((dofs, dofs))
    cdef double[:, ::1] K = K_out
    cdef double[:, ::1] M = M_out
    cdef double h, h2, h3
    cdef double ke[4][4]
    cdef double me[4][4]
    cdef Py_ssize_t offset = 0
    for e in range(n_edges):
        h = lengths[e] / n_elems[e]
        h2 = h * h
        h3 = h2 * h
        ke[0][0] = 12 / h3; ke[0][1] = 6 / h2; ke[0][2] = -12 / h3; ke[0][3] = 6 / h2
        ke[1][1] = 4 / h; ke[1][2] = -6 / h2; ke[1][3] = 2 / h
        ke[2][2] = 12 / h3; ke[2][3] = -6 / h2
        ke[3][3] = 4 / h
        me[0][0] = 156 * h / 420; me[0][1] = 22 * h2 / 420
        me[0][2] = 54 * h / 420; me[0][3] = -13 * h2 / 420
        me[1][1] = 4 * h3 / 420; me[1][2] = 13 * h2 / 420; me[1][3] = -3 * h3 / 420
        me[2][2] = 156 * h / 420; me[2][3] = -22 * h2 / 420
        me[3][3] = 4 * h3 / 420
        for a in range(4):
            for b in range(a):
                ke[a][b] = ke[b][a]
                me[a][b] = me[b][a]
        for k in range(n_elems[e]):
            base = offset + 2 * k
            for a in range(4):
                for b in range(4):
                    K[base + a, base + b] += ke[a][b]
                    M[base + a, base + b] += me[a][b]
        offset += 2 * (n_elems[e] + 1)
    return K_out, M_out


def kernel_sup(const double[:, ::1] phi, const double[::1] weights):
    """max over sample pairs (x, y) of |sum_j w_j phi_j(x) phi_j(y)|."""
    cdef Py_ssize_t n = phi.shape[0], m = phi.shape[1]
    cdef Py_ssize_t x, y, j
    cdef double acc, best = 0.0
    for x in range(n):
        for y in range(x, n):
            acc = 0.0
            for j in range(m):
                acc += weights[j] * phi[x, j] * phi[y, j]
            if fabs(acc) > best:
                best = fabs(acc)
    return best
