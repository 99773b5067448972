"""Hermite-cubic finite elements for the bi-Laplacian on a metric graph.

Each edge is cut into ``n_e`` equal elements; every mesh node carries the value
and the first derivative (w.r.t. the edge coordinate). Vertex coupling enters
only through the trace map ``T`` and the subspace Y: the reduced space is
``{x : T x in Y}``, parametrised by an explicit basis ``Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from . import _backend
from .conditions import ConditionYR, TraceConvention
from .errors import (
    AmbiguousGap, ConditionGraphMismatch, NegativeTime, NonpositiveLength, NonpositiveTime,
    SolverFailure, ValidationError,
)
from .graphs import MetricGraph

GAP_RATIO = 1e3
KERNEL_REL_TOL = 1e-7
GAUSS_POINTS = 5


def hermite_shape(xi, h: float, deriv: int = 0) -> np.ndarray:
    """Cubic Hermite shape functions (or a derivative) at local points ``xi`` in [0, 1].

    Returns an array of shape (len(xi), 4) for dofs (w0, theta0, w1, theta1).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    one, z = np.ones_like(xi), np.zeros_like(xi)
    if deriv == 0:
        cols = [1 - 3 * xi**2 + 2 * xi**3, h * (xi - 2 * xi**2 + xi**3),
                3 * xi**2 - 2 * xi**3, h * (xi**3 - xi**2)]
    elif deriv == 1:
        cols = [(-6 * xi + 6 * xi**2) / h, 1 - 4 * xi + 3 * xi**2,
                (6 * xi - 6 * xi**2) / h, 3 * xi**2 - 2 * xi]
    elif deriv == 2:
        cols = [(-6 + 12 * xi) / h**2, (-4 + 6 * xi) / h,
                (6 - 12 * xi) / h**2, (-2 + 6 * xi) / h]
    elif deriv == 3:
        cols = [12 / h**3 * one, 6 / h**2 * one, -12 / h**3 * one, 6 / h**2 * one]
    elif deriv >= 4:
        cols = [z, z, z, z]
    else:
        raise ValidationError("deriv must be >= 0")
    return np.stack(cols, axis=-1)


def hermite_element_matrices(h: float) -> tuple[np.ndarray, np.ndarray]:
    """Bending stiffness and consistent mass of one element of length ``h``."""
    if not h > 0:
        raise NonpositiveLength(f"element length must be positive, got {h}")
    from ._kernels_py import _hermite_blocks
    return _hermite_blocks(float(h))


@dataclass(frozen=True)
class Mesh:
    n_elems: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(k) for k in self.n_elems)
        if any(k < 1 for k in n):
            raise ValidationError("every edge needs at least one element")
        object.__setattr__(self, "n_elems", n)

    @classmethod
    def uniform(cls, mg: MetricGraph, n: int) -> "Mesh":
        return cls((int(n),) * mg.edge_count)

    def element_lengths(self, mg: MetricGraph) -> np.ndarray:
        return np.array(mg.lengths) / np.array(self.n_elems)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering: edge blocks in edge order, node-major, (value, slope) per node."""

    mg: MetricGraph
    mesh: Mesh

    @property
    def offsets(self) -> np.ndarray:
        sizes = 2 * (np.array(self.mesh.n_elems) + 1)
        return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)

    @property
    def size(self) -> int:
        return int(sum(2 * (n + 1) for n in self.mesh.n_elems))

    def boundary(self) -> tuple[np.ndarray, np.ndarray]:
        """Dof index and sign feeding each of the 4E trace slots."""
        E = self.mg.edge_count
        tc = TraceConvention(E)
        dof = np.zeros(4 * E, dtype=int)
        sign = np.zeros(4 * E)
        for e, (off, n) in enumerate(zip(self.offsets, self.mesh.n_elems)):
            for end, node in ((0, 0), (1, n)):
                dof[tc.value_slot(e, end)] = off + 2 * node
                sign[tc.value_slot(e, end)] = 1.0
                dof[tc.derivative_slot(e, end)] = off + 2 * node + 1
                sign[tc.derivative_slot(e, end)] = tc.derivative_sign(end)
        return dof, sign

    def trace_matrix(self) -> np.ndarray:
        dof, sign = self.boundary()
        T = np.zeros((dof.size, self.size))
        T[np.arange(dof.size), dof] = sign
        return T

    def nodes(self) -> list[tuple[int, float, int]]:
        """(edge, position, value dof) for every mesh node, edge by edge."""
        out = []
        for e, (off, n, ell) in enumerate(zip(self.offsets, self.mesh.n_elems, self.mg.lengths)):
            for i in range(n + 1):
                out.append((e, ell * i / n, off + 2 * i))
        return out


@dataclass(eq=False)
class ReducedSystem:
    mg: MetricGraph
    mesh: Mesh
    K: np.ndarray
    M: np.ndarray
    Z: np.ndarray
    K_full: np.ndarray
    M_full: np.ndarray
    T: np.ndarray | None = None
    condition: ConditionYR | None = None
    order: int = 4
    value_dofs: np.ndarray | None = None
    positions: list[tuple[int, float]] = field(default_factory=list)

    @property
    def r(self) -> int:
        return self.K.shape[0]

    def node_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal function values for reduced coefficient vector(s) (columns)."""
        return (self.Z @ coeffs)[self.value_dofs]


def assemble(mg: MetricGraph, mesh: Mesh, cond: ConditionYR) -> ReducedSystem:
    """Reduced stiffness and mass on ``{x : T x in Y}`` with the boundary term -R."""
    if cond.edge_count != mg.edge_count or len(mesh.n_elems) != mg.edge_count:
        raise ConditionGraphMismatch(
            f"condition on {cond.edge_count} edges, mesh on {len(mesh.n_elems)}, graph has {mg.edge_count}")
    dm = DofMap(mg, mesh)
    K_full, M_full = _backend.assemble_hermite(np.array(mesh.n_elems, dtype=np.int64),
                                               np.array(mg.lengths, dtype=float))
    dof, sign = dm.boundary()
    interior = np.setdiff1d(np.arange(dm.size), dof)
    real = cond.is_real()
    Q = cond.Y_basis.real if real else cond.Y_basis
    R = cond.R.real if real else cond.R
    Z = np.zeros((dm.size, interior.size + cond.dim_Y), dtype=float if real else complex)
    Z[interior, np.arange(interior.size)] = 1.0
    # T x = Q a  <=>  x[dof] = sign * (Q a)
    Z[dof, interior.size:] = sign[:, None] * Q
    K = Z.conj().T @ K_full @ Z
    K[interior.size:, interior.size:] -= R
    M = Z.conj().T @ M_full @ Z
    nodes = dm.nodes()
    return ReducedSystem(
        mg=mg, mesh=mesh, K=0.5 * (K + K.conj().T), M=0.5 * (M + M.conj().T), Z=Z,
        K_full=K_full, M_full=M_full, T=dm.trace_matrix(), condition=cond, order=4,
        value_dofs=np.array([n[2] for n in nodes]), positions=[(n[0], n[1]) for n in nodes],
    )


def assemble_laplacian_ck(mg: MetricGraph, mesh: Mesh) -> ReducedSystem:
    """P1 elements for -u'' with continuity at vertices (Kirchhoff holds naturally)."""
    V = mg.vertex_count
    n_el = mesh.n_elems
    blocks = []  # per edge: global index of each node
    nxt = V
    for (s, t), n in zip(mg.edges, n_el):
        idx = [s] + list(range(nxt, nxt + n - 1)) + [t]
        nxt += n - 1
        blocks.append(idx)
    full = sum(n + 1 for n in n_el)
    K_full = np.zeros((full, full))
    M_full = np.zeros((full, full))
    Z = np.zeros((full, nxt))
    off = 0
    positions = []
    for e, (idx, n, ell) in enumerate(zip(blocks, n_el, mg.lengths)):
        h = ell / n
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
        me = np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6
        for k in range(n):
            sl = slice(off + k, off + k + 2)
            K_full[sl, sl] += ke
            M_full[sl, sl] += me
        Z[off + np.arange(n + 1), idx] = 1.0
        positions += [(e, ell * i / n) for i in range(n + 1)]
        off += n + 1
    return ReducedSystem(mg=mg, mesh=mesh, K=Z.T @ K_full @ Z, M=Z.T @ M_full @ Z, Z=Z,
                         K_full=K_full, M_full=M_full, order=2,
                         value_dofs=np.arange(full), positions=positions)


@dataclass(eq=False)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray  # reduced coefficients, M_Y-orthonormal columns
    system: ReducedSystem

    @property
    def k(self) -> int:
        return self.values.size

    def node_values(self) -> np.ndarray:
        return self.system.node_values(self.vectors)


def eigensolve(system: ReducedSystem, k: int | None = None) -> EigenDecomposition:
    """The ``k`` smallest generalized eigenpairs (all of them by default)."""
    r = system.r
    k = r if k is None else int(k)
    if not 1 <= k <= r:
        raise ValidationError(f"k must lie in 1..{r}, got {k}")
    try:
        w, v = linalg.eigh(system.K, system.M, subset_by_index=[0, k - 1])
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(f"generalized eigensolve failed: {exc}") from exc
    return EigenDecomposition(w, v, system)


def kernel_dimension(system: ReducedSystem, eig: EigenDecomposition | None = None) -> int:
    """Number of eigenvalues in the cluster at zero.

    The cluster is everything below ``1e-7 * max(1, lambda_c)``, where
    ``lambda_c`` is the first eigenvalue clearly off zero. The noise floor for
    "clearly off zero" scales with the largest eigenvalue, since a dense
    solve resolves zero only up to about eps * lambda_max.
    """
    eig = eig if eig is not None and eig.k == system.r else eigensolve(system)
    lam = eig.values
    noise = 1e3 * np.finfo(float).eps * max(abs(lam[-1]), abs(lam[0]), 1.0)
    off = np.flatnonzero(lam > noise)
    if off.size == 0:
        return int(lam.size)
    lam_c = lam[off[0]]
    tau = max(KERNEL_REL_TOL * max(1.0, lam_c), noise)
    count = int(np.sum(lam < tau))
    small = np.abs(lam[:count]).max() if count else 0.0
    nxt = lam[count] if count < lam.size else np.inf
    if count and nxt < GAP_RATIO * max(small, noise):
        raise AmbiguousGap(f"no {GAP_RATIO:g} gap between kernel cluster ({small:.3e}) and {nxt:.3e}")
    if count == 0 and lam[0] < GAP_RATIO * noise:
        raise AmbiguousGap(f"lowest eigenvalue {lam[0]:.3e} is too close to the noise floor")
    return count


# -- initial data and evolution ------------------------------------------------

def load_vector(system: ReducedSystem, f: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
    """Full-space vector of integrals of f against each shape function (Gauss rule)."""
    xg, wg = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    xi, wq = (xg + 1) / 2, wg / 2
    b = np.zeros(system.K_full.shape[0], dtype=complex if system.K.dtype.kind == "c" else float)
    if system.order == 2:
        off = 0
        for e, (n, ell) in enumerate(zip(system.mesh.n_elems, system.mg.lengths)):
            h = ell / n
            shape = np.stack([1 - xi, xi], axis=-1)
            for k in range(n):
                fx = np.asarray(f(e, h * (k + xi)))
                b[off + k: off + k + 2] += h * (wq * fx) @ shape
            off += n + 1
        return b
    dm = DofMap(system.mg, system.mesh)
    for e, (off, n, ell) in enumerate(zip(dm.offsets, system.mesh.n_elems, system.mg.lengths)):
        h = ell / n
        shape = hermite_shape(xi, h)
        for k in range(n):
            fx = np.asarray(f(e, h * (k + xi)))
            b[off + 2 * k: off + 2 * k + 4] += h * (wq * fx) @ shape
    return b


def as_edge_function(system: ReducedSystem, f0) -> Callable:
    """Accept a callable ``f(e, x)`` or per-edge nodal samples (linearly interpolated)."""
    if callable(f0):
        return f0
    samples = [np.asarray(s, dtype=float) for s in f0]
    if len(samples) != system.mg.edge_count:
        raise ValidationError("need one sample array per edge")
    grids = [np.linspace(0, ell, s.size) for s, ell in zip(samples, system.mg.lengths)]
    return lambda e, x: np.interp(x, grids[e], samples[e])


def project(system: ReducedSystem, f0) -> np.ndarray:
    """M-orthogonal projection of f0 onto the reduced space (coefficients)."""
    b = system.Z.conj().T @ load_vector(system, as_edge_function(system, f0))
    return linalg.solve(system.M, b, assume_a="pos" if system.M.dtype.kind == "f" else "her")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray  # (len(times), r)
    system: ReducedSystem

    def node_values(self) -> np.ndarray:
        """(len(times), n_nodes) nodal function values."""
        return self.system.node_values(self.coeffs.T).T

    def mean(self, i: int) -> float:
        """Integral of u(t_i) divided by the total length."""
        ones = project(self.system, lambda e, x: np.ones_like(x))
        total = self.system.mg.total_length
        return float(np.real(np.vdot(ones, self.system.M @ self.coeffs[i]))) / total


def evolve(system: ReducedSystem, f0, times: Sequence[float],
           eig: EigenDecomposition | None = None, modes: int | None = None) -> Trajectory:
    """u(t) = sum_j exp(-lambda_j t) (f0, phi_j) phi_j over the computed modes."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise NegativeTime("times must be >= 0")
    eig = eig if eig is not None else eigensolve(system, modes)
    b = system.Z.conj().T @ load_vector(system, as_edge_function(system, f0))
    amp = eig.vectors.conj().T @ b
    decay = np.exp(-np.outer(times, eig.values))
    return Trajectory(times, (decay * amp) @ eig.vectors.T, system)


def kernel_sup_bound(system: ReducedSystem, t: float, eig: EigenDecomposition | None = None) -> float:
    """max over mesh nodes x, y of |sum_j exp(-lambda_j t) phi_j(x) phi_j(y)|."""
    if not t > 0:
        raise NonpositiveTime(f"t must be positive, got {t}")
    eig = eig if eig is not None else eigensolve(system)
    phi = np.ascontiguousarray(np.real(eig.node_values()))
    w = np.ascontiguousarray(np.exp(-t * eig.values))
    return float(_backend.kernel_sup(phi, w))


# -- traces of a discrete solution ---------------------------------------------

def traces(system: ReducedSystem, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(u01, u32) of the finite element function, from the end elements."""
    if system.order != 4:
        raise ValidationError("traces need the Hermite system")
    x = system.Z @ coeffs
    dm = DofMap(system.mg, system.mesh)
    E = system.mg.edge_count
    vals = np.zeros((4, E), dtype=x.dtype)  # u(0), u(l), u'(0), u'(l)
    d2 = np.zeros((2, E), dtype=x.dtype)
    d3 = np.zeros((2, E), dtype=x.dtype)
    for e, (off, n, ell) in enumerate(zip(dm.offsets, system.mesh.n_elems, system.mg.lengths)):
        h = ell / n
        first, last = x[off: off + 4], x[off + 2 * n - 2: off + 2 * n + 2]
        vals[:, e] = x[off], x[off + 2 * n], x[off + 1], x[off + 2 * n + 1]
        d2[0, e] = hermite_shape(0.0, h, 2)[0] @ first
        d2[1, e] = hermite_shape(1.0, h, 2)[0] @ last
        d3[0, e] = hermite_shape(0.0, h, 3)[0] @ first
        d3[1, e] = hermite_shape(1.0, h, 3)[0] @ last
    tc = TraceConvention(E)
    return (tc.trace01(vals[0], vals[1], vals[2], vals[3]),
            tc.trace32(d3[0], d3[1], d2[0], d2[1]))


def natural_condition_residual(system: ReducedSystem, coeffs: np.ndarray) -> float:
    """|P_Y (u32 + R u01)| / |u32|: how far the weakly imposed conditions are from holding."""
    u01, u32 = traces(system, coeffs)
    cond = system.condition
    q = cond.Y_basis
    res = q @ (q.conj().T @ (u32 + cond.R_full() @ u01))
    return float(np.linalg.norm(res) / max(np.linalg.norm(u32), 1e-300))
