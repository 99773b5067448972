"""Self-adjoint vertex conditions for the bi-Laplacian on a metric graph.

Boundary data live in C^{4E}. For edges e_1..e_E the Dirichlet-type trace is

    u01 = (u(0) | u(l) | -u'(0) | u'(l))

and the Neumann-type trace is

    u32 = (-u'''(0) | u'''(l) | -u''(0) | -u''(l)),

each block of length E in edge order. The third and fourth blocks of ``u01``
are the outward normal derivatives at the two ends.

A condition is either a pair (Y, R), meaning ``u01 in Y`` and
``u32 + R u01 in Y^perp``, or a pair (C, B), meaning ``C u01 + B u32 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateAngle, DimensionMismatch, NotSelfAdjoint, UnsupportedGraphForPreset, ValidationError,
)
from .graphs import MetricGraph

ORTHO_TOL = 1e-12
HERMITIAN_TOL = 1e-12
ANGLE_TOL = 1e-9
PRESETS = ("sliding_kirchhoff", "cont_deriv", "cont_free", "friedrichs", "krein", "kiik")
LEAF_KINDS = ("clamped", "hinged", "sliding", "free")


@dataclass(frozen=True)
class TraceConvention:
    """Index bookkeeping for the 4E-dimensional trace vectors."""

    edge_count: int

    @property
    def dim(self) -> int:
        return 4 * self.edge_count

    def value_slot(self, e: int, end: int) -> int:
        return end * self.edge_count + e

    def derivative_slot(self, e: int, end: int) -> int:
        return 2 * self.edge_count + end * self.edge_count + e

    @staticmethod
    def derivative_sign(end: int) -> int:
        # u01 holds -u'(0) and +u'(l)
        return -1 if end == 0 else 1

    def endpoint_vertices(self, graph) -> np.ndarray:
        """Vertex at each of the 2E endpoint slots (starts first, then ends)."""
        edges = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2)
        return np.concatenate([edges[:, 0], edges[:, 1]])

    def trace01(self, u0, ul, du0, dul) -> np.ndarray:
        return np.concatenate([u0, ul, -np.asarray(du0), dul])

    def trace32(self, d3u0, d3ul, d2u0, d2ul) -> np.ndarray:
        return np.concatenate([-np.asarray(d3u0), d3ul, -np.asarray(d2u0), -np.asarray(d2ul)])


def cv_basis(mg: MetricGraph) -> np.ndarray:
    """Orthonormal basis (2E x V) of endpoint vectors that are constant at each vertex."""
    tc = TraceConvention(mg.edge_count)
    slot_v = tc.endpoint_vertices(mg.graph)
    out = np.zeros((2 * mg.edge_count, mg.vertex_count))
    out[np.arange(slot_v.size), slot_v] = 1.0
    return out / np.sqrt(out.sum(axis=0))


# -- per-vertex specification ------------------------------------------------

def _local_basis(kind, d: int) -> np.ndarray:
    """d x k orthonormal basis of a subspace of C^d named by ``kind``."""
    if isinstance(kind, str):
        if kind == "free":
            return np.eye(d)
        if kind == "zero":
            return np.zeros((d, 0))
        if kind == "continuous":
            return np.ones((d, 1)) / math.sqrt(d)
        if kind == "kirchhoff":
            return linalg.null_space(np.ones((1, d)))
        raise ValidationError(f"unknown local subspace {kind!r}")
    span = np.asarray(kind, dtype=complex).reshape(d, -1)
    return linalg.orth(span) if span.size else np.zeros((d, 0))


@dataclass(frozen=True)
class VertexCondition:
    """Subspaces for the endpoint values and outward derivatives at one vertex.

    Each of ``values`` and ``derivatives`` is ``"free"``, ``"zero"``,
    ``"continuous"`` (all equal), ``"kirchhoff"`` (sum zero), or a matrix whose
    columns span the subspace in the order of the incident slots.
    """

    values: object = "continuous"
    derivatives: object = "kirchhoff"

    def describe(self) -> str:
        def name(k):
            return k if isinstance(k, str) else "custom"
        return f"{name(self.values)}/{name(self.derivatives)}"


def vertex_slots(mg: MetricGraph) -> list[list[int]]:
    """Endpoint slots (indices into C^{2E}) incident with each vertex, in edge order."""
    E = mg.edge_count
    slot_v = TraceConvention(E).endpoint_vertices(mg.graph)
    return [sorted(np.flatnonzero(slot_v == v).tolist(), key=lambda s: s % E)
            for v in range(mg.vertex_count)]


def assemble_vertex_conditions(mg: MetricGraph, local: Sequence[VertexCondition],
                               R_full: np.ndarray | None = None, name: str = "custom",
                               params: dict | None = None) -> "ConditionYR":
    """Global (Y, R) from one VertexCondition per vertex.

    ``R_full`` is a 4E x 4E matrix acting on trace vectors; it is compressed
    to Y.
    """
    if len(local) != mg.vertex_count:
        raise ValidationError(f"need {mg.vertex_count} vertex conditions, got {len(local)}")
    E = mg.edge_count
    slots = vertex_slots(mg)
    cols = []
    for block, attr in ((0, "values"), (2 * E, "derivatives")):
        for v, cond in enumerate(local):
            sub = _local_basis(getattr(cond, attr), len(slots[v]))
            for j in range(sub.shape[1]):
                col = np.zeros(4 * E, dtype=complex)
                col[block + np.array(slots[v])] = sub[:, j]
                cols.append(col)
    Q = np.array(cols).T if cols else np.zeros((4 * E, 0), dtype=complex)
    R = np.zeros((Q.shape[1], Q.shape[1]), dtype=complex)
    if R_full is not None:
        R = Q.conj().T @ np.asarray(R_full, dtype=complex) @ Q
    return ConditionYR(Q, R, name=name, params=dict(params or {}),
                       provenance=tuple(c.describe() for c in local))


# -- the two encodings ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConditionYR:
    """Y by an orthonormal basis (4E x k) and R as a k x k matrix in that basis."""

    Y_basis: np.ndarray
    R: np.ndarray
    name: str = "custom"
    params: dict = field(default_factory=dict)
    provenance: tuple = ()

    def __post_init__(self):
        Q = np.asarray(self.Y_basis, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] % 4:
            raise ValidationError(f"Y_basis must be 4E x k, got shape {Q.shape}")
        R = np.asarray(self.R, dtype=complex).reshape(Q.shape[1], Q.shape[1])
        if np.max(np.abs(Q.conj().T @ Q - np.eye(Q.shape[1])), initial=0.0) > ORTHO_TOL * 10:
            raise ValidationError("Y_basis columns are not orthonormal")
        object.__setattr__(self, "Y_basis", Q)
        object.__setattr__(self, "R", R)

    @property
    def edge_count(self) -> int:
        return self.Y_basis.shape[0] // 4

    @property
    def dim_Y(self) -> int:
        return self.Y_basis.shape[1]

    @property
    def self_adjoint(self) -> bool:
        return bool(np.max(np.abs(self.R - self.R.conj().T), initial=0.0) <= HERMITIAN_TOL)

    def is_dissipative(self, tol: float = 1e-12) -> bool:
        """Re (Rx, x) <= 0 on Y."""
        h = 0.5 * (self.R + self.R.conj().T)
        return bool(h.size == 0 or np.linalg.eigvalsh(h).max() <= tol)

    def R_full(self) -> np.ndarray:
        """R extended by zero on Y^perp, as a 4E x 4E matrix."""
        return self.Y_basis @ self.R @ self.Y_basis.conj().T

    def complement_basis(self) -> np.ndarray:
        if self.dim_Y == 0:
            return np.eye(4 * self.edge_count, dtype=complex)
        return linalg.null_space(self.Y_basis.conj().T)

    def is_real(self, tol: float = 1e-14) -> bool:
        P = self.Y_basis @ self.Y_basis.conj().T
        return bool(np.max(np.abs(P.imag), initial=0.0) <= tol
                    and np.max(np.abs(self.R_full().imag), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class ConditionCB:
    C: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        if C.shape != B.shape or C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] % 4:
            raise ValidationError(f"C and B must both be 4E x 4E, got {C.shape} and {B.shape}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "B", B)

    @property
    def edge_count(self) -> int:
        return self.C.shape[0] // 4

    def rank(self) -> int:
        s = linalg.svdvals(np.hstack([self.C, self.B]))
        return int(np.sum(s > 1e-10 * max(s[0], 1e-300))) if s.size else 0

    def hermitian_defect(self) -> float:
        """max |C B* - B C*|, i.e. the distance of C B* from Hermitian, doubled."""
        cb = self.C @ self.B.conj().T
        return float(np.max(np.abs(cb - cb.conj().T), initial=0.0))

    def check_self_adjoint(self, tol: float = 1e-9) -> None:
        n = self.C.shape[0]
        if self.rank() != n:
            raise NotSelfAdjoint(f"rank([C B]) deficient: {self.rank()} < {n}")
        scale = max(1.0, np.linalg.norm(self.C, 2) * np.linalg.norm(self.B, 2))
        if self.hermitian_defect() > tol * scale:
            raise NotSelfAdjoint(f"CB* not Hermitian (defect {self.hermitian_defect():.3e})")


def yr_to_cb(cond: ConditionYR) -> ConditionCB:
    """B = P_Y and C = R_hat + P_{Y^perp}, where R_hat = Q R Q*."""
    Q = cond.Y_basis
    P = Q @ Q.conj().T
    n = P.shape[0]
    return ConditionCB(C=cond.R_full() + (np.eye(n) - P), B=P)


def cb_to_yr(cb: ConditionCB, tol: float = 1e-9) -> ConditionYR:
    """Y = Rg B*, R = Q* B^+ C Q on Y; raises NotSelfAdjoint on failure."""
    cb.check_self_adjoint(tol)
    _, s, vh = linalg.svd(cb.B)
    r = int(np.sum(s > 1e-10 * max(s[0], 1e-300))) if s.size else 0
    Q = vh[:r].conj().T
    R = Q.conj().T @ linalg.pinv(cb.B, atol=1e-10 * max(s[0], 1e-300) if s.size else 0) @ cb.C @ Q
    R = 0.5 * (R + R.conj().T)
    return ConditionYR(Q, R, name="from_cb")


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AdmissibleTraceSpace:
    """Orthonormal basis (8E x 4E) of admissible pairs (u01, u32)."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def admissible_trace_space(cond) -> AdmissibleTraceSpace:
    if isinstance(cond, ConditionYR):
        Q, Qp = cond.Y_basis, cond.complement_basis()
        n, k = Q.shape
        top = np.hstack([Q, np.zeros((n, n - k))])
        bottom = np.hstack([-Q @ cond.R, Qp])
        basis = linalg.orth(np.vstack([top, bottom]))
    elif isinstance(cond, ConditionCB):
        n = cond.C.shape[0]
        basis = linalg.null_space(np.hstack([cond.C, cond.B]))
    else:
        raise ValidationError(f"not a condition: {type(cond).__name__}")
    if basis.shape[1] != n:
        raise DimensionMismatch(f"admissible trace space has dimension {basis.shape[1]}, expected {n}")
    return AdmissibleTraceSpace(basis)


def largest_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of orthonormal a and b."""
    if a.shape != b.shape:
        return math.pi / 2
    if a.shape[1] == 0:
        return 0.0
    s = np.linalg.norm(b - a @ (a.conj().T @ b), 2)
    return float(math.asin(min(1.0, s)))


def conditions_equal(a, b, tol: float = ANGLE_TOL) -> bool:
    sa, sb = admissible_trace_space(a), admissible_trace_space(b)
    return largest_principal_angle(sa.basis, sb.basis) <= tol


# -- presets ------------------------------------------------------------------

def krein_lambda(mg: MetricGraph) -> np.ndarray:
    """4E x 4E matrix with zero value block and derivative block J L^{-1} J / 2."""
    E = mg.edge_count
    J = np.kron(np.ones((2, 2)), np.eye(E))
    L_inv = np.diag(np.tile(1.0 / np.array(mg.lengths), 2))
    lam0 = 0.5 * J @ L_inv @ J
    out = np.zeros((4 * E, 4 * E))
    out[2 * E:, 2 * E:] = lam0
    return out


def is_three_star(mg: MetricGraph) -> int | None:
    """Centre vertex if the graph is a star with three edges, else None."""
    deg = mg.graph.degrees
    if mg.vertex_count != 4 or mg.edge_count != 3 or sorted(deg.tolist()) != [1, 1, 1, 3]:
        return None
    return int(np.flatnonzero(deg == 3)[0])


_LEAF = {
    "clamped": VertexCondition("zero", "zero"),
    "hinged": VertexCondition("zero", "free"),
    "sliding": VertexCondition("free", "zero"),
    "free": VertexCondition("free", "free"),
}


def preset_conditions(mg: MetricGraph, kind: str, params: dict | None = None) -> ConditionYR:
    """Named vertex conditions.

    ``kiik`` takes ``alpha``, ``beta``, ``gamma`` (angles facing the three
    edges in edge order) and ``leaf`` in {clamped, hinged, sliding, free},
    default ``clamped``.
    """
    params = dict(params or {})
    n = mg.vertex_count
    if kind == "sliding_kirchhoff":
        local = [VertexCondition("continuous", "kirchhoff")] * n
    elif kind == "cont_deriv":
        local = [VertexCondition("continuous", "continuous")] * n
    elif kind == "cont_free":
        local = [VertexCondition("continuous", "free")] * n
    elif kind == "friedrichs":
        local = [VertexCondition("continuous", "zero")] * n
    elif kind == "krein":
        local = [VertexCondition("continuous", "free")] * n
        return assemble_vertex_conditions(mg, local, krein_lambda(mg), kind, params)
    elif kind == "kiik":
        return _kiik(mg, params)
    else:
        raise ValidationError(f"unknown preset {kind!r}; choose from {', '.join(PRESETS)}")
    return assemble_vertex_conditions(mg, local, None, kind, params)


def _kiik(mg, params):
    centre = is_three_star(mg)
    if centre is None:
        raise UnsupportedGraphForPreset("kiik conditions need a star with three edges")
    try:
        angles = [float(params[k]) for k in ("alpha", "beta", "gamma")]
    except KeyError as exc:
        raise ValidationError(f"kiik needs parameter {exc.args[0]!r}") from None
    sines = np.sin(angles)
    if np.any(np.abs(sines) < 1e-12):
        raise DegenerateAngle(f"angles {angles} include a multiple of pi")
    leaf = params.get("leaf", "clamped")
    if leaf not in _LEAF:
        raise ValidationError(f"leaf must be one of {LEAF_KINDS}, got {leaf!r}")
    # the centre's slots are ordered by edge index, matching alpha, beta, gamma
    deriv = linalg.null_space(sines.reshape(1, 3))
    local = [VertexCondition("continuous", deriv) if v == centre else _LEAF[leaf]
             for v in range(mg.vertex_count)]
    return assemble_vertex_conditions(mg, local, None, "kiik",
                                      {"alpha": angles[0], "beta": angles[1],
                                       "gamma": angles[2], "leaf": leaf})
