"""Discrete Laplacian, its square, and the heat semigroup of the square."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import linalg, optimize

from . import _backend
from .errors import EmptyGrid, InvalidExponent, NegativeTime, NotApplicable, ValidationError
from .graphs import Graph, incidence_matrix
from .transition import TransitionResult, find_transition_time

POSITIVITY_TOL = 1e-10
DEFAULT_T_GRID = np.geomspace(1e-3, 10.0, 60)


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Real symmetric matrix with a lazily computed spectral decomposition.

    ``matrix`` keeps its dtype, so integer operators stay exact.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"operator must be square, got shape {a.shape}")
        scale = max(float(np.max(np.abs(a))) if a.size else 0.0, 1.0)
        if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * scale:
            raise ValidationError("operator matrix is not symmetric")
        object.__setattr__(self, "matrix", a)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eig(self):
        return linalg.eigh(self.matrix.astype(float))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eig[1]

    def reconstruction_error(self) -> float:
        w, q = self._eig
        return float(np.max(np.abs((q * w) @ q.T - self.matrix)))

    def __matmul__(self, other):
        return self.matrix @ other


def laplacian(graph: Graph) -> SymmetricOperator:
    inc = incidence_matrix(graph)
    return SymmetricOperator(inc @ inc.T)


def bilaplacian_closed_form(graph: Graph) -> SymmetricOperator:
    """Square of the Laplacian built entrywise from degrees and common neighbours."""
    return SymmetricOperator(_backend.closed_form_bilaplacian(
        np.ascontiguousarray(graph.adjacency(), dtype=np.int64)))


def discrete_semigroup(op: SymmetricOperator, t: float) -> np.ndarray:
    """``exp(-t op)`` through the eigendecomposition."""
    if t < 0:
        raise NegativeTime(f"t must be >= 0, got {t}")
    w, q = op.eigenvalues, op.eigenvectors
    out = (q * np.exp(-t * w)) @ q.T
    return 0.5 * (out + out.T)


def linf_generator_row_condition(op) -> np.ndarray:
    """Row v passes when the off-diagonal absolute sum does not exceed the diagonal."""
    a = np.asarray(op.matrix if isinstance(op, SymmetricOperator) else op)
    diag = np.diag(a)
    off = np.sum(np.abs(a), axis=1) - np.abs(diag)
    return off <= diag


@dataclass
class MarkovReport:
    is_complete: bool
    positive_all_t: bool
    linf_contractive: bool
    min_entry: float
    max_row_sum: float
    rows_passing: list[bool]
    samples: list[tuple[float, float, float]] = field(default_factory=list, repr=False)

    @property
    def consistent(self) -> bool:
        return self.is_complete == self.positive_all_t == self.linf_contractive


def markov_character(graph: Graph, t_grid: Sequence[float] | None = None,
                     tol: float = POSITIVITY_TOL) -> MarkovReport:
    """Compare completeness with positivity and l-infinity contractivity on a time grid.

    ``samples`` holds ``(t, min_entry, row_sup_norm)`` per grid point.
    """
    ts = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    if ts.size == 0:
        raise EmptyGrid("t_grid is empty")
    if np.any(ts <= 0) or not np.all(np.isfinite(ts)):
        raise ValidationError("t_grid entries must be positive and finite")
    op = bilaplacian_closed_form(graph)
    rows = linf_generator_row_condition(op)
    w, q = op.eigenvalues, op.eigenvectors
    # exp(-t op) for every t at once: (T, V, V)
    stack = np.einsum("ij,tj,kj->tik", q, np.exp(-np.outer(ts, w)), q)
    mins = stack.min(axis=(1, 2))
    rows_sup = np.abs(stack).sum(axis=2).max(axis=1)
    samples = [(float(t), float(a), float(b)) for t, a, b in zip(ts, mins, rows_sup)]
    min_entry = min(x[1] for x in samples)
    max_row = max(x[2] for x in samples)
    return MarkovReport(
        is_complete=graph.is_complete(),
        positive_all_t=min_entry >= -tol,
        linf_contractive=bool(rows.all()) and max_row <= 1 + tol,
        min_entry=min_entry,
        max_row_sum=max_row,
        rows_passing=rows.tolist(),
        samples=samples,
    )


@dataclass
class DissipativityReport:
    p: float
    f: np.ndarray
    kappa: float
    sign: str  # "positive" | "negative" | "zero"


def signed_power(f: np.ndarray, p: float) -> np.ndarray:
    """|f|^(p-2) f, set to 0 where f vanishes."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    nz = f != 0
    out[nz] = np.abs(f[nz]) ** (p - 2) * f[nz]
    return out


def _kappa_value(lap: np.ndarray, f: np.ndarray, p: float) -> float:
    return float((lap @ f) @ (lap @ signed_power(f, p)))


def kappa(graph: Graph, f, p: float) -> DissipativityReport:
    """kappa_f(p) = (L f, L |f|^(p-2) f)."""
    if not p > 1:
        raise InvalidExponent(f"p must exceed 1, got {p}")
    f = np.asarray(f, dtype=float)
    if f.shape != (graph.vertex_count,):
        raise ValidationError(f"f must have {graph.vertex_count} entries")
    lap = laplacian(graph).matrix.astype(float)
    k = _kappa_value(lap, f, p)
    scale = float(np.sum(np.abs(lap @ f)) * np.sum(np.abs(lap @ signed_power(f, p))))
    if abs(k) <= 1e-12 * max(scale, 1e-300) or k == 0:
        sign = "zero"
    else:
        sign = "positive" if k > 0 else "negative"
    return DissipativityReport(float(p), f, k, sign)


@dataclass
class ScanResult:
    p: float | None
    witness: np.ndarray | None
    kappa: float | None
    # minimum found at each scanned p, in grid order
    minima: list[tuple[float, float]] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.p is not None


def lp_dissipativity_scan(graph: Graph, p_grid: Sequence[float], trials: int = 200,
                          seed: int = 42, refine: int = 5) -> ScanResult:
    """Search for f with kappa_f(p) < 0, stopping at the first p that has one.

    Random unit vectors are scored, and the ``refine`` best are polished with
    Nelder-Mead on the sphere. Not finding a witness says nothing about
    contractivity.
    """
    ps = [float(p) for p in p_grid]
    if any(p <= 2 for p in ps) or ps != sorted(ps):
        raise ValidationError("p_grid must be ascending and lie in (2, inf)")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    lap = laplacian(graph).matrix.astype(float)
    n = graph.vertex_count
    rng = np.random.default_rng(seed)
    minima = []
    for p in ps:
        def obj(x):
            nx = np.linalg.norm(x)
            return _kappa_value(lap, x / nx, p) if nx > 0 else 0.0

        starts = rng.standard_normal((trials, n))
        scores = np.array([obj(x) for x in starts])
        best_val, best_x = math.inf, None
        for i in np.argsort(scores)[:refine]:
            res = optimize.minimize(obj, starts[i], method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            for val, x in ((res.fun, res.x), (scores[i], starts[i])):
                if val < best_val:
                    best_val, best_x = float(val), x / np.linalg.norm(x)
        minima.append((p, best_val))
        if best_val < -POSITIVITY_TOL:
            return ScanResult(p, best_x, best_val, minima)
    return ScanResult(None, None, None, minima)


@dataclass
class GapReport:
    lambda2: float
    lower: float
    upper: float
    within: bool
    spectral_mapping_error: float

    @property
    def spectral_mapping_ok(self) -> bool:
        return self.spectral_mapping_error <= 1e-9


def spectral_gap_bounds_check(graph: Graph) -> GapReport:
    n = graph.vertex_count
    if n < 2:
        raise ValidationError("a spectral gap needs at least two vertices")
    sq = bilaplacian_closed_form(graph).eigenvalues
    lap = laplacian(graph).eigenvalues
    mapped = np.sort(lap**2)
    lam2 = float(sq[1])
    lower = 4 * (1 - math.cos(math.pi / n)) ** 2
    upper = float(n * n)
    return GapReport(
        lambda2=lam2, lower=lower, upper=upper,
        within=lower - 1e-9 <= lam2 <= upper + 1e-9,
        spectral_mapping_error=float(np.max(np.abs(mapped - sq))),
    )


def discrete_evolver(graph: Graph, f0):
    """Return ``u(t) = exp(-t L^2) f0`` as a callable, computed spectrally."""
    op = bilaplacian_closed_form(graph)
    w, q = op.eigenvalues, op.eigenvectors
    coef = q.T @ np.asarray(f0, dtype=float)
    return lambda t: q @ (np.exp(-t * w) * coef)


def discrete_transition_time(graph: Graph, f0, tol: float = POSITIVITY_TOL) -> TransitionResult:
    """Time after which ``exp(-t L^2) f0`` stays entrywise >= -tol."""
    f0 = np.asarray(f0, dtype=float)
    if f0.shape != (graph.vertex_count,):
        raise ValidationError(f"f0 must have {graph.vertex_count} entries")
    if np.any(f0 < 0) or not np.any(f0 > 0):
        raise NotApplicable("f0 must be entrywise nonnegative and nonzero")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    op = bilaplacian_closed_form(graph)
    evolve = discrete_evolver(graph, f0)
    w = op.eigenvalues
    return find_transition_time(lambda t: float(evolve(t).min()), float(w[1]), tol,
                                t_min=1e-6 / max(float(w[-1]), 1.0))


def vertex_transition_experiment(graph: Graph, tol: float = POSITIVITY_TOL) -> list[dict]:
    """Transition time of each vertex indicator, with degrees and the gap.

    Data for comparing the worst transition time with the minimal-degree
    vertices; nothing is asserted.
    """
    deg = graph.degrees
    lam2 = spectral_gap_bounds_check(graph).lambda2 if graph.vertex_count > 1 else float("nan")
    rows = []
    for v in range(graph.vertex_count):
        e = np.zeros(graph.vertex_count)
        e[v] = 1.0
        res = discrete_transition_time(graph, e, tol)
        rows.append({"vertex": v, "degree": int(deg[v]), "t_star": res.t_star,
                     "min_degree": bool(deg[v] == deg.min()), "lambda2": lam2})
    return rows
