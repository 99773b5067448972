"""Eventual positivity, transition times, decay rates and an integration-by-parts probe."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, optimize

from .discrete import SymmetricOperator, bilaplacian_closed_form, discrete_evolver
from .errors import (
    AmbiguousSign, BoundaryConditionViolated, InsufficientDecay, InsufficientModes, NotApplicable,
    ValidationError,
)
from .fem import EigenDecomposition, ReducedSystem, assemble, eigensolve, evolve, Mesh, Trajectory
from .graphs import Graph
from .transition import TransitionResult, find_transition_time

SIGN_TOL = 1e-6
CONSTANT_TOL = 1e-8
GAP_RATIO = 1e3
CLUSTER_REL_TOL = 1e-7
BATTERY_SIZE = 64

VERDICTS = ("eventually_sub_markovian", "eventually_irreducible",
            "individually_asymptotically_positive", "none")


@dataclass
class SpectralData:
    """Eigenvalues (ascending) and eigenvectors sampled at points (rows)."""

    values: np.ndarray
    vectors: np.ndarray  # (n_points, k)
    noise: float = 0.0  # absolute resolution of the eigenvalues near zero

    @classmethod
    def from_operator(cls, op: SymmetricOperator) -> "SpectralData":
        w = op.eigenvalues
        return cls(w, op.eigenvectors, 1e3 * np.finfo(float).eps * max(abs(w).max(), 1.0))

    @classmethod
    def from_fem(cls, eig: EigenDecomposition) -> "SpectralData":
        sysm = eig.system
        if eig.k == sysm.r:
            top = eig.values[-1]
        else:
            top = linalg.eigh(sysm.K, sysm.M, eigvals_only=True,
                              subset_by_index=[sysm.r - 1, sysm.r - 1])[0]
        return cls(eig.values, np.real(eig.node_values()),
                   1e3 * np.finfo(float).eps * max(abs(top), abs(eig.values[0]), 1.0))


def spectral_data(obj) -> SpectralData:
    if isinstance(obj, SpectralData):
        return obj
    if isinstance(obj, SymmetricOperator):
        return SpectralData.from_operator(obj)
    if isinstance(obj, EigenDecomposition):
        return SpectralData.from_fem(obj)
    raise ValidationError(f"cannot read spectral data from {type(obj).__name__}")


@dataclass
class Classification:
    verdict: str
    kernel_dim: int
    lowest_multiplicity: int
    ground_min: float | None  # min/max of the sign-normalised ground vector (simple case)
    projector_min: float | None  # min/max of the sampled projector kernel
    witness: tuple | None = None  # (x index, y index) where the projector kernel is negative
    notes: list[str] = field(default_factory=list)

    @property
    def is_eventually_irreducible(self) -> bool:
        return self.verdict in ("eventually_irreducible", "eventually_sub_markovian")

    @property
    def is_eventually_sub_markovian(self) -> bool:
        return self.verdict == "eventually_sub_markovian"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "kernel_dim": self.kernel_dim,
                "lowest_multiplicity": self.lowest_multiplicity, "ground_min": self.ground_min,
                "projector_min": self.projector_min,
                "witness": list(self.witness) if self.witness else None, "notes": self.notes}


def lowest_cluster(values: np.ndarray, noise: float = 0.0) -> int:
    """Size of the cluster at the lowest eigenvalue; needs a 1e3 gap to the rest."""
    lam = np.asarray(values, dtype=float)
    rel = lam - lam[0]
    scale = max(abs(lam[0]), noise, 1e-300)
    off = np.flatnonzero(rel > max(noise, CLUSTER_REL_TOL * abs(lam[0])))
    if off.size == 0:
        raise InsufficientModes(f"all {lam.size} modes sit in the lowest cluster")
    tau = max(CLUSTER_REL_TOL * max(1.0, abs(lam[off[0]])), noise)
    m = int(np.sum(rel < tau))
    if m >= lam.size:
        raise InsufficientModes("need at least one mode beyond the lowest cluster")
    spread = max(rel[m - 1], noise, CLUSTER_REL_TOL * scale)
    if rel[m] < GAP_RATIO * spread:
        raise InsufficientModes(f"no clear gap after the lowest cluster ({rel[m]:.3e} vs {spread:.3e})")
    return m


def classify(eigendata, tol: float = SIGN_TOL, seed: int = 42) -> Classification:
    """Eventual positivity verdict from the lowest eigenspace.

    A simple lowest eigenvalue with a strictly positive eigenvector gives
    eventual irreducibility (and eventual sub-Markovianity when the vector is
    constant). Otherwise the projector onto the lowest eigenspace is tested on
    point masses and random nonnegative vectors; a negative output is a
    witness against individual asymptotic positivity.
    """
    sd = spectral_data(eigendata)
    m = lowest_cluster(sd.values, sd.noise)
    # the lowest cluster is the kernel when it sits at zero relative to the next eigenvalue
    kernel = m if abs(sd.values[0]) <= max(sd.noise, CLUSTER_REL_TOL * abs(sd.values[m])) else 0
    notes = []
    phi = sd.vectors[:, :m]
    if m == 1:
        g = phi[:, 0]
        g = g * np.sign(g[np.argmax(np.abs(g))])
        top = np.abs(g).max()
        gmin = float(g.min() / top)
        if gmin >= tol:
            spread = float((g.max() - g.min()) / top)
            verdict = "eventually_sub_markovian" if spread <= CONSTANT_TOL and kernel == 1 \
                else "eventually_irreducible"
            return Classification(verdict, kernel, m, gmin, None, None, notes)
        if gmin > -tol:
            raise AmbiguousSign(f"ground vector minimum {gmin:.3e} is within +-{tol:g} of zero")
        notes.append("ground vector changes sign")
    else:
        gmin = None
    # projector kernel P(x, y) = sum_j phi_j(x) phi_j(y), checked on a nonnegative battery
    P = phi @ phi.T
    scale = np.abs(P).max()
    i, j = np.unravel_index(np.argmin(P), P.shape)
    pmin = float(P[i, j] / scale)
    rng = np.random.default_rng(seed)
    battery = rng.random((P.shape[0], BATTERY_SIZE)) * (rng.random((P.shape[0], BATTERY_SIZE)) < 0.2)
    out = P @ battery
    bmin = float((out / np.maximum(np.abs(out).max(axis=0), 1e-300)).min()) if out.size else 0.0
    if pmin < -tol or bmin < -tol:
        return Classification("none", kernel, m, gmin, min(pmin, bmin), (int(i), int(j)), notes)
    notes.append("no counterexample found in the projector battery")
    return Classification("individually_asymptotically_positive", kernel, m, gmin, pmin, None, notes)


def classify_fem(mg, cond, n_e: int = 16, tol: float = SIGN_TOL, retries: int = 1) -> Classification:
    """Assemble, solve and classify, refining the mesh once on an ambiguous sign."""
    for attempt in range(retries + 1):
        sysm = assemble(mg, Mesh.uniform(mg, n_e * 2**attempt), cond)
        try:
            return classify(eigensolve(sysm), tol)
        except AmbiguousSign:
            if attempt == retries:
                raise


# -- transition times ------------------------------------------------------------

class DiscreteEvolver:
    def __init__(self, graph: Graph, f0):
        f0 = np.asarray(f0, dtype=float)
        if np.any(f0 < 0) or not np.any(f0 > 0):
            raise NotApplicable("f0 must be nonnegative and nonzero")
        self._u = discrete_evolver(graph, f0)
        w = bilaplacian_closed_form(graph).eigenvalues
        self.lambda2 = float(w[1])
        self.lambda_max = float(w[-1])

    def __call__(self, t: float) -> np.ndarray:
        return self._u(t)


class FemEvolver:
    """Nodal values of exp(-tA) f0, with all modes of the reduced system."""

    def __init__(self, system: ReducedSystem, f0, eig: EigenDecomposition | None = None):
        self.system = system
        self.eig = eig if eig is not None else eigensolve(system)
        b = system.Z.conj().T @ _load(system, f0)
        self._amp = self.eig.vectors.conj().T @ b
        self._phi = np.real(self.eig.node_values())
        sd = spectral_data(self.eig)
        m = lowest_cluster(sd.values, sd.noise)
        self.lambda2 = float(self.eig.values[m] - self.eig.values[0])
        self.lambda_max = float(self.eig.values[-1])

    def __call__(self, t: float) -> np.ndarray:
        return self._phi @ np.real(np.exp(-t * self.eig.values) * self._amp)


def _load(system, f0):
    from .fem import as_edge_function, load_vector
    return load_vector(system, as_edge_function(system, f0))


def transition_time(evolver, tol: float = 1e-10, raise_on_failure: bool = False) -> TransitionResult:
    """Time after which the sampled solution stays >= -tol, certified to t* + 10/lambda2."""
    res = find_transition_time(lambda t: float(np.min(evolver(t))), evolver.lambda2, tol,
                               t_min=1e-6 / max(evolver.lambda_max, 1.0), rel_tol=1e-6)
    if raise_on_failure and res.status != "ok":
        from .errors import NeverPositiveWithinHorizon
        raise NeverPositiveWithinHorizon(f"still negative at t = {res.horizon:.4g}")
    return res


# -- convergence rate ------------------------------------------------------------

def convergence_rate_fit(times, values=None, mean=None, mass: np.ndarray | None = None) -> float:
    """Decay rate rho from a least-squares fit of log |u(t) - mean| against t.

    ``values`` is (len(times), n). With ``mass`` the norm is the mass-weighted
    one. A ``Trajectory`` may be passed as ``times``.
    """
    if isinstance(times, Trajectory):
        traj = times
        times, mass = traj.times, traj.system.M
        coeffs = traj.coeffs
        if mean is None:
            mean = traj.mean(len(times) - 1)
        ones = np.linalg.solve(mass, traj.system.Z.conj().T @ _load(traj.system, lambda e, x: np.ones_like(x)))
        diffs = coeffs - mean * ones
        norms = np.sqrt(np.abs(np.einsum("ti,ij,tj->t", diffs.conj(), mass, diffs)))
    else:
        vals = np.asarray(values, dtype=float)
        if mean is None:
            mean = vals[-1].mean()
        diffs = vals - mean
        norms = np.linalg.norm(diffs, axis=1) if mass is None else \
            np.sqrt(np.einsum("ti,ij,tj->t", diffs, mass, diffs))
    times = np.asarray(times, dtype=float)
    keep = norms > 1e-13 * max(norms.max(), 1e-300)
    if keep.sum() < 2 or norms[keep].max() < 10 * norms[keep].min():
        raise InsufficientDecay("the distance to the mean spans less than one decade")
    slope = np.polyfit(times[keep], np.log(norms[keep]), 1)[0]
    return float(-slope)


# -- integration by parts probe -------------------------------------------------

@dataclass
class EdgeFunction:
    """A smooth function on [0, length] given with its first two derivatives."""

    u: Callable
    du: Callable
    d2u: Callable
    length: float = 1.0


@dataclass
class ProbeResult:
    lhs: float  # a(u, |u|u), by quadrature of u'' (|u|u)''
    rhs: float  # 2 int |u| u''^2
    residual: float  # |lhs - rhs| / max(|lhs|, |rhs|)
    zero_term: float  # -(4/3) sum over sign changes of |u'|^3
    corrected_residual: float  # same with the zero term added to rhs
    zeros: list[float]


def cosine_series(c0: float, coeffs: Sequence[float], length: float = 1.0) -> EdgeFunction:
    """u(x) = c0 + sum_k a_k cos(k pi x / L); u' vanishes at both ends."""
    a = np.asarray(coeffs, dtype=float)
    k = np.arange(1, a.size + 1) * np.pi / length

    def u(x):
        return c0 + np.cos(np.outer(x, k)) @ a

    def du(x):
        return -np.sin(np.outer(x, k)) @ (a * k)

    def d2u(x):
        return -np.cos(np.outer(x, k)) @ (a * k**2)

    return EdgeFunction(u, du, d2u, length)


def probe_battery(count: int = 20, seed: int = 42, modes: int = 4) -> list[EdgeFunction]:
    """Seeded random cosine series, some sign-definite and some not."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c0 = rng.uniform(-1.0, 3.0)
        a = rng.standard_normal(modes) / np.arange(1, modes + 1) ** 2
        out.append(cosine_series(c0, a))
    return out


def _zeros(fn: EdgeFunction, samples: int = 4096) -> list[float]:
    x = np.linspace(0.0, fn.length, samples + 1)
    y = fn.u(x)
    found = []
    for a, b, ya, yb in zip(x[:-1], x[1:], y[:-1], y[1:]):
        if ya == 0.0:
            found.append(float(a))
        elif ya * yb < 0:
            found.append(optimize.brentq(lambda s: float(fn.u(np.array([s]))[0]), a, b, xtol=1e-15))
    return [z for z in found if 0.0 < z < fn.length]


def dissipativity_identity_probe(fn: EdgeFunction, p: float = 3, gauss: int = 64) -> ProbeResult:
    """Compare a(u, |u|^(p-2) u) with 2 int |u| u''^2 (only p = 3 is supported).

    Quadrature is split at the zeros of u, where the integrand has a jump.
    """
    if p != 3:
        raise ValidationError("the probe is defined for p = 3")
    ends = fn.du(np.array([0.0, fn.length]))
    if np.max(np.abs(ends)) > 1e-10:
        raise BoundaryConditionViolated(f"u' at the endpoints is {ends.tolist()}, expected 0")
    zeros = _zeros(fn)
    xg, wg = np.polynomial.legendre.leggauss(gauss)
    lhs = rhs = 0.0
    cuts = [0.0] + zeros + [fn.length]
    for a, b in zip(cuts[:-1], cuts[1:]):
        x = (b - a) / 2 * xg + (a + b) / 2
        w = (b - a) / 2 * wg
        u, du, d2u = fn.u(x), fn.du(x), fn.d2u(x)
        second = 2 * np.sign(u) * du**2 + 2 * np.abs(u) * d2u  # (|u| u)''
        lhs += float(w @ (d2u * second))
        rhs += float(w @ (2 * np.abs(u) * d2u**2))
    zero_term = -4.0 / 3.0 * float(sum(np.abs(fn.du(np.array(zeros))) ** 3)) if zeros else 0.0

    def rel(x, y):
        s = max(abs(x), abs(y))
        return abs(x - y) / s if s > 0 else 0.0

    return ProbeResult(lhs, rhs, rel(lhs, rhs), zero_term, rel(lhs, rhs + zero_term), zeros)
