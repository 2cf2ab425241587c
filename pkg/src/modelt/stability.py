"""Linear stability of the equal-wealth state.

At any equal-wealth point every ``Q_ij`` equals 1/2 with derivative
``+-eta/4``, so the Jacobian of the mean-field map is ``J = mu (a L + I)``
with ``a = k eta / (2|E|)`` and ``L`` the graph Laplacian.  Each Laplacian
eigenpair ``(b, v)`` is a Jacobian eigenpair ``(mu (1 + a b), v)``; since
``0 <= b <= lambda1`` the spectral radius is ``|mu| max(1, |1 + a lambda1|)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from . import _kernels
from .dynamics import Params
from .errors import EigensolverFailure, InvalidInput, InvalidParams, OutOfTheoremScope
from .graph import DENSE_CAP, Graph, laplacian, largest_eigenvalue, require_connected, spectrum, star

DEFAULT_TOL = 1e-9


class StabilityClass(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


class AsymptoticClass(str, enum.Enum):
    STABLE_ALL_GRAPHS = "StableAllGraphs"
    UNSTABLE_SOME_GRAPH = "UnstableSomeGraph"
    BOUNDARY = "Boundary"


EXCLUDED = "Excluded"


def _fmt(x) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# Jacobian
# --------------------------------------------------------------------------

def coupling(k: float, eta: float, m: int) -> float:
    """``a = k eta / (2|E|)``."""
    return k * eta / (2.0 * m)


@dataclass(frozen=True)
class JacobianSpec:
    mu: float
    a: float
    graph: Graph

    def __post_init__(self):
        if self.graph.m == 0:
            raise InvalidInput("graph has no edges")
        if not math.isfinite(self.a):
            raise InvalidParams("coupling a must be finite")

    @classmethod
    def from_params(cls, g: Graph, p: Params) -> "JacobianSpec":
        eta, mu, k = p.constant_values()
        return cls(mu=mu, a=coupling(k, eta, g.m), graph=g)

    def matrix(self) -> np.ndarray:
        return self.mu * (self.a * laplacian(self.graph) + np.eye(self.graph.n))


def jacobian(g: Graph, p: Params) -> np.ndarray:
    """Jacobian of the mean-field map at equal wealth.

    Diagonal ``mu (1 + k eta d_i / (2|E|))``, ``-mu k eta / (2|E|)`` between
    neighbours, zero elsewhere.
    """
    require_connected(g)
    return JacobianSpec.from_params(g, p).matrix()


def jacobian_spectrum_two_ways(g: Graph, p: Params, tol: float = DEFAULT_TOL,
                               backend: str | None = None):
    """Jacobian eigenvalues computed directly and mapped from the Laplacian.

    Both lists are ascending.  The direct route runs Jacobi on ``J`` itself;
    the mapped route applies ``b -> mu (1 + a b)`` to the Laplacian spectrum.
    """
    spec = JacobianSpec.from_params(g, p)
    require_connected(g)
    if g.n > DENSE_CAP:
        raise InvalidInput(f"dense eigensolver is capped at n={DENSE_CAP}")
    direct, off, sweeps = _kernels.jacobi_eigenvalues(spec.matrix(), backend=backend)
    if sweeps < 0 or off > tol * max(1.0, abs(spec.mu)):
        raise EigensolverFailure(f"Jacobi failed on the Jacobian (off-norm {off:.3e})")
    lap_eigs = spectrum(g, tol=tol, backend=backend).eigenvalues
    mapped = np.sort(spec.mu * (1.0 + spec.a * lap_eigs))
    return direct, mapped


# --------------------------------------------------------------------------
# classification on a given graph
# --------------------------------------------------------------------------

def dominant_modulus(mu, a, lambda1):
    """``|mu| max(1, |1 + a lambda1|)``; broadcasts over arrays."""
    return np.abs(mu) * np.maximum(1.0, np.abs(1.0 + np.multiply(a, lambda1)))


def _band(value: float, tol: float):
    if value < 1.0 - tol:
        return -1
    if value > 1.0 + tol:
        return 1
    return 0


@dataclass(frozen=True)
class StabilityVerdict:
    lambda1: float
    a: float
    dominant_modulus: float
    cls: StabilityClass

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "a": self.a,
                "dominant_modulus": self.dominant_modulus, "class": self.cls.value}


def verdict_from_modulus(value: float, tol: float = DEFAULT_TOL) -> StabilityClass:
    return {-1: StabilityClass.STABLE, 0: StabilityClass.MARGINAL,
            1: StabilityClass.UNSTABLE}[_band(value, tol)]


def classify(g: Graph, p: Params, tol: float = DEFAULT_TOL,
             lambda1: float | None = None) -> StabilityVerdict:
    """Linear stability of equal wealth on ``g``.

    ``lambda1`` may be supplied when already known (it is the only graph
    quantity the verdict needs besides |E|).
    """
    require_connected(g)
    eta, mu, k = p.constant_values()
    if lambda1 is None:
        lambda1 = largest_eigenvalue(g)
    a = coupling(k, eta, g.m)
    value = float(dominant_modulus(mu, a, lambda1))
    return StabilityVerdict(float(lambda1), a, value, verdict_from_modulus(value, tol))


# --------------------------------------------------------------------------
# large-n criterion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticVerdict:
    criterion_value: float
    cls: AsymptoticClass

    def to_dict(self) -> dict:
        return {"criterion_value": self.criterion_value, "class": self.cls.value}


def criterion_value(mu, k, eta):
    """``|mu (1 + k eta / 2)|``; broadcasts over arrays."""
    return np.abs(np.multiply(mu, 1.0 + np.multiply(k, eta) / 2.0))


def _require_nonzero(eta: float, mu: float, k: float):
    if eta == 0 or mu == 0 or k == 0:
        raise InvalidParams(f"eta, mu and k must all be nonzero (got {eta}, {mu}, {k})")


def asymptotic_classify(p: Params, tol: float = DEFAULT_TOL) -> AsymptoticVerdict:
    """Stability of the zero state over all connected graphs as n grows.

    Stable on every connected graph when ``|mu (1 + k eta/2)| < 1``; some
    connected graph (a large star) is unstable when it exceeds 1.
    """
    eta, mu, k = p.constant_values()
    _require_nonzero(eta, mu, k)
    if not 0.0 < abs(mu) < 1.0:
        raise OutOfTheoremScope(f"|mu| must lie in (0, 1), got mu={mu}")
    value = float(criterion_value(mu, k, eta))
    cls = {-1: AsymptoticClass.STABLE_ALL_GRAPHS, 0: AsymptoticClass.BOUNDARY,
           1: AsymptoticClass.UNSTABLE_SOME_GRAPH}[_band(value, tol)]
    return AsymptoticVerdict(value, cls)


@dataclass(frozen=True)
class StarLimitRow:
    n: int
    lambda1: float
    value: float        # 1 + k eta lambda1 / (2|E|)
    limit: float        # 1 + k eta / 2
    deviation: float    # value - limit
    expected_deviation: float  # (k eta / 2) / (n - 1)


def star_limit_check(p: Params, n_values: Iterable[int], numeric: bool = True,
                     backend: str | None = None) -> list[StarLimitRow]:
    """``1 + k eta lambda1 / (2|E|)`` on stars against its large-n limit.

    With ``numeric`` the star's top Laplacian eigenvalue is computed (dense
    Jacobi up to ``DENSE_CAP`` vertices, power iteration beyond); otherwise
    the closed form ``lambda1 = n`` is used.
    """
    eta, _, k = p.constant_values()
    rows = []
    for n in n_values:
        n = int(n)
        if n < 2:
            raise InvalidInput(f"star needs n >= 2, got {n}")
        lam1 = largest_eigenvalue(star(n), backend=backend) if numeric else float(n)
        value = 1.0 + k * eta * lam1 / (2.0 * (n - 1))
        limit = 1.0 + k * eta / 2.0
        rows.append(StarLimitRow(n, lam1, value, limit, value - limit,
                                 (k * eta / 2.0) / (n - 1)))
    return rows


def star_escalation(p: Params, n_values: Iterable[int], tol: float = DEFAULT_TOL):
    """Finite-n verdicts on growing stars.

    Returns ``(rows, threshold)`` where rows are ``(n, verdict)`` and
    threshold is the smallest tested n from which every larger tested n
    agrees with the last verdict (None if the sequence is empty).
    """
    rows = [(int(n), classify(star(int(n)), p, tol)) for n in n_values]
    if not rows:
        return rows, None
    final = rows[-1][1].cls
    threshold = rows[-1][0]
    for n, verdict in reversed(rows):
        if verdict.cls is not final:
            break
        threshold = n
    return rows, threshold


# --------------------------------------------------------------------------
# phase grids
# --------------------------------------------------------------------------

@dataclass
class PhaseGrid:
    """Cells in row-major order: eta is the slow index, mu the fast one."""
    mode: str
    k: float
    eta: np.ndarray
    mu: np.ndarray
    value: np.ndarray   # (len(eta), len(mu))
    cls: np.ndarray     # same shape, str

    def rows(self):
        for i, e in enumerate(self.eta):
            for j, m in enumerate(self.mu):
                yield float(e), float(m), float(self.value[i, j]), str(self.cls[i, j])

    def counts(self) -> dict:
        labels, counts = np.unique(self.cls, return_counts=True)
        return {str(label): int(c) for label, c in zip(labels, counts)}

    def write_csv(self, fh: IO[str]) -> None:
        fh.write("eta,mu,value,class\n")
        eta_s = [_fmt(e) for e in self.eta]
        mu_s = [_fmt(m) for m in self.mu]
        for i, es in enumerate(eta_s):
            vals = self.value[i].tolist()
            labels = self.cls[i].tolist()
            fh.write("".join(f"{es},{ms},{_fmt(v)},{c}\n"
                             for ms, v, c in zip(mu_s, vals, labels)))


def phase_grid(k: float, eta_range=(-10.0, 10.0), mu_range=(-2.0, 2.0), resolution: int = 400,
               mode: str = "asymptotic", graph: Graph | None = None,
               tol: float = DEFAULT_TOL) -> PhaseGrid:
    """Classify every ``(eta, mu)`` cell of a ``resolution x resolution`` grid.

    ``asymptotic`` mode uses the large-n criterion; cells with ``|mu| > 1``
    lie outside its hypothesis and are reported UnstableSomeGraph because the
    uniform mode alone already has modulus ``|mu|``.  ``graph`` mode uses the
    graph's own spectral radius.  Cells with ``eta = 0`` or ``mu = 0`` are
    Excluded.  ``value`` holds the criterion (asymptotic) or the dominant
    modulus (graph).
    """
    resolution = int(resolution)
    if resolution < 2:
        raise InvalidInput("resolution must be at least 2")
    if not k > 0:
        raise InvalidParams("transaction amount k must be positive")
    for lo, hi in (eta_range, mu_range):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise InvalidInput(f"bad range ({lo}, {hi})")
    etas = np.linspace(eta_range[0], eta_range[1], resolution)
    mus = np.linspace(mu_range[0], mu_range[1], resolution)
    E, M = np.meshgrid(etas, mus, indexing="ij")

    if mode == "asymptotic":
        value = criterion_value(M, k, E)
        cls = np.where(value < 1.0 - tol, AsymptoticClass.STABLE_ALL_GRAPHS.value,
                       np.where(value > 1.0 + tol, AsymptoticClass.UNSTABLE_SOME_GRAPH.value,
                                AsymptoticClass.BOUNDARY.value)).astype(object)
        abs_mu = np.abs(M)
        outside = abs_mu > 1.0 + tol
        cls[outside] = AsymptoticClass.UNSTABLE_SOME_GRAPH.value
        edge = (np.abs(abs_mu - 1.0) <= tol) & (value <= 1.0 + tol)
        cls[edge] = AsymptoticClass.BOUNDARY.value
    elif mode == "graph":
        if graph is None:
            raise InvalidInput("graph mode needs a graph")
        require_connected(graph)
        lam1 = largest_eigenvalue(graph)
        value = dominant_modulus(M, coupling(k, E, graph.m), lam1)
        cls = np.where(value < 1.0 - tol, StabilityClass.STABLE.value,
                       np.where(value > 1.0 + tol, StabilityClass.UNSTABLE.value,
                                StabilityClass.MARGINAL.value)).astype(object)
    else:
        raise InvalidInput(f"unknown phase-grid mode {mode!r}")
    cls[(E == 0.0) | (M == 0.0)] = EXCLUDED
    return PhaseGrid(mode, float(k), etas, mus, value, cls)
