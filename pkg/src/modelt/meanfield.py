"""Deterministic mean-field map of the exchange process.

Averaging one stochastic step over the edge choice and the seller choice gives

    w_i' = (1 - d_i/|E|) mu w_i + (mu/|E|) sum_{j in N_i} [w_i + k (2 Q_ij - 1)]

which is what :func:`meanfield_step` evaluates, with ``Q_ij`` taken at the
current state.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Params, TrajectoryPolicy, WealthState, summary_row
from .errors import InvalidInput, InvalidParams, NumericOverflow
from .graph import Graph, largest_eigenvalue, require_connected, spectrum
from . import _kernels


@dataclass(frozen=True)
class MeanFieldState:
    w: np.ndarray
    t: int = 0

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise InvalidInput("mean-field state must be a finite 1-D vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


def _fermi_vec(eta: float, wi: np.ndarray, wj: np.ndarray) -> np.ndarray:
    x = np.clip(-eta * (wi - wj), -_kernels.FERMI_CLAMP, _kernels.FERMI_CLAMP)
    q = 1.0 / (1.0 + np.exp(x))
    q[x >= _kernels.FERMI_CLAMP] = 0.0
    q[x <= -_kernels.FERMI_CLAMP] = 1.0
    return q


def meanfield_map(w: np.ndarray, g: Graph, eta: float, mu: float, k: float) -> np.ndarray:
    """One application of the mean-field map to a raw wealth vector."""
    u, v = g.edges[:, 0], g.edges[:, 1]
    q = _fermi_vec(eta, w[u], w[v])
    bias = 2.0 * q - 1.0
    # sum_{j in N_i} (2 Q_ij - 1); the bias is antisymmetric in (i, j)
    drift = np.bincount(u, weights=bias, minlength=g.n) - np.bincount(v, weights=bias, minlength=g.n)
    # (1 - d/|E|) mu w + (mu/|E|) d w collapses to mu w; written this way an
    # equal-wealth vector stays exactly equal under rounding
    with np.errstate(over="ignore", invalid="ignore"):  # callers check finiteness
        return mu * w + (mu * k / g.m) * drift


def meanfield_step(state: MeanFieldState | WealthState, g: Graph, p: Params) -> MeanFieldState:
    require_connected(g)
    if len(state.w) != g.n:
        raise InvalidInput(f"state has {len(state.w)} entries, graph has {g.n} vertices")
    eta = p.eta.at(state.t)
    mu = p.mu_uniform_at(state.t)
    k = p.k.at(state.t)
    w_next = meanfield_map(np.asarray(state.w), g, eta, mu, k)
    if not np.all(np.isfinite(w_next)):
        raise NumericOverflow(f"mean-field state became non-finite at step {state.t}")
    return MeanFieldState(w_next, state.t + 1)


def meanfield_run(state0, g: Graph, p: Params, steps: int,
                  record: TrajectoryPolicy | str = TrajectoryPolicy.FULL) -> np.ndarray:
    """Iterate the map; rows laid out like :class:`dynamics.RunResult.rows`."""
    policy = TrajectoryPolicy(record)
    state = MeanFieldState(state0.w, state0.t)
    first = np.array(state.w) if policy is TrajectoryPolicy.FULL else summary_row(state.w)
    rows = np.empty((steps + 1, len(first)))
    rows[0] = first
    for s in range(steps):
        state = meanfield_step(state, g, p)
        rows[s + 1] = state.w if policy is TrajectoryPolicy.FULL else summary_row(state.w)
    return rows


# --------------------------------------------------------------------------
# long-run value of the average
# --------------------------------------------------------------------------

class LimitKind(str, enum.Enum):
    ZERO = "Zero"
    INITIAL_MEAN = "InitialMean"
    DIVERGENT = "Divergent"
    OSCILLATORY = "Oscillatory"


@dataclass(frozen=True)
class LimitResult:
    kind: LimitKind
    value: float | None


def equal_wealth_limit(w0, mu: float, n: int | None = None) -> LimitResult:
    """Where the common wealth goes, given the average obeys ``W_{t+1} = mu W_t``."""
    w0 = np.asarray(w0, dtype=np.float64)
    n = len(w0) if n is None else int(n)
    if mu == 0:
        raise InvalidParams("mu must be nonzero")
    total = math.fsum(w0.tolist())
    if abs(mu) < 1 or total == 0.0:
        return LimitResult(LimitKind.ZERO, 0.0)
    if mu == 1:
        return LimitResult(LimitKind.INITIAL_MEAN, total / n)
    if mu == -1:
        return LimitResult(LimitKind.OSCILLATORY, None)
    return LimitResult(LimitKind.DIVERGENT, None)


# --------------------------------------------------------------------------
# growth rate of a small deviation from equal wealth
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationRate:
    predicted: float
    estimated: float
    steps: int
    epsilon: float

    def to_json(self) -> str:
        return json.dumps({"predicted": self.predicted, "estimated": self.estimated,
                           "steps": self.steps, "epsilon": self.epsilon})


def deviation_rate(g: Graph, p: Params, epsilon: float = 1e-6, steps: int = 200,
                   c: float = 1.0, direction="lambda1", seed: int = 0) -> DeviationRate:
    """Empirical per-step growth factor of a deviation orthogonal to ``1``.

    Starts from ``c*1 + epsilon*delta`` and iterates the mean-field map.  After
    every step the deviation from the uniform trajectory is measured and
    rescaled back to norm ``epsilon`` so it stays in the linear regime.  The
    map only sees wealth differences, so ``F(w + s*1) = F(w) + mu*s*1`` and
    the uniform part can be reset to ``c`` each step without changing the
    deviation; this keeps ``mu**t`` from swamping it.  The estimate is the
    geometric mean of the per-step ratios over the second half of the steps.

    ``direction`` is ``"lambda1"`` (top Laplacian eigenvector), ``"random"``
    (seeded) or an explicit vector.  ``predicted`` is ``|mu (1 + a lambda1)|``
    for the eigenvector and the largest ``|mu (1 + a b)|`` over nonzero
    Laplacian eigenvalues ``b`` otherwise, with ``a = k eta / (2|E|)``.
    """
    require_connected(g)
    eta, mu, k = p.constant_values()
    if not 0.0 < epsilon <= 1e-3:
        raise InvalidInput("epsilon must lie in (0, 1e-3]")
    if steps < 2:
        raise InvalidInput("need at least two steps")
    a = k * eta / (2.0 * g.m)

    if isinstance(direction, str) and direction == "lambda1":
        delta = _top_eigenvector(g)
        lam1 = largest_eigenvalue(g)
        predicted = abs(mu * (1.0 + a * lam1))
    else:
        if isinstance(direction, str):
            if direction != "random":
                raise InvalidInput(f"unknown direction {direction!r}")
            delta = np.random.default_rng(seed).standard_normal(g.n)
        else:
            delta = np.array(direction, dtype=np.float64)
        eigs = spectrum(g).eigenvalues
        nonzero = eigs[1:]
        predicted = abs(mu) * float(np.max(np.abs(1.0 + a * nonzero)))
    delta = delta - delta.mean()
    norm = np.linalg.norm(delta)
    if norm == 0.0:
        raise InvalidInput("deviation direction must not be parallel to the all-ones vector")
    delta /= norm

    w = c + epsilon * delta
    log_ratios = []
    for s in range(steps):
        w = meanfield_map(w, g, eta, mu, k)
        if not np.all(np.isfinite(w)):
            partial = _geometric_mean(log_ratios[len(log_ratios) // 2:])
            raise NumericOverflow(f"overflow after {s} mean-field steps", partial=partial)
        dev = w - w.mean()
        size = np.linalg.norm(dev)
        if size == 0.0:
            return DeviationRate(predicted, 0.0, s + 1, epsilon)
        log_ratios.append(math.log(size / epsilon))
        w = c + dev * (epsilon / size)
    estimated = _geometric_mean(log_ratios[steps // 2:])
    return DeviationRate(predicted, estimated, steps, epsilon)


def _geometric_mean(logs):
    return math.exp(sum(logs) / len(logs)) if logs else float("nan")


def _top_eigenvector(g: Graph) -> np.ndarray:
    """Eigenvector for the largest Laplacian eigenvalue by shifted inverse
    iteration, the shift taken just above the Jacobi eigenvalue."""
    from .graph import laplacian

    lam1 = spectrum(g).lambda1
    shifted = laplacian(g) - (lam1 + 1e-9 * max(1.0, lam1)) * np.eye(g.n)
    x = np.random.default_rng(0).standard_normal(g.n)
    for _ in range(4):
        x -= x.mean()
        x /= np.linalg.norm(x)
        x = np.linalg.solve(shifted, x)
    x -= x.mean()
    return x / np.linalg.norm(x)
