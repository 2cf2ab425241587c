"""The stochastic Model T exchange process.

One step picks an edge uniformly, lets the Fermi function decide which
endpoint sells, moves ``k`` from buyer to seller and then scales every agent's
wealth by its factor ``mu``.

RNG contract: a ``numpy.random.Generator`` on PCG64 seeded with the run seed.
Each step consumes exactly two doubles from ``Generator.random``, in order:
``u_edge`` selects edge ``floor(u_edge * |E|)`` of the sorted edge array and
the lower-numbered endpoint ``i`` of that edge sells iff ``u_role < Q_ij``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import _kernels
from .errors import (
    InvalidInput,
    InvalidParams,
    NumericOverflow,
    ScheduleExhausted,
    UnsupportedParams,
)
from .graph import Graph, require_connected

CHUNK_STEPS = 1 << 16


def _fmt(x) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# schedules and parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """The same value at every step (scalar, or per-agent vector for mu)."""
    value: float | np.ndarray

    def __post_init__(self):
        v = np.asarray(self.value, dtype=np.float64)
        if v.ndim > 1:
            raise InvalidParams("constant schedule must be a scalar or a per-agent vector")
        if not np.all(np.isfinite(v)):
            raise InvalidParams("schedule values must be finite")
        object.__setattr__(self, "value", float(v) if v.ndim == 0 else _frozen(v))

    def at(self, t: int):
        return self.value

    @property
    def per_agent(self) -> bool:
        return isinstance(self.value, np.ndarray)

    def all_values(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.value, dtype=np.float64))


@dataclass(frozen=True)
class Explicit:
    """One value per step, ``values[t]`` used at step t.

    A 2-D array gives per-agent values (row t holds step t)."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim not in (1, 2) or len(v) == 0:
            raise InvalidParams("explicit schedule must be a non-empty 1-D or 2-D array")
        if not np.all(np.isfinite(v)):
            raise InvalidParams("schedule values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self):
        return len(self.values)

    def at(self, t: int):
        if t >= len(self.values):
            raise ScheduleExhausted(f"schedule has {len(self.values)} steps, step {t} requested")
        row = self.values[t]
        return float(row) if self.values.ndim == 1 else row

    @property
    def per_agent(self) -> bool:
        return self.values.ndim == 2

    def all_values(self) -> np.ndarray:
        return self.values.ravel()


Schedule = Constant | Explicit


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _as_schedule(x) -> Schedule:
    if isinstance(x, (Constant, Explicit)):
        return x
    return Constant(x)


@dataclass(frozen=True)
class Params:
    """Transaction parameters: Fermi sharpness ``eta``, multiplicative factor
    ``mu`` and transaction amount ``k``.  Plain numbers become constants."""
    eta: Schedule
    mu: Schedule
    k: Schedule

    def __post_init__(self):
        for name in ("eta", "mu", "k"):
            object.__setattr__(self, name, _as_schedule(getattr(self, name)))
        if self.eta.per_agent or self.k.per_agent:
            raise InvalidParams("eta and k are shared by all agents")
        if np.any(self.k.all_values() < 0):
            raise InvalidParams("transaction amount k must be nonnegative")

    @property
    def is_constant(self) -> bool:
        return all(isinstance(s, Constant) for s in (self.eta, self.mu, self.k))

    @property
    def agent_uniform(self) -> bool:
        return not self.mu.per_agent

    @property
    def nonzero_constant(self) -> bool:
        """Constant, agent-uniform and all three values nonzero."""
        return (self.is_constant and self.agent_uniform
                and self.eta.value != 0 and self.mu.value != 0 and self.k.value != 0)

    @property
    def horizon(self) -> int | None:
        """Number of steps covered by the explicit schedules (None if unbounded)."""
        lengths = [len(s) for s in (self.eta, self.mu, self.k) if isinstance(s, Explicit)]
        return min(lengths) if lengths else None

    def constant_values(self) -> tuple[float, float, float]:
        """``(eta, mu, k)`` for constant agent-uniform parameters."""
        if not self.is_constant:
            raise UnsupportedParams("analysis requires constant parameters")
        if not self.agent_uniform:
            raise UnsupportedParams("analysis requires an agent-uniform mu")
        return self.eta.value, self.mu.value, self.k.value

    def at(self, t: int):
        return self.eta.at(t), self.mu.at(t), self.k.at(t)

    def mu_uniform_at(self, t: int) -> float:
        if not self.agent_uniform:
            raise UnsupportedParams("an agent-uniform mu is required here")
        return self.mu.at(t)

    def kernel_arrays(self, n: int):
        """Arrays in the layout ``_kernels.run_steps`` expects."""
        eta = np.ascontiguousarray(self.eta.all_values())
        k = np.ascontiguousarray(self.k.all_values())
        mu = self.mu.value if isinstance(self.mu, Constant) else self.mu.values
        mu = np.asarray(mu, dtype=np.float64)
        if isinstance(self.mu, Constant):
            mu = mu.reshape(1, -1)
        elif mu.ndim == 1:
            mu = mu.reshape(-1, 1)
        if mu.shape[1] not in (1, n):
            raise InvalidParams(f"per-agent mu has {mu.shape[1]} entries for {n} agents")
        return (eta, isinstance(self.eta, Constant), k, isinstance(self.k, Constant),
                np.ascontiguousarray(mu), isinstance(self.mu, Constant))


# --------------------------------------------------------------------------
# state and records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WealthState:
    """Per-agent wealth at step ``t``; negative entries are debt."""
    w: np.ndarray
    t: int = 0

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInput("wealth must be a non-empty 1-D vector")
        if not np.all(np.isfinite(w)):
            raise InvalidInput("wealth entries must be finite")
        if self.t < 0:
            raise InvalidInput("time step must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", int(self.t))

    @property
    def n(self) -> int:
        return len(self.w)


@dataclass(frozen=True)
class StepRecord:
    t: int
    edge: tuple[int, int]
    seller: int
    buyer: int
    q: float


def total_wealth(state) -> float:
    """Sum of all agents' wealth (correctly rounded)."""
    w = state.w if isinstance(state, WealthState) else state
    return math.fsum(np.asarray(w, dtype=np.float64).tolist())


def fermi_prob(eta: float, wi: float, wj: float) -> float:
    """Probability that the agent holding ``wi`` sells to the one holding ``wj``.

    Exponents beyond +/-700 short-circuit to exactly 0 or 1.
    """
    if not (math.isfinite(eta) and math.isfinite(wi) and math.isfinite(wj)):
        raise InvalidInput(f"fermi_prob needs finite inputs, got {(eta, wi, wj)}")
    x = -eta * (wi - wj)
    if x > _kernels.FERMI_CLAMP:
        return 0.0
    if x < -_kernels.FERMI_CLAMP:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------

class TrajectoryPolicy(str, enum.Enum):
    FULL = "full"
    SUMMARY = "summary"


SUMMARY_HEADER = ("t",) + _kernels.SUMMARY_FIELDS


def summary_row(w: np.ndarray) -> np.ndarray:
    mean = np.mean(w)
    return np.array([mean, np.mean((w - mean) ** 2), np.min(w), np.max(w),
                     np.sum(w), np.sum(w < 0.0)], dtype=np.float64)


def _check_inputs(state: WealthState, g: Graph, p: Params, steps: int):
    require_connected(g)
    if state.n != g.n:
        raise InvalidInput(f"wealth vector has {state.n} entries, graph has {g.n} vertices")
    if g.m == 0:
        raise InvalidInput("graph has no edges")
    horizon = p.horizon
    if horizon is not None and state.t + steps > horizon:
        raise ScheduleExhausted(
            f"schedules cover {horizon} steps; run needs steps {state.t}..{state.t + steps - 1}"
        )


def stochastic_step(state: WealthState, g: Graph, p: Params, rng: np.random.Generator,
                    backend: str | None = None) -> tuple[WealthState, StepRecord]:
    """One Model T step; consumes two draws from ``rng``."""
    _check_inputs(state, g, p, 1)
    w = np.array(state.w)
    u = rng.random((1, 2))
    rec_edge = np.zeros(1, dtype=np.int64)
    rec_seller = np.zeros(1, dtype=np.int64)
    rec_q = np.zeros(1)
    impl = _kernels._select(backend, _kernels.run_steps_numba, _kernels.run_steps_numpy)
    done = impl(w, state.t, g.edges[:, 0].copy(), g.edges[:, 1].copy(), u,
                *p.kernel_arrays(g.n),
                np.empty((0, g.n)), np.empty((0, 6)), rec_edge, rec_seller, rec_q)
    if done < 1:
        raise NumericOverflow(f"wealth became non-finite at step {state.t}", partial=state)
    i, j = (int(x) for x in g.edges[rec_edge[0]])
    seller = int(rec_seller[0])
    record = StepRecord(t=state.t, edge=(i, j), seller=seller,
                        buyer=j if seller == i else i, q=float(rec_q[0]))
    return WealthState(w, state.t + 1), record


@dataclass
class RunResult:
    """Output of :func:`run`.

    ``rows`` has one row per recorded time ``t0 .. t0 + steps``: the full
    wealth vector (FULL) or the six summary statistics (SUMMARY).
    """
    policy: TrajectoryPolicy
    t0: int
    rows: np.ndarray
    final: WealthState | None
    graph: Graph
    edge_index: np.ndarray = field(repr=False)
    seller: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    @property
    def steps(self) -> int:
        return len(self.rows) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + len(self.rows))

    def totals(self) -> np.ndarray:
        if self.policy is TrajectoryPolicy.FULL:
            return np.array([math.fsum(r) for r in self.rows.tolist()])
        return self.rows[:, 4].copy()

    def records(self) -> list[StepRecord]:
        out = []
        for s in range(len(self.q)):
            i, j = (int(x) for x in self.graph.edges[self.edge_index[s]])
            seller = int(self.seller[s])
            out.append(StepRecord(self.t0 + s, (i, j), seller, j if seller == i else i,
                                  float(self.q[s])))
        return out

    def write_trajectory_csv(self, fh: IO[str]) -> None:
        write_trajectory_csv(fh, self.policy, self.t0, self.rows)

    def write_records_csv(self, fh: IO[str]) -> None:
        fh.write("t,i,j,seller,buyer,q\n")
        edges = self.graph.edges
        for s in range(len(self.q)):
            i, j = edges[self.edge_index[s]]
            seller = int(self.seller[s])
            buyer = j if seller == i else i
            fh.write(f"{self.t0 + s},{i + 1},{j + 1},{seller + 1},{buyer + 1},{_fmt(self.q[s])}\n")


def write_trajectory_csv(fh: IO[str], policy: TrajectoryPolicy, t0: int, rows: np.ndarray):
    if policy is TrajectoryPolicy.FULL:
        n = rows.shape[1]
        fh.write(",".join(["t"] + [f"w_{i}" for i in range(1, n + 1)]) + "\n")
        for s, row in enumerate(rows.tolist()):
            fh.write(f"{t0 + s}," + ",".join(_fmt(x) for x in row) + "\n")
    else:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for s, row in enumerate(rows.tolist()):
            fh.write(f"{t0 + s}," + ",".join(_fmt(x) for x in row[:5]) + f",{int(row[5])}\n")


def run(state0: WealthState, g: Graph, p: Params, steps: int, seed: int,
        record: TrajectoryPolicy | str = TrajectoryPolicy.FULL,
        keep_records: bool = True, backend: str | None = None) -> RunResult:
    """Run ``steps`` Model T steps from ``state0``; deterministic in ``seed``.

    The draws are identical to calling :func:`stochastic_step` ``steps``
    times with ``numpy.random.default_rng(seed)``.
    """
    steps = int(steps)
    if steps < 0:
        raise InvalidInput("steps must be nonnegative")
    policy = TrajectoryPolicy(record)
    _check_inputs(state0, g, p, steps)
    n = g.n
    rng = np.random.default_rng(seed)
    kernel_params = p.kernel_arrays(n)
    impl = _kernels._select(backend, _kernels.run_steps_numba, _kernels.run_steps_numpy)
    edge_u = np.ascontiguousarray(g.edges[:, 0])
    edge_v = np.ascontiguousarray(g.edges[:, 1])

    w = np.array(state0.w)
    if policy is TrajectoryPolicy.FULL:
        rows = np.empty((steps + 1, n))
        rows[0] = w
    else:
        rows = np.empty((steps + 1, 6))
        rows[0] = summary_row(w)
    nrec = steps if keep_records else 0
    rec_edge = np.zeros(nrec, dtype=np.int64)
    rec_seller = np.zeros(nrec, dtype=np.int64)
    rec_q = np.zeros(nrec)
    no_states = np.empty((0, n))
    no_summary = np.empty((0, 6))
    no_rec_i, no_rec_f = np.empty(0, dtype=np.int64), np.empty(0)

    done = 0
    while done < steps:
        c = min(CHUNK_STEPS, steps - done)
        u = rng.random((c, 2))
        out = rows[done + 1:done + 1 + c]
        if keep_records:
            recs = (rec_edge[done:done + c], rec_seller[done:done + c], rec_q[done:done + c])
        else:
            recs = (no_rec_i, no_rec_i, no_rec_f)
        completed = impl(
            w, state0.t + done, edge_u, edge_v, u, *kernel_params,
            out if policy is TrajectoryPolicy.FULL else no_states,
            out if policy is TrajectoryPolicy.SUMMARY else no_summary,
            *recs,
        )
        if completed < c:
            last = done + completed
            final = (WealthState(rows[last], state0.t + last)
                     if policy is TrajectoryPolicy.FULL else None)
            partial = RunResult(policy, state0.t, rows[:last + 1].copy(), final,
                                g, rec_edge[:last], rec_seller[:last], rec_q[:last])
            raise NumericOverflow(
                f"wealth became non-finite at step {state0.t + last}", partial=partial
            )
        done += c

    return RunResult(policy, state0.t, rows, WealthState(w, state0.t + steps), g,
                     rec_edge, rec_seller, rec_q)


def initial_wealth(spec: str, n: int, seed: int) -> WealthState:
    """Initial wealth from a short descriptor.

    ``const:C``, ``uniform:LO:HI`` (drawn from a stream independent of the
    run's), or ``list:v1,v2,...``.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "const":
            return WealthState(np.full(n, float(rest)))
        if kind == "uniform":
            lo, hi = (float(x) for x in rest.split(":"))
            rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))
            return WealthState(rng.uniform(lo, hi, size=n))
        if kind == "list":
            values = [float(x) for x in rest.split(",")]
            if len(values) != n:
                raise InvalidInput(f"initial wealth list has {len(values)} entries, need {n}")
            return WealthState(np.array(values))
    except ValueError as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"bad initial wealth spec {spec!r}: {exc}") from None
    raise InvalidInput(f"unknown initial wealth spec {spec!r}")


def read_schedule(values: Sequence[Sequence[float]] | np.ndarray) -> Explicit:
    """Explicit schedule from rows of numbers (one row per step)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    return Explicit(arr)
