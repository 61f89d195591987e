"""Running LRSAO on Jump: one-bit mutation, greedy objective choice, Q update.

Two equivalent kernels exist. ``"bitstring"`` keeps an explicit bit string
and flips a uniformly chosen bit; ``"weight"`` only tracks the Hamming
weight and moves up with probability ``(n - w) / n``. Both draw the same
index ``i = below(n)``; the weight kernel reads "flip a zero bit" as
``i >= w``.

The compiled loop lives in ``_kernels``. :func:`lrsao_step` and
:func:`run_lrsao_reference` are a plain-Python transcription of the same
loop, consuming random numbers in the same order, and are used to check
the compiled path trace for trace.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import _kernels
from .agent import Hyperparams, QTable, q_update, reward_and_accept, select_action, validate_hyperparams
from .errors import ConfigError, LrsaoError, PhaseError, TraceError
from .objectives import ObjectiveId, ProblemParams, jump, objective_value, validate_params
from .rng import MASK64, SplitMix64

KERNELS = ("weight", "bitstring")
TRACE_FIELDS = ("t", "w_before", "dir", "action", "accepted", "reward", "s_before", "s_after", "q_new")


def default_max_iters(n: int) -> int:
    return 10_000 * n * n


@dataclass(frozen=True)
class RunConfig:
    params: ProblemParams
    hyper: Hyperparams
    max_iters: Optional[int] = None
    kernel: str = "weight"
    record_trace: bool = False

    @property
    def iter_cap(self) -> int:
        return default_max_iters(self.params.n) if self.max_iters is None else self.max_iters

    def validate(self) -> "RunConfig":
        try:
            validate_params(self.params.n, self.params.ell)
            validate_hyperparams(self.hyper, self.params)
        except LrsaoError as exc:
            raise ConfigError(str(exc)) from exc
        if self.iter_cap < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.iter_cap}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        return self


@dataclass(frozen=True)
class StepRecord:
    t: int
    w_before: int
    proposal_dir: int
    action: ObjectiveId
    accepted: bool
    reward: float
    s_before: int
    s_after: int
    updated_value: float
    restart: bool = False

    @property
    def w_after(self) -> int:
        return self.w_before + self.proposal_dir if self.accepted else self.w_before

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "w_before": self.w_before,
            "dir": self.proposal_dir,
            "action": self.action.name,
            "accepted": self.accepted,
            "reward": self.reward,
            "s_before": self.s_before,
            "s_after": self.s_after,
            "q_new": self.updated_value,
        }


class RunTrace:
    """Per-step log of one run, stored column-wise.

    Only the single Q entry written at each step is kept (``q_new``); the
    entry's coordinates are ``(s_before, action)``. Column arrays are
    exposed as attributes: ``w_before, dir, action, accepted, reward,
    s_before, s_after, q_new, restart``.
    """

    def __init__(self, params: ProblemParams, ints: np.ndarray, floats: np.ndarray,
                 censored: bool = False, algo: str = "lrsao"):
        ints = np.ascontiguousarray(ints, dtype=np.int64).reshape(-1, 7)
        floats = np.ascontiguousarray(floats, dtype=np.float64).reshape(-1, 2)
        if ints.shape[0] != floats.shape[0]:
            raise TraceError("integer and float columns differ in length")
        self.params = params
        self.censored = censored
        self.algo = algo
        self._ints = ints
        self._floats = floats

    w_before = property(lambda self: self._ints[:, 0])
    dir = property(lambda self: self._ints[:, 1])
    action = property(lambda self: self._ints[:, 2])
    accepted = property(lambda self: self._ints[:, 3].astype(bool))
    s_before = property(lambda self: self._ints[:, 4])
    s_after = property(lambda self: self._ints[:, 5])
    restart = property(lambda self: self._ints[:, 6].astype(bool))
    reward = property(lambda self: self._floats[:, 0])
    q_new = property(lambda self: self._floats[:, 1])

    @property
    def ints(self) -> np.ndarray:
        return self._ints

    @property
    def floats(self) -> np.ndarray:
        return self._floats

    def __len__(self) -> int:
        return self._ints.shape[0]

    def __getitem__(self, t: int) -> StepRecord:
        row, fl = self._ints[t], self._floats[t]
        return StepRecord(
            t=int(t) if t >= 0 else len(self) + int(t),
            w_before=int(row[0]),
            proposal_dir=int(row[1]),
            action=ObjectiveId(int(row[2])),
            accepted=bool(row[3]),
            reward=float(fl[0]),
            s_before=int(row[4]),
            s_after=int(row[5]),
            updated_value=float(fl[1]),
            restart=bool(row[6]),
        )

    def __iter__(self) -> Iterator[StepRecord]:
        for t in range(len(self)):
            yield self[t]

    @property
    def steps(self) -> list[StepRecord]:
        return list(self)

    def w_after(self) -> np.ndarray:
        return self.w_before + np.where(self.accepted, self.dir, 0)

    def weights(self) -> np.ndarray:
        """Positions ``x_0, ..., x_len`` (restarts show up as jumps to 0)."""
        after = self.w_after()
        after = np.where(self.restart, 0, after)
        return np.concatenate([[0], after]).astype(np.int64)

    def replay_qtable(self) -> QTable:
        """Rebuild the final table by writing each ``q_new`` into place."""
        q = QTable(self.params.n)
        for t in range(len(self)):
            q.values[self._ints[t, 4], self._ints[t, 2]] = self._floats[t, 1]
            if self._ints[t, 6]:
                q.values[:, :] = 0.0
        return q

    @classmethod
    def from_records(cls, params: ProblemParams, records, censored: bool = False,
                     algo: str = "lrsao") -> "RunTrace":
        records = list(records)
        ints = np.zeros((len(records), 7), dtype=np.int64)
        floats = np.zeros((len(records), 2), dtype=np.float64)
        for k, r in enumerate(records):
            if r.t != k:
                raise TraceError(f"record {k} carries t={r.t}")
            if r.proposal_dir not in (1, -1):
                raise TraceError(f"record {k}: dir must be +1 or -1, got {r.proposal_dir}")
            ints[k] = (r.w_before, r.proposal_dir, int(r.action), int(r.accepted),
                       r.s_before, r.s_after, int(r.restart))
            floats[k] = (r.reward, r.updated_value)
        return cls(params, ints, floats, censored=censored, algo=algo)

    def to_jsonl(self, fh) -> None:
        extra = self.algo != "lrsao"
        for rec in self:
            d = rec.to_json()
            if extra:
                d["algo"] = self.algo
                d["restart"] = rec.restart
            fh.write(json.dumps(d) + "\n")

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            self.to_jsonl(fh)

    @classmethod
    def read_jsonl(cls, path, params: ProblemParams, censored: bool = False) -> "RunTrace":
        records = []
        algo = "lrsao"
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                d = json.loads(line)
                algo = d.get("algo", algo)
                records.append(StepRecord(
                    t=d["t"], w_before=d["w_before"], proposal_dir=d["dir"],
                    action=ObjectiveId.parse(d["action"]), accepted=d["accepted"],
                    reward=d["reward"], s_before=d["s_before"], s_after=d["s_after"],
                    updated_value=d["q_new"], restart=d.get("restart", False),
                ))
        return cls.from_records(params, records, censored=censored, algo=algo)


@dataclass
class RunResult:
    T: int
    T1: Optional[int]
    T2: Optional[int]
    T3: Optional[int]
    censored: bool
    visits: np.ndarray
    action_counts: np.ndarray
    final_weight: int
    restarts: int = 0
    algo: str = "lrsao"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["visits"] = self.visits.tolist()
        d["action_counts"] = self.action_counts.tolist()
        return d

    def __eq__(self, other):
        if not isinstance(other, RunResult):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        return a == b


def _phase_times(T: int, t1: int, t12: int, censored: bool):
    T1 = t1 if t1 >= 0 else None
    T2 = t12 - t1 if t12 >= 0 and t1 >= 0 else None
    T3 = T - t12 if (t12 >= 0 and not censored) else None
    return T1, T2, T3


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)


def simulate(
    params: ProblemParams,
    alpha: float,
    gamma: float,
    penalty: float,
    use_penalty: bool,
    reward_mode: int,
    restart_cutoff: int,
    max_iters: int,
    kernel: str,
    seed: int,
    record: bool,
    algo: str = "lrsao",
):
    """Shared driver for LRSAO and the EA+RL baseline."""
    out = _kernels.simulate(
        params.n, params.ell, float(alpha), float(gamma), float(penalty), bool(use_penalty),
        int(reward_mode), int(restart_cutoff), int(max_iters), kernel == "bitstring",
        _seed64(seed), bool(record), -1,
    )
    T, t1, t12, censored, w, visits, counts, _q, restarts, tint, tflt, _n = out
    T1, T2, T3 = _phase_times(T, t1, t12, censored)
    result = RunResult(
        T=int(T), T1=T1, T2=T2, T3=T3, censored=bool(censored), visits=visits,
        action_counts=counts, final_weight=int(w), restarts=int(restarts), algo=algo,
    )
    trace = RunTrace(params, tint, tflt, censored=bool(censored), algo=algo) if record else None
    return result, trace


def run_lrsao(config: RunConfig, seed: int):
    """Run Algorithm LRSAO once. Returns ``(RunResult, RunTrace or None)``."""
    config.validate()
    h = config.hyper
    return simulate(
        config.params, h.alpha, h.gamma, h.penalty_r, True, _kernels.SELECTED, 0,
        config.iter_cap, config.kernel, seed, config.record_trace,
    )


@dataclass
class BatchResult:
    T: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    censored: np.ndarray
    restarts: np.ndarray = field(default=None)

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())


def simulate_batch(params, alpha, gamma, penalty, use_penalty, reward_mode, restart_cutoff,
                   max_iters, kernel, seeds, stop_weight: int = -1) -> BatchResult:
    seeds = np.asarray([int(s) & MASK64 for s in seeds], dtype=np.uint64)
    out = _kernels.simulate_batch(
        params.n, params.ell, float(alpha), float(gamma), float(penalty), bool(use_penalty),
        int(reward_mode), int(restart_cutoff), int(max_iters), kernel == "bitstring",
        seeds, int(stop_weight),
    )
    T, t1, t12, cens = out[:, 0], out[:, 1], out[:, 2], out[:, 3].astype(bool)
    reached1 = t1 >= 0
    reached2 = t12 >= 0
    T2 = np.where(reached1 & reached2, t12 - t1, -1)
    T3 = np.where(reached2 & ~cens, T - t12, -1)
    return BatchResult(T=T, T1=t1, T2=T2, T3=T3, censored=cens, restarts=out[:, 4])


def run_lrsao_batch(config: RunConfig, seeds) -> BatchResult:
    """Untraced runs for many seeds. Phase times are -1 where undefined."""
    config.validate()
    h = config.hyper
    return simulate_batch(config.params, h.alpha, h.gamma, h.penalty_r, True, _kernels.SELECTED,
                          0, config.iter_cap, config.kernel, seeds)


def sample_phase1_times(config: RunConfig, seeds) -> np.ndarray:
    """First hitting times of weight ``ell + 1``; each run stops there."""
    config.validate()
    h = config.hyper
    res = simulate_batch(config.params, h.alpha, h.gamma, h.penalty_r, True, _kernels.SELECTED,
                         0, config.iter_cap, config.kernel, seeds,
                         stop_weight=config.params.ell + 1)
    if res.n_censored:
        raise LrsaoError(f"{res.n_censored} runs censored before leaving the left plateau")
    return res.T1


# --- plain-Python reference path -------------------------------------------------


@dataclass
class StepState:
    w: int
    q: QTable
    t: int = 0


def random_one_bit_flip(w: int, n: int, rng) -> int:
    """Weight of the offspring after flipping one uniformly chosen bit."""
    return w + 1 if rng.below(n) >= w else w - 1


def lrsao_step(state: StepState, rng, p: ProblemParams, h: Hyperparams):
    """One iteration of the main loop; mutates ``state`` and returns it with the record."""
    w = state.w
    s = jump(w, p)
    if s >= p.n:
        raise ConfigError("the run has already reached the optimum")
    w_new = random_one_bit_flip(w, p.n, rng)
    a = select_action(state.q, s, rng)
    reward, accepted = reward_and_accept(objective_value(a, w, p), objective_value(a, w_new, p), h.penalty_r)
    w_next = w_new if accepted else w
    s_next = jump(w_next, p)
    new = q_update(state.q, s, a, reward, s_next, h)
    rec = StepRecord(
        t=state.t, w_before=w, proposal_dir=w_new - w, action=a, accepted=accepted,
        reward=reward, s_before=s, s_after=s_next, updated_value=new,
    )
    state.w = w_next
    state.t += 1
    return state, rec


def run_lrsao_reference(config: RunConfig, seed: int):
    """Slow transcription of :func:`run_lrsao` (weight kernel only)."""
    config.validate()
    p, h = config.params, config.hyper
    rng = SplitMix64(seed)
    state = StepState(0, QTable(p.n))
    records = []
    visits = np.zeros(p.n + 1, dtype=np.int64)
    visits[0] = 1
    counts = np.zeros((p.n + 1, 3), dtype=np.int64)
    censored = False
    while state.w < p.n:
        if state.t >= config.iter_cap:
            censored = True
            break
        state, rec = lrsao_step(state, rng, p, h)
        counts[rec.s_before, rec.action] += 1
        if rec.accepted:
            visits[state.w] += 1
        records.append(rec)
    trace = RunTrace.from_records(p, records, censored=censored)
    weights = trace.weights()
    hits1 = np.flatnonzero(weights == p.ell + 1)
    hits2 = np.flatnonzero(weights == p.n - p.ell)
    T1, T2, T3 = _phase_times(state.t, int(hits1[0]) if hits1.size else -1,
                              int(hits2[0]) if hits2.size else -1, censored)
    result = RunResult(T=state.t, T1=T1, T2=T2, T3=T3, censored=censored, visits=visits,
                       action_counts=counts, final_weight=state.w)
    return result, trace


def split_phases(weights, p: ProblemParams) -> tuple[int, int, int]:
    """Phase lengths ``(T1, T2, T3)`` of a trajectory ``x_0, ..., x_T`` ending at ``n``."""
    weights = np.asarray(weights)
    if weights.size == 0 or weights[0] != 0 or weights[-1] != p.n:
        raise PhaseError("trajectory must start at weight 0 and end at weight n")
    T = weights.size - 1
    hit1 = np.flatnonzero(weights == p.ell + 1)
    hit2 = np.flatnonzero(weights == p.n - p.ell)
    if hit1.size == 0 or hit2.size == 0:
        raise PhaseError("trajectory never reaches the phase markers ell+1 and n-ell")
    t1, t12 = int(hit1[0]), int(hit2[0])
    return t1, t12 - t1, T - t12
