"""Machine-checkable properties of LRSAO runs, evaluated over recorded traces.

Every checker rebuilds the Q-table it needs from the ``q_new`` column of
the trace (step ``k`` writes entry ``(s_before[k], action[k])`` and yields
the table ``Q_{k+1}``), so a violation means either the engine or the
property is wrong. Violations are reported with the table time ``t`` at
which the offending value is first present, or the step index for
properties about actions and positions.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .agent import Hyperparams
from .engine import RunResult, RunTrace
from .errors import InstantiationError, TraceError
from .objectives import ObjectiveId, ProblemParams, jump, objective_value

L, J, R = int(ObjectiveId.L), int(ObjectiveId.J), int(ObjectiveId.R)


@dataclass(frozen=True)
class Violation:
    lemma_id: str
    t: int
    detail: str

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def write_violations(violations, fh) -> None:
    for v in violations:
        fh.write(v.to_json() + "\n")


# --- trace helpers ------------------------------------------------------------


def validate_trace(trace: RunTrace, p: ProblemParams) -> None:
    """Raise TraceError unless the trace is a consistent restart-free LRSAO path."""
    m = len(trace)
    if m == 0:
        return
    wb, d, a = trace.w_before, trace.dir, trace.action
    if np.any((d != 1) & (d != -1)):
        raise TraceError("dir must be +1 or -1")
    if np.any((a < 0) | (a > 2)):
        raise TraceError("action out of range")
    if np.any(trace.restart):
        raise TraceError("invariant checkers expect a trace without restarts")
    if wb[0] != 0:
        raise TraceError(f"trace must start at weight 0, got {wb[0]}")
    wa = trace.w_after()
    if np.any((wb < 0) | (wb > p.n) | (wa < 0) | (wa > p.n)):
        raise TraceError("weight outside [0, n]")
    if np.any(wb[1:] != wa[:-1]):
        k = int(np.flatnonzero(wb[1:] != wa[:-1])[0]) + 1
        raise TraceError(f"step {k} starts at weight {wb[k]}, previous step ended at {wa[k - 1]}")
    table = np.array([jump(w, p) for w in range(p.n + 1)], dtype=np.int64)
    if np.any(trace.s_before != table[wb]) or np.any(trace.s_after != table[wa]):
        raise TraceError("state column disagrees with Jump of the weight column")
    if np.any(wb[:-1] == p.n):
        raise TraceError("trace continues after reaching the optimum")


def first_hit(trace: RunTrace, weight: int) -> int:
    """Smallest ``t >= 1`` with ``x_t = weight``, or -1."""
    hits = np.flatnonzero(trace.w_after() == weight)
    return int(hits[0]) + 1 if hits.size else -1


def _writes(trace: RunTrace, s: int, a: int) -> np.ndarray:
    return np.flatnonzero((trace.s_before == s) & (trace.action == a))


def _neg_alpha_r(h: Hyperparams) -> float:
    return -h.alpha_r


# --- checkers -----------------------------------------------------------------


def check_q_upper_bound(trace: RunTrace, p: ProblemParams, h: Hyperparams) -> list[Violation]:
    """Every entry of ``Q_t`` for ``t < T`` lies strictly below ``(n-ell-1)/(1-gamma)``."""
    validate_trace(trace, p)
    bound = (p.n - p.ell - 1) / (1.0 - h.gamma)
    # Q_T is produced by the last step and is not covered when the run finished.
    lim = len(trace) if trace.censored else max(len(trace) - 1, 0)
    q = trace.q_new[:lim]
    out = []
    for k in np.flatnonzero(q >= bound):
        s, a = int(trace.s_before[k]), ObjectiveId(int(trace.action[k])).name
        out.append(Violation("q_upper_bound", int(k) + 1, f"Q[{s},{a}]={float(q[k])!r} >= {bound!r}"))
    return out


@njit(cache=True)
def _positive_rows(n, s_before, action, q_new):
    q = np.zeros((n + 1, 3))
    bad = []
    for k in range(s_before.shape[0]):
        s = s_before[k]
        q[s, action[k]] = q_new[k]
        c = 0
        for a in range(3):
            if q[s, a] > 0.0:
                c += 1
        if c > 1:
            bad.append((k, q[s, 0], q[s, 1], q[s, 2]))
    return bad


def check_single_positive(trace: RunTrace) -> list[Violation]:
    """At most one positive entry per row of the table at every time."""
    validate_trace(trace, trace.params)
    if len(trace) == 0:
        return []
    bad = _positive_rows(trace.params.n, trace.s_before, trace.action, trace.q_new)
    return [
        Violation("single_positive", int(k) + 1,
                  f"row {int(trace.s_before[int(k)])} = [{float(v0)!r}, {float(v1)!r}, {float(v2)!r}]")
        for k, v0, v1, v2 in bad
    ]


def is_strict_local_max(p: ProblemParams, s: int, a: ObjectiveId) -> bool:
    """Whether every weight in state ``s`` is a strict local maximum of objective ``a``."""
    positions = [w for w in range(p.n + 1) if jump(w, p) == s]
    if not positions:
        return False
    for w in positions:
        v = objective_value(a, w, p)
        for u in (w - 1, w + 1):
            if 0 <= u <= p.n and objective_value(a, u, p) >= v:
                return False
    return True


def check_local_max_zero(trace: RunTrace, s: int, a) -> list[Violation]:
    """``Q[s, a]`` stays zero when every position of state ``s`` is a strict local max of ``a``."""
    p = trace.params
    a = ObjectiveId.parse(a)
    if not is_strict_local_max(p, s, a):
        raise InstantiationError(f"state {s} is not a strict local maximum of {a.name}")
    validate_trace(trace, p)
    q = trace.q_new
    return [
        Violation("local_max_zero", int(k) + 1, f"Q[{s},{a.name}]={float(q[k])!r} != 0")
        for k in _writes(trace, s, int(a)) if q[k] != 0.0
    ]


def check_few_mistakes(trace: RunTrace, p: ProblemParams, h: Hyperparams) -> list[Violation]:
    """Phase-1 properties: ``Q[0,J], Q[0,R]`` in ``{0, -alpha r}`` for ``t <= T1``,
    J and R each selected at most once in steps ``0 .. T1-2``, and L selected at step ``T1-1``."""
    validate_trace(trace, p)
    t1 = first_hit(trace, p.ell + 1)
    if t1 < 0:
        raise TraceError("trace does not cover phase 1")
    low = _neg_alpha_r(h)
    out = []
    act = trace.action
    for a in (J, R):
        for k in _writes(trace, 0, a):
            if k >= t1:
                break
            v = trace.q_new[k]
            if v != 0.0 and v != low:
                out.append(Violation("few_mistakes", int(k) + 1,
                                     f"Q[0,{ObjectiveId(a).name}]={float(v)!r} not in {{0, {low!r}}}"))
        uses = np.flatnonzero(act[: max(t1 - 1, 0)] == a)
        for k in uses[1:]:
            out.append(Violation("few_mistakes", int(k),
                                 f"{ObjectiveId(a).name} selected again before T1-1 (use {int(np.searchsorted(uses, k)) + 1})"))
    if act[t1 - 1] != L:
        out.append(Violation("few_mistakes", t1 - 1,
                             f"step T1-1 selects {ObjectiveId(int(act[t1 - 1])).name}, expected L"))
    out.sort(key=lambda v: v.t)
    return out


def check_few_visits(result: RunResult, p: ProblemParams, limit: int = 5) -> list[Violation]:
    """Each weight in ``[ell+3 .. n-ell-2]`` is entered at most ``limit`` times."""
    lo, hi = p.ell + 3, p.n - p.ell - 2
    if lo > hi:
        return []
    visits = np.asarray(result.visits)
    return [
        Violation("few_visits", -1, f"state {s} visited {int(visits[s])} times > {limit}")
        for s in range(lo, hi + 1) if visits[s] > limit
    ]


def check_phase3(trace: RunTrace, p: ProblemParams, h: Hyperparams) -> list[Violation]:
    """``Q[0,R] >= -alpha r`` and ``Q[n-ell-1,R] >= 0`` always; from ``T1+T2`` on the
    weight stays ``>= n-ell-1``; J moves at most twice per walk on ``[n-ell .. n-1]``."""
    validate_trace(trace, p)
    t12 = first_hit(trace, p.n - p.ell)
    if t12 < 0:
        raise TraceError("trace does not cover phase 3")
    low = _neg_alpha_r(h)
    edge = p.n - p.ell - 1
    q = trace.q_new
    out = []
    for k in _writes(trace, 0, R):
        if q[k] < low:
            out.append(Violation("phase3", int(k) + 1, f"Q[0,R]={float(q[k])!r} < {low!r}"))
    for k in _writes(trace, edge, R):
        if q[k] < 0.0:
            out.append(Violation("phase3", int(k) + 1, f"Q[{edge},R]={float(q[k])!r} < 0"))
    w = trace.weights()
    for t in np.flatnonzero(w[t12:] < edge):
        out.append(Violation("phase3", int(t) + t12, f"weight {int(w[t + t12])} < {edge} after T1+T2"))

    wb = trace.w_before
    plateau = (wb >= p.n - p.ell) & (wb <= p.n - 1)
    starts = plateau & ~np.concatenate([[False], plateau[:-1]])
    walk = np.cumsum(starts)
    j_moves = plateau & (trace.action == J) & trace.accepted
    seen: dict[int, int] = {}
    for k in np.flatnonzero(j_moves):
        wid = int(walk[k])
        seen[wid] = seen.get(wid, 0) + 1
        if seen[wid] > 2:
            out.append(Violation("phase3", int(k), f"J move number {seen[wid]} within one plateau walk"))
    out.sort(key=lambda v: v.t)
    return out


def check_q_jump_nonneg(trace: RunTrace, p: ProblemParams) -> list[Violation]:
    """``Q[s,J] >= 0`` on the slope states always, and ``Q[0,L] > 0`` for ``T1 <= t <= T1+T2``."""
    validate_trace(trace, p)
    q = trace.q_new
    s_b, act = trace.s_before, trace.action
    out = []
    slope = (s_b >= p.ell + 1) & (s_b <= p.n - p.ell - 1) & (act == J)
    for k in np.flatnonzero(slope & (q < 0.0)):
        out.append(Violation("q_jump_nonneg", int(k) + 1, f"Q[{int(s_b[k])},J]={float(q[k])!r} < 0"))

    t1 = first_hit(trace, p.ell + 1)
    if t1 >= 0:
        t12 = first_hit(trace, p.n - p.ell)
        end = t12 if t12 >= 0 else len(trace)
        writes = _writes(trace, 0, L)
        before = writes[writes < t1]
        at_t1 = q[before[-1]] if before.size else 0.0
        if not at_t1 > 0.0:
            out.append(Violation("q_jump_nonneg", t1, f"Q[0,L]={float(at_t1)!r} <= 0 at T1"))
        for k in writes[(writes >= t1) & (writes < end)]:
            if not q[k] > 0.0:
                out.append(Violation("q_jump_nonneg", int(k) + 1, f"Q[0,L]={float(q[k])!r} <= 0 during phase 2"))
    out.sort(key=lambda v: v.t)
    return out


def check_plateau_lock(trace: RunTrace, p: ProblemParams) -> list[Violation]:
    """Once L improves inside ``[0 .. ell]`` during phase 1, L is selected until ``ell+1``;
    once R improves inside ``[n-ell .. n-1]``, R is selected until ``n``."""
    validate_trace(trace, p)
    m = len(trace)
    if m == 0:
        return []
    wb, act = trace.w_before, trace.action
    up = trace.accepted & (trace.dir == 1)
    out = []

    t1 = first_hit(trace, p.ell + 1)
    end1 = t1 if t1 >= 0 else m
    ev = np.flatnonzero(up[:end1] & (act[:end1] == L) & (wb[:end1] <= p.ell))
    if ev.size:
        for k in range(int(ev[0]) + 1, end1):
            if act[k] != L:
                out.append(Violation("plateau_lock", k,
                                     f"{ObjectiveId(int(act[k])).name} selected on the left plateau after an L improvement"))

    ev = np.flatnonzero(up & (act == R) & (wb >= p.n - p.ell) & (wb <= p.n - 1))
    if ev.size:
        for k in range(int(ev[0]) + 1, m):
            if act[k] != R:
                out.append(Violation("plateau_lock", k,
                                     f"{ObjectiveId(int(act[k])).name} selected on the right plateau after an R improvement"))
    return out


CHECKERS = (
    "q_upper_bound", "single_positive", "local_max_zero", "few_mistakes",
    "few_visits", "phase3", "q_jump_nonneg", "plateau_lock",
)


def run_all_checkers(trace: RunTrace, result: RunResult, p: ProblemParams, h: Hyperparams) -> list[Violation]:
    """Apply every checker to one run.

    For a censored run the phase-specific checks whose phase was never
    reached are skipped, and the visit bound (stated for complete runs) is
    not applied.
    """
    covers1 = first_hit(trace, p.ell + 1) >= 0
    covers3 = first_hit(trace, p.n - p.ell) >= 0
    full = not trace.censored
    out = []
    out += check_q_upper_bound(trace, p, h)
    out += check_single_positive(trace)
    out += check_local_max_zero(trace, p.n - p.ell - 1, ObjectiveId.J)
    out += check_local_max_zero(trace, p.ell + 1, ObjectiveId.L)
    if full or covers1:
        out += check_few_mistakes(trace, p, h)
    if full:
        out += check_few_visits(result, p)
    if full or covers3:
        out += check_phase3(trace, p, h)
    out += check_q_jump_nonneg(trace, p)
    out += check_plateau_lock(trace, p)
    return out
