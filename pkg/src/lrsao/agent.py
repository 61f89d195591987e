"""Tabular Q-learning pieces: hyperparameters, greedy selection, reward, update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HyperparamError
from .objectives import ACTIONS, ObjectiveId, ProblemParams

DEFAULT_ALPHA = 0.8


@dataclass(frozen=True)
class Hyperparams:
    alpha: float
    gamma: float
    penalty_r: float

    @property
    def alpha_r(self) -> float:
        # Computed once; the invariant checkers compare against this exact double.
        return self.alpha * self.penalty_r


def default_hyperparams(p: ProblemParams, alpha: float = DEFAULT_ALPHA) -> Hyperparams:
    gamma = 1.0 / (p.n + 1)
    penalty = p.n * (1.0 / (alpha * (1.0 - gamma)) - 1.0)
    return Hyperparams(alpha, gamma, penalty)


def penalty_window(h: Hyperparams, p: ProblemParams) -> tuple[float, float]:
    """Open interval the penalty must lie in, ``(lower, upper)``."""
    a, g = h.alpha, h.gamma
    lower = (1.0 / (a * (1.0 - g)) - 1.0) * (p.n - p.ell - 1)
    upper = 1.0 / (a * g)
    return lower, upper


def validate_hyperparams(h: Hyperparams, p: ProblemParams) -> Hyperparams:
    a, g, r = h.alpha, h.gamma, h.penalty_r
    if not 0.0 < a < 1.0:
        raise HyperparamError(f"alpha={a} must lie in (0, 1)")
    if not 0.0 < g < 1.0:
        raise HyperparamError(f"gamma={g} must lie in (0, 1)")
    if not r > 0.0:
        raise HyperparamError(f"penalty r={r} must be positive")
    side = (1.0 - g) / (g * (1.0 - a * (1.0 - g)))
    if not side > p.n - p.ell - 1:
        raise HyperparamError(
            f"side condition violated: (1-gamma)/(gamma(1-alpha(1-gamma))) = {side:.6g} "
            f"<= n-ell-1 = {p.n - p.ell - 1}"
        )
    lower, upper = penalty_window(h, p)
    if not lower < r:
        raise HyperparamError(
            f"penalty lower bound violated: r={r:.6g} <= (1/(alpha(1-gamma)) - 1)(n-ell-1) = {lower:.6g}"
        )
    if not r < upper:
        raise HyperparamError(f"penalty upper bound violated: r={r:.6g} >= 1/(alpha*gamma) = {upper:.6g}")
    return h


class QTable:
    """``(n + 1) x 3`` action-value table, rows indexed by state value."""

    def __init__(self, n: int, values: np.ndarray | None = None):
        self.n = n
        if values is None:
            values = np.zeros((n + 1, 3), dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape != (n + 1, 3):
            raise ValueError(f"expected shape {(n + 1, 3)}, got {self.values.shape}")

    def __getitem__(self, key):
        s, a = key
        return self.values[s, int(a)]

    def __setitem__(self, key, value):
        s, a = key
        self.values[s, int(a)] = value

    def row(self, s: int) -> np.ndarray:
        return self.values[s]

    def copy(self) -> "QTable":
        return QTable(self.n, self.values.copy())

    def __eq__(self, other):
        return isinstance(other, QTable) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"QTable(n={self.n})"


def maximizers(row) -> list[ObjectiveId]:
    """Arg-max of a Q row under exact equality, in (L, J, R) order."""
    best = max(row[a] for a in ACTIONS)
    return [a for a in ACTIONS if row[a] == best]


def select_action(q: QTable, s: int, rng) -> ObjectiveId:
    """Greedy choice with uniform tie-breaking.

    ``rng`` must expose ``below(k)`` (see :class:`lrsao.rng.SplitMix64`). It
    is consulted only when there is more than one maximizer.
    """
    cands = maximizers(q.row(s))
    if len(cands) == 1:
        return cands[0]
    return cands[rng.below(len(cands))]


def reward_and_accept(f_old: int, f_new: int, r: float) -> tuple[float, bool]:
    if f_new < f_old:
        return 0.0, False
    if f_new == f_old:
        return -r, True
    return float(f_new - f_old), True


def q_update(
    q: QTable, s_t: int, f_t: ObjectiveId, reward: float, s_next: int, h: Hyperparams
) -> float:
    """Apply one learning step in place and return the new entry value."""
    a = int(f_t)
    max_next = q.values[s_next].max()
    old = q.values[s_t, a]
    new = (1.0 - h.alpha) * old + h.alpha * (reward + h.gamma * max_next)
    if new == 0.0:
        new = _sign_floor(old, reward, max_next)
    q.values[s_t, a] = new
    return new


_TINY = float(np.nextafter(0.0, 1.0))


def _sign_floor(old: float, reward: float, max_next: float) -> float:
    """Zero result of an update whose exact value is strictly signed.

    A positive entry that keeps earning zero reward shrinks geometrically and
    would underflow to 0.0 after a few hundred steps, creating a tie the real
    valued update never produces. When the operand signs fix the sign of the
    exact result, the smallest subnormal of that sign is stored instead.
    """
    if old > 0.0 and reward >= 0.0 and max_next >= 0.0:
        return _TINY
    if old < 0.0 and reward <= 0.0 and max_next <= 0.0:
        return -_TINY
    return 0.0
