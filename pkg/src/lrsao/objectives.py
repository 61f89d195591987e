"""Target and auxiliary fitness functions on the Jump landscape.

Every objective here depends on a bit string only through its Hamming
weight, so all of them take the weight ``w`` directly. Values are exact
integers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import RangeError

MIN_N = 8


class ObjectiveId(enum.IntEnum):
    """Action set of the agent. The integer values index Q-table columns."""

    L = 0
    J = 1
    R = 2

    @classmethod
    def parse(cls, value: "ObjectiveId | str | int") -> "ObjectiveId":
        if isinstance(value, ObjectiveId):
            return value
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(int(value))


ACTIONS = (ObjectiveId.L, ObjectiveId.J, ObjectiveId.R)


@dataclass(frozen=True)
class ProblemParams:
    n: int
    ell: int

    @property
    def max_ell(self) -> int:
        return max_valid_ell(self.n)

    def states(self) -> list[int]:
        """The state space: {0} u [ell+1 .. n-ell-1] u {n}."""
        return [0, *range(self.ell + 1, self.n - self.ell), self.n]


def max_valid_ell(n: int) -> int:
    return (n - 1) // 2 - 2


def validate_params(n: int, ell: int) -> ProblemParams:
    if int(n) != n or int(ell) != ell:
        raise RangeError(f"n and ell must be integers, got n={n!r}, ell={ell!r}")
    n, ell = int(n), int(ell)
    if n < MIN_N:
        raise RangeError(f"n must be >= {MIN_N}, got n={n}")
    hi = max_valid_ell(n)
    if hi < 2:
        raise RangeError(f"no valid ell for n={n}: the interval [2 .. {hi}] is empty")
    if not 2 <= ell <= hi:
        raise RangeError(f"ell={ell} outside [2 .. {hi}] for n={n}")
    return ProblemParams(n, ell)


def _check_weight(w: int, n: int) -> None:
    if not 0 <= w <= n:
        raise RangeError(f"weight {w} outside [0 .. {n}]")


def one_max(w: int) -> int:
    return int(w)


def jump(w: int, p: ProblemParams) -> int:
    _check_weight(w, p.n)
    if p.ell + 1 <= w <= p.n - p.ell - 1 or w == p.n:
        return int(w)
    return 0


def left_bridge(w: int, p: ProblemParams) -> int:
    _check_weight(w, p.n)
    return int(w) if w <= p.ell + 1 else 0


def right_bridge(w: int, p: ProblemParams) -> int:
    _check_weight(w, p.n)
    return int(w) if w >= p.n - p.ell - 1 else 0


_DISPATCH = {
    ObjectiveId.L: left_bridge,
    ObjectiveId.J: jump,
    ObjectiveId.R: right_bridge,
}


def objective_value(obj: ObjectiveId | str, w: int, p: ProblemParams) -> int:
    return _DISPATCH[ObjectiveId.parse(obj)](w, p)


def objective_table(p: ProblemParams) -> np.ndarray:
    """Values of (L, J, R) at every weight, shape ``(n + 1, 3)``."""
    table = np.zeros((p.n + 1, 3), dtype=np.int64)
    for w in range(p.n + 1):
        for a in ACTIONS:
            table[w, a] = objective_value(a, w, p)
    return table


def objective_on_bits(obj: ObjectiveId | str, bits, p: ProblemParams) -> int:
    """Evaluate an objective on an explicit bit string."""
    bits = np.asarray(bits)
    if bits.shape != (p.n,):
        raise RangeError(f"expected a bit string of length {p.n}, got shape {bits.shape}")
    return objective_value(obj, int(bits.sum()), p)
