"""EA+RL comparison algorithm.

Same loop as LRSAO (one-bit mutation, greedy Q-learning choice among
L/J/R, accept if the selected objective does not decrease) with a classical
reward and an optional restart:

``target_delta``
    ``Jump(x_{t+1}) - Jump(x_t)``; zero for rejected moves.
``selected_delta``
    ``f_t(x_new) - f_t(x_t)`` for accepted moves, zero otherwise.

Setting ``penalty`` adds the plateau branch: an accepted move that leaves
the selected objective unchanged earns ``-penalty``. ``selected_delta``
with the LRSAO penalty is LRSAO itself.

A restart fires after ``restart_cutoff`` consecutive iterations without a
new best Jump value since the last (re)start; weight and Q-table go back
to zero while the iteration counter keeps running.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import _kernels
from .engine import BatchResult, default_max_iters, simulate, simulate_batch
from .errors import ConfigError, LrsaoError
from .objectives import ProblemParams, validate_params

REWARD_MODES = {"target_delta": _kernels.TARGET, "selected_delta": _kernels.SELECTED}
EARL_GAMMA = 0.99


@dataclass(frozen=True)
class EarlConfig:
    params: ProblemParams
    alpha: float = 0.8
    gamma: float = EARL_GAMMA
    reward_mode: str = "target_delta"
    restart_cutoff: Optional[int] = None
    penalty: Optional[float] = None
    max_iters: Optional[int] = None
    kernel: str = "weight"
    record_trace: bool = False

    @property
    def iter_cap(self) -> int:
        return default_max_iters(self.params.n) if self.max_iters is None else self.max_iters

    def validate(self) -> "EarlConfig":
        try:
            validate_params(self.params.n, self.params.ell)
        except LrsaoError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma={self.gamma} must lie in (0, 1)")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"reward_mode must be one of {sorted(REWARD_MODES)}, got {self.reward_mode!r}")
        if self.restart_cutoff is not None and self.restart_cutoff < 1:
            raise ConfigError(f"restart_cutoff must be >= 1 or None, got {self.restart_cutoff}")
        if self.penalty is not None and not self.penalty > 0:
            raise ConfigError(f"penalty must be positive, got {self.penalty}")
        if self.iter_cap < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.iter_cap}")
        if self.kernel not in ("weight", "bitstring"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        return self

    def metadata(self) -> dict:
        return {
            "algo": "earl",
            "alpha": self.alpha,
            "gamma": self.gamma,
            "reward_mode": self.reward_mode,
            "restart_cutoff": self.restart_cutoff,
            "penalty": self.penalty,
        }

    def _kernel_args(self):
        return (
            self.params, self.alpha, self.gamma,
            0.0 if self.penalty is None else self.penalty, self.penalty is not None,
            REWARD_MODES[self.reward_mode], self.restart_cutoff or 0, self.iter_cap, self.kernel,
        )


def run_earl(config: EarlConfig, seed: int):
    """Run EA+RL once. Returns ``(RunResult, RunTrace or None)``."""
    config.validate()
    return simulate(*config._kernel_args(), seed, config.record_trace, algo="earl")


def run_earl_batch(config: EarlConfig, seeds) -> BatchResult:
    config.validate()
    return simulate_batch(*config._kernel_args(), seeds)
