"""Benchmark grids: many seeded runs per (n, ell) point, aggregated to CSV.

Per-run seeds are ``mix64(master_seed, point_index, run_index)``, so the
output does not depend on how the work is split across processes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .agent import default_hyperparams
from .analysis import mean_ci
from .baseline import EarlConfig, run_earl_batch
from .engine import RunConfig, run_lrsao_batch
from .errors import ConfigError, IoError, RangeError
from .objectives import ProblemParams, max_valid_ell, validate_params
from .rng import MASK64, mix64

ELL_RULES = ("const2", "cbrt", "sqrt", "half")
ALGOS = ("lrsao", "earl")
CSV_COLUMNS = (
    "algo", "n", "ell", "runs", "censored", "mean_T", "ci95_lo_T", "ci95_hi_T",
    "mean_T1", "mean_T2", "mean_T3", "master_seed",
)


def _round_sqrt(n: int) -> int:
    k = math.isqrt(n)
    # sqrt(n) >= k + 1/2  <=>  n > k^2 + k for integers
    return k + 1 if n > k * k + k else k


def _round_cbrt(n: int) -> int:
    k = round(n ** (1.0 / 3.0))
    while k ** 3 > n:
        k -= 1
    while (k + 1) ** 3 <= n:
        k += 1
    # cbrt(n) >= k + 1/2  <=>  8n >= (2k+1)^3
    return k + 1 if 8 * n >= (2 * k + 1) ** 3 else k


def ell_rule(n: int, rule: str) -> int:
    """Gap size for a grid point, clamped into the valid interval."""
    if rule not in ELL_RULES:
        raise ConfigError(f"unknown ell rule {rule!r}; expected one of {ELL_RULES}")
    hi = max_valid_ell(n)
    if n < 9 or hi < 2:
        raise RangeError(f"no valid ell for n={n}")
    if rule == "const2":
        ell = 2
    elif rule == "cbrt":
        ell = _round_cbrt(n)
    elif rule == "sqrt":
        ell = _round_sqrt(n)
    else:
        ell = (n - 5) // 2
    return min(max(ell, 2), hi)


def parse_earl_cutoff(spec) -> Optional[str]:
    """Normalize an EA+RL restart cutoff: ``"none"``, ``"n2"`` or a positive integer string."""
    if spec is None:
        return "none"
    spec = str(spec).strip().lower()
    if spec in ("none", "n2"):
        return spec
    try:
        v = int(spec)
    except ValueError:
        raise ConfigError(f"earl cutoff must be 'none', 'n2' or a positive integer, got {spec!r}") from None
    if v < 1:
        raise ConfigError(f"earl cutoff must be positive, got {v}")
    return str(v)


def earl_cutoff_for(n: int, spec: str) -> Optional[int]:
    spec = parse_earl_cutoff(spec)
    if spec == "none":
        return None
    if spec == "n2":
        return n * n
    return int(spec)


@dataclass(frozen=True)
class ExperimentConfig:
    n_min: int
    n_max: int
    n_step: int = 50
    ell_rule: str = "const2"
    runs_per_point: int = 2000
    master_seed: int = 0
    algos: tuple = ("lrsao",)
    parallelism: int = 1
    out_path: Optional[str] = None
    # Restart cutoff of the EA+RL baseline: "n2" restarts after n^2 iterations
    # without a new best Jump value.
    earl_cutoff: str = "n2"
    earl_reward: str = "target_delta"
    max_iters: Optional[int] = None
    chunk_size: int = 500
    # Fixed gap size for every point instead of ``ell_rule``.
    ell_fixed: Optional[int] = None

    def validate(self) -> "ExperimentConfig":
        if self.n_min < 9:
            raise ConfigError(f"n_min must be >= 9, got {self.n_min}")
        if self.n_max < self.n_min:
            raise ConfigError(f"n_max={self.n_max} < n_min={self.n_min}")
        if self.n_step < 1:
            raise ConfigError(f"n_step must be >= 1, got {self.n_step}")
        if self.runs_per_point < 1:
            raise ConfigError(f"runs_per_point must be >= 1, got {self.runs_per_point}")
        if self.ell_rule not in ELL_RULES:
            raise ConfigError(f"unknown ell rule {self.ell_rule!r}")
        if not self.algos or any(a not in ALGOS for a in self.algos):
            raise ConfigError(f"algos must be a non-empty subset of {ALGOS}, got {self.algos}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")
        parse_earl_cutoff(self.earl_cutoff)
        if self.ell_fixed is not None:
            try:
                for n in range(self.n_min, self.n_max + 1, self.n_step):
                    validate_params(n, self.ell_fixed)
            except RangeError as exc:
                raise ConfigError(str(exc)) from exc
        return self

    def grid(self) -> list[ProblemParams]:
        out = []
        for n in range(self.n_min, self.n_max + 1, self.n_step):
            ell = ell_rule(n, self.ell_rule) if self.ell_fixed is None else self.ell_fixed
            out.append(ProblemParams(n, ell))
        return out

    def earl_config(self, p: ProblemParams) -> EarlConfig:
        return EarlConfig(p, reward_mode=self.earl_reward,
                          restart_cutoff=earl_cutoff_for(p.n, self.earl_cutoff),
                          max_iters=self.max_iters)

    def metadata(self) -> dict:
        d = asdict(self)
        d["algos"] = list(self.algos)
        d["earl"] = {
            "alpha": 0.8, "gamma": 0.99, "reward_mode": self.earl_reward,
            "restart_cutoff": self.earl_cutoff, "penalty": None,
        }
        d["lrsao"] = {"alpha": 0.8, "gamma": "1/(n+1)", "penalty_r": "n*(1/(alpha*(1-gamma))-1)"}
        return d


@dataclass(frozen=True)
class ExperimentRow:
    algo: str
    n: int
    ell: int
    runs: int
    censored: int
    mean_T: float
    ci95_lo_T: float
    ci95_hi_T: float
    mean_T1: float
    mean_T2: float
    mean_T3: float
    master_seed: int
    # Per-run samples kept in memory for downstream statistics; not serialized.
    samples: Optional[dict] = field(default=None, compare=False, repr=False)

    def as_record(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def run_seeds(master_seed: int, point_index: int, start: int, stop: int) -> np.ndarray:
    m = int(master_seed) & MASK64
    return np.array([mix64(m, point_index, j) for j in range(start, stop)], dtype=np.uint64)


def _run_chunk(task):
    algo, p, cfg, master_seed, point_index, start, stop = task
    seeds = run_seeds(master_seed, point_index, start, stop)
    if algo == "lrsao":
        b = run_lrsao_batch(cfg, seeds)
    else:
        b = run_earl_batch(cfg, seeds)
    return np.stack([b.T, b.T1, b.T2, b.T3, b.censored.astype(np.int64), b.restarts], axis=1)


def _mean_defined(x: np.ndarray) -> float:
    x = x[x >= 0]
    return float(x.mean()) if x.size else float("nan")


def _aggregate(algo: str, p: ProblemParams, data: np.ndarray, master_seed: int) -> ExperimentRow:
    T, T1, T2, T3, cens = data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4].astype(bool)
    done = T[~cens]
    if done.size:
        ci = mean_ci(done)
        mean, lo, hi = ci.mean, ci.ci95_lo, ci.ci95_hi
    else:
        mean = lo = hi = float("nan")
    return ExperimentRow(
        algo=algo, n=p.n, ell=p.ell, runs=int(T.size), censored=int(cens.sum()),
        mean_T=mean, ci95_lo_T=lo, ci95_hi_T=hi,
        mean_T1=_mean_defined(T1), mean_T2=_mean_defined(T2), mean_T3=_mean_defined(T3),
        master_seed=int(master_seed),
        samples={"T": T, "T1": T1, "T2": T2, "T3": T3, "censored": cens, "restarts": data[:, 5]},
    )


def run_experiment(config: ExperimentConfig, write: bool = True) -> list[ExperimentRow]:
    """Run the grid; rows are ordered by grid point, then by ``config.algos``."""
    config.validate()
    tasks, keys = [], []
    for point_index, p in enumerate(config.grid()):
        for algo in config.algos:
            if algo == "lrsao":
                cfg = RunConfig(p, default_hyperparams(p), max_iters=config.max_iters)
            else:
                cfg = config.earl_config(p)
            cfg.validate()
            for start in range(0, config.runs_per_point, config.chunk_size):
                stop = min(start + config.chunk_size, config.runs_per_point)
                tasks.append((algo, p, cfg, config.master_seed, point_index, start, stop))
                keys.append((point_index, algo, p))

    if config.parallelism == 1:
        chunks = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            chunks = list(pool.map(_run_chunk, tasks))

    rows = []
    i = 0
    while i < len(tasks):
        key = keys[i]
        j = i
        while j < len(tasks) and keys[j] == key:
            j += 1
        rows.append(_aggregate(key[1], key[2], np.concatenate(chunks[i:j]), config.master_seed))
        i = j

    if write and config.out_path:
        write_rows(rows, config.out_path)
        write_metadata(config, config.out_path + ".meta.json")
    return rows


def _guarded(fn):
    def wrapper(rows_or_config, path):
        try:
            return fn(rows_or_config, path)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@_guarded
def write_csv(rows: Sequence[ExperimentRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


@_guarded
def write_jsonl(rows: Sequence[ExperimentRow], path) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r.as_record()) + "\n")


def write_rows(rows: Sequence[ExperimentRow], path) -> None:
    """CSV by default; JSON-lines when the path ends in ``.jsonl``."""
    if str(path).endswith(".jsonl"):
        write_jsonl(rows, path)
    else:
        write_csv(rows, path)


@_guarded
def write_metadata(config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config.metadata(), fh, indent=2, sort_keys=True)
        fh.write("\n")


_INT_COLUMNS = {f.name for f in fields(ExperimentRow) if f.type in ("int", int)}


def _parse(col: str, v: str):
    if col == "algo":
        return v
    if col in _INT_COLUMNS:
        return int(v)
    return float(v)


def read_csv(path) -> list[ExperimentRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header {header}")
        return [ExperimentRow(**{c: _parse(c, v) for c, v in zip(header, line)}) for line in reader]


def read_rows(path) -> list[ExperimentRow]:
    if str(path).endswith(".jsonl"):
        with open(path) as fh:
            return [ExperimentRow(**json.loads(line)) for line in fh if line.strip()]
    return read_csv(path)


def default_parallelism() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
