"""Seeded experiment harness comparing the four learners on random games."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .compiler import LearnerConfig
from .data import GroundTruth, random_game, sample_plays
from .equilibrium import LqreConfig, solve_lqre
from .estimate import Method, error
from .learners import learn_lqre, learn_naive, learn_naive_lqre, learn_naive_nash


class Axis(str, enum.Enum):
    TRAINING_SIZE = "training_size"
    LAMBDA = "lambda"
    WRONG_LAMBDA = "wrong_lambda"


@dataclass(frozen=True)
class ExperimentSpec:
    """One table: a sweep over ``values`` along ``axis``.

    ``training_size`` varies M at true (and learning) lambda ``lam``;
    ``lambda`` varies the true and learning lambda together at ``m``;
    ``wrong_lambda`` varies the true lambda while learning at ``learn_lambda``.
    """

    axis: Axis
    values: tuple
    game_count: int = 10
    seed: int = 0
    config: LearnerConfig = field(default_factory=lambda: LearnerConfig(lam=3.0))
    m: int = 10
    lam: float = 3.0
    learn_lambda: float | None = None
    players: int = 2
    actions: int = 2
    payoff_range: tuple = (1.0, 2.0)
    methods: tuple = tuple(Method)
    error_observed_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if not self.values:
            raise ValueError("values must not be empty")
        if self.game_count < 1:
            raise ValueError("game_count must be positive")
        if self.axis is Axis.WRONG_LAMBDA and self.learn_lambda is None:
            raise ValueError("wrong_lambda needs learn_lambda")

    def cell_parameters(self, value):
        """``(m, true_lambda, learning_lambda)`` for one column."""
        if self.axis is Axis.TRAINING_SIZE:
            return int(value), self.lam, self.lam
        if self.axis is Axis.LAMBDA:
            return self.m, float(value), float(value)
        return self.m, float(value), float(self.learn_lambda)


@dataclass(frozen=True)
class CellResult:
    method: Method
    axis_value: float
    game: int
    error: float | None
    failure: str | None = None


@dataclass(frozen=True)
class Row:
    method: str
    axis_value: float
    mean_error: float
    stderr: float
    n: int


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    cells: list

    def rows(self) -> list[Row]:
        out = []
        for method in self.spec.methods:
            for value in self.spec.values:
                errs = [c.error for c in self.cells
                        if c.method is method and c.axis_value == value and c.error is not None]
                if not errs:
                    out.append(Row(method.value, value, math.nan, math.nan, 0))
                    continue
                sd = float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0
                out.append(Row(method.value, value, float(np.mean(errs)), sd / math.sqrt(len(errs)), len(errs)))
        return out

    def mean(self, method, value) -> float:
        for row in self.rows():
            if row.method == Method(method).value and row.axis_value == value:
                return row.mean_error
        raise KeyError((method, value))

    def improvement(self) -> dict:
        """Percent error reduction of the WCSP learner over Naive, per column."""
        out = {}
        for value in self.spec.values:
            naive, lqre = self.mean(Method.NAIVE, value), self.mean(Method.LQRE, value)
            out[value] = 100.0 * (naive - lqre) / naive
        return out

    @property
    def failures(self) -> list:
        return [c for c in self.cells if c.failure is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "axis_value", "mean_error", "stderr"])
        for row in self.rows():
            writer.writerow([row.method, row.axis_value, f"{row.mean_error:.6f}", f"{row.stderr:.6f}"])
        if self.spec.axis is Axis.WRONG_LAMBDA and {Method.LQRE, Method.NAIVE} <= set(self.spec.methods):
            for value, pct in self.improvement().items():
                writer.writerow(["improvement_pct", value, f"{pct:.3f}", ""])
        return buf.getvalue()

    def to_json(self) -> dict:
        out = {
            "axis": self.spec.axis.value,
            "values": list(self.spec.values),
            "game_count": self.spec.game_count,
            "seed": self.spec.seed,
            "rows": [row.__dict__ for row in self.rows()],
            "failures": [{"method": c.method.value, "axis_value": c.axis_value, "game": c.game,
                          "reason": c.failure} for c in self.failures],
        }
        if self.spec.axis is Axis.WRONG_LAMBDA and {Method.LQRE, Method.NAIVE} <= set(self.spec.methods):
            out["improvement_pct"] = {str(k): v for k, v in self.improvement().items()}
        return json.loads(json.dumps(out, default=float).replace("NaN", "null"))


def _seed(*words) -> int:
    return int(np.random.SeedSequence(list(words)).generate_state(1, np.uint64)[0] >> np.uint64(1))


def game_seed(spec: ExperimentSpec, game: int) -> int:
    return _seed(spec.seed, game)


def data_seed(spec: ExperimentSpec, game: int, column: int) -> int:
    return _seed(spec.seed, game, column + 1)


def _run_cell(spec: ExperimentSpec, game_index: int, column: int) -> list[CellResult]:
    value = spec.values[column]
    m, true_lam, learn_lam = spec.cell_parameters(value)
    lo, hi = spec.payoff_range
    game = random_game(spec.players, spec.actions, lo, hi, game_seed(spec, game_index))
    results = []
    try:
        truth = GroundTruth(game, solve_lqre(game, LqreConfig(true_lam)), true_lam)
        dataset = sample_plays(truth, m, spec.config.noise_stddev, data_seed(spec, game_index, column))
    except Exception as exc:  # the whole cell fails, not the run
        return [CellResult(method, value, game_index, None, f"{type(exc).__name__}: {exc}")
                for method in spec.methods]
    config = replace(spec.config, lam=learn_lam)
    for method in spec.methods:
        try:
            if method is Method.NAIVE_NASH:
                if game.actions_per_player != (2, 2):
                    continue
                est = learn_naive_nash(dataset, config, truth)
            else:
                learner = {Method.LQRE: learn_lqre, Method.NAIVE: learn_naive,
                           Method.NAIVE_LQRE: learn_naive_lqre}[method]
                est = learner(dataset, config)
            results.append(CellResult(method, value, game_index,
                                      error(truth, est, spec.error_observed_only)))
        except Exception as exc:
            results.append(CellResult(method, value, game_index, None, f"{type(exc).__name__}: {exc}"))
    return results


def run_experiment(spec: ExperimentSpec, workers: int = 1, progress=None) -> ExperimentResult:
    """Run every (game, column) cell; results are identical for any ``workers``."""
    jobs = [(g, c) for g in range(spec.game_count) for c in range(len(spec.values))]
    cells = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_cell, spec, g, c) for g, c in jobs]
            for fut in futures:
                cells.extend(fut.result())
                if progress:
                    progress(len(cells))
    else:
        for g, c in jobs:
            cells.extend(_run_cell(spec, g, c))
            if progress:
                progress(len(cells))
    order = {m: k for k, m in enumerate(spec.methods)}
    cells.sort(key=lambda r: (order[r.method], spec.values.index(r.axis_value), r.game))
    return ExperimentResult(spec, cells)


def table1(game_count=10, seed=0, config=None, values=(10, 50, 100)) -> ExperimentSpec:
    """Error against training-set size at lambda 3."""
    return ExperimentSpec(Axis.TRAINING_SIZE, values, game_count, seed,
                          config or LearnerConfig(lam=3.0), lam=3.0)


def table2(game_count=10, seed=0, config=None, values=(1.0, 3.0, 10.0)) -> ExperimentSpec:
    """Error against lambda with ten samples."""
    return ExperimentSpec(Axis.LAMBDA, values, game_count, seed,
                          config or LearnerConfig(lam=3.0), m=10)


def table3(game_count=10, seed=0, config=None, values=(0.5, 1.0, 1.5, 2.0)) -> ExperimentSpec:
    """Learning at lambda 1 while the data come from other lambdas."""
    return ExperimentSpec(Axis.WRONG_LAMBDA, values, game_count, seed,
                          config or LearnerConfig(lam=1.0), m=10, learn_lambda=1.0)


PRESETS = {1: table1, 2: table2, 3: table3}
