"""Run bookkeeping shared by SHIELD and the baselines.

A :class:`SearchContext` owns the evaluation counter, the budget, the
objective mask and the PHV tracker, so every optimizer is charged and
sampled the same way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .encoding import Assignment, DesignSpace, MoveParams
from .metrics import FrontSample, PhvTracker
from .model import OBJECTIVE_NAMES
from .scenario import Scenario

OBJECTIVE_SETS = {
    "cost": (0,),
    "cost,carbon": (0, 1),
    "cost,carbon,water": (0, 1, 2),
}

SAMPLE_SECONDS = 0.25
SAMPLES_PER_EVAL_BUDGET = 200


def parse_objectives(spec) -> tuple[int, ...]:
    if spec is None:
        return (0, 1, 2)
    if isinstance(spec, str):
        names = [s.strip() for s in spec.split(",") if s.strip()]
    else:
        names = list(spec)
    if all(isinstance(n, (int, np.integer)) for n in names):
        idx = tuple(int(n) for n in names)
    else:
        try:
            idx = tuple(OBJECTIVE_NAMES.index(n) for n in names)
        except ValueError:
            raise ValueError(f"unknown objective in {spec!r}; choose from {OBJECTIVE_NAMES}") from None
    if not idx or len(set(idx)) != len(idx) or any(not 0 <= i < 3 for i in idx):
        raise ValueError(f"bad objective selection {spec!r}")
    return idx


@dataclass(frozen=True)
class Budget:
    """Exactly one of a generation count, a wall-clock limit or an evaluation count."""

    generations: int | None = None
    seconds: float | None = None
    evaluations: int | None = None

    def __post_init__(self):
        given = [v for v in (self.generations, self.seconds, self.evaluations) if v is not None]
        if len(given) != 1:
            raise ValueError("specify exactly one budget kind")
        if given[0] < 0:
            raise ValueError("budget must be non-negative")

    @property
    def kind(self) -> str:
        if self.generations is not None:
            return "generations"
        if self.seconds is not None:
            return "seconds"
        return "evaluations"


class BudgetExhausted(Exception):
    pass


@dataclass
class RunResult:
    algorithm: str
    epoch: int
    objectives: tuple[int, ...]
    evaluations: int
    generations: int
    elapsed: float
    tracker: PhvTracker
    log: list[dict]
    extra: dict = field(default_factory=dict)

    @property
    def front(self) -> np.ndarray:
        return self.tracker.front()

    def front_solutions(self) -> list[tuple[Assignment, np.ndarray]]:
        """(assignment, raw 3-objective vector) for every front member."""
        return self.tracker.front_payloads()

    def trace(self, lower=None, upper=None) -> list[FrontSample]:
        if lower is None:
            front = self.front
            lower, upper = front.min(axis=0), front.max(axis=0)
        return self.tracker.series(lower, upper)


class SearchContext:
    def __init__(self, scenario: Scenario, epoch: int, budget: Budget,
                 objectives=None, moves: MoveParams | None = None):
        self.scenario = scenario
        self.epoch = epoch
        self.budget = budget
        self.space = DesignSpace(scenario, epoch, moves)
        self.obj_idx = np.array(parse_objectives(objectives), dtype=int)
        self.m = len(self.obj_idx)
        self.tracker = PhvTracker(self.m)
        self.evaluations = 0
        self.generation = 0
        self.best_raw = np.full(3, np.inf)
        self.log: list[dict] = []
        self._start = time.perf_counter()
        self._last_sample = self._start
        self._stride = None
        if budget.evaluations is not None:
            self._stride = max(1, budget.evaluations // SAMPLES_PER_EVAL_BUDGET)

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._start

    def out_of_evaluations(self) -> bool:
        b = self.budget
        if b.evaluations is not None:
            return self.evaluations >= b.evaluations
        if b.seconds is not None:
            return self.elapsed >= b.seconds
        return False

    def running(self) -> bool:
        """True while another generation may start."""
        if self.budget.generations is not None:
            return self.generation < self.budget.generations
        return not self.out_of_evaluations()

    def evaluate(self, a: Assignment) -> np.ndarray:
        """Masked objective vector of ``a``; charges one evaluation."""
        if self.out_of_evaluations():
            raise BudgetExhausted
        raw = self.space.fleet.objectives(a.rates, a.rho, self.epoch)
        self.evaluations += 1
        np.minimum(self.best_raw, raw, out=self.best_raw)
        f = raw[self.obj_idx]
        self.tracker.feed(f, (a, raw))
        if self._stride is not None:
            if self.evaluations % self._stride == 0:
                self._sample()
        elif self.budget.seconds is not None:
            now = time.perf_counter()
            if now - self._last_sample >= SAMPLE_SECONDS:
                self._sample()
        return f

    def _sample(self):
        self._last_sample = time.perf_counter()
        self.tracker.sample(self._last_sample - self._start, self.evaluations)

    def end_generation(self, ideal=None) -> None:
        self.generation += 1
        if self.budget.generations is not None:
            self._sample()
        self.log.append({
            "generation": self.generation,
            "evaluations": self.evaluations,
            "elapsed_s": self.elapsed,
            "ideal": None if ideal is None else [float(v) for v in ideal],
            "best_raw": [float(v) for v in self.best_raw],
        })

    def finish(self, algorithm: str, **extra) -> RunResult:
        self._sample()
        return RunResult(algorithm=algorithm, epoch=self.epoch,
                         objectives=tuple(int(i) for i in self.obj_idx),
                         evaluations=self.evaluations, generations=self.generation,
                         elapsed=self.elapsed, tracker=self.tracker, log=self.log, extra=extra)
