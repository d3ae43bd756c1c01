"""Running algorithms side by side and reducing their results.

Everything the ``run`` and ``compare`` commands write is assembled here so
the same numbers are available to library callers and to the tests. One
job is one (algorithm, epoch) pair; jobs are seeded independently, so
their outcome does not depend on how they are spread over processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .baselines import ALGORITHMS as BASELINES
from .baselines import BaselineParams
from .encoding import MoveParams
from .learner import ForestParams
from .metrics import REFERENCE
from .model import OBJECTIVE_NAMES
from .scenario import Scenario
from .search import Budget, RunResult, parse_objectives
from .shield import ShieldParams, run_shield

ALGORITHM_NAMES = ("shield", "too", "gald", "dmgc")
LEX_RTOL = 1e-3  # slack on the primary objective when picking a best solution


# ---------------------------------------------------------------------------
# Parameter overrides
# ---------------------------------------------------------------------------

def _field_types(cls) -> dict:
    return {f.name: f.type for f in fields(cls)}


def _coerce(value: str, current):
    if isinstance(current, bool):
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    if isinstance(current, int) or current is None:
        try:
            return int(value)
        except ValueError:
            if current is None:
                return float(value)
            raise
    if isinstance(current, float):
        return float(value)
    return value


@dataclass(frozen=True)
class Overrides:
    """``key=value`` overrides routed to the parameter objects that know the key.

    Keys prefixed ``forest_`` go to the random forest; move keys
    (``delta_frac``, ``delta_rho``, ``p_move_rate``) to the neighborhood.
    """

    items: tuple[tuple[str, str], ...] = ()

    @classmethod
    def parse(cls, pairs) -> "Overrides":
        out = []
        for p in pairs or ():
            if "=" not in p:
                raise ValueError(f"override {p!r} is not key=value")
            k, v = p.split("=", 1)
            out.append((k.strip(), v.strip()))
        return cls(tuple(out))

    def _apply(self, obj, prefix=""):
        changes = {}
        for k, v in self.items:
            if prefix:
                if not k.startswith(prefix):
                    continue
                k = k[len(prefix):]
            elif "_" in k and k.split("_", 1)[0] == "forest":
                continue
            if k in _field_types(type(obj)):
                changes[k] = _coerce(v, getattr(obj, k))
        return replace(obj, **changes) if changes else obj

    def shield(self) -> ShieldParams:
        p = self._apply(ShieldParams())
        return replace(p, forest=self._apply(ForestParams(), "forest_"))

    def baseline(self) -> BaselineParams:
        return self._apply(BaselineParams())

    def moves(self) -> MoveParams:
        return self._apply(MoveParams())

    def check(self, algorithms) -> None:
        """Raise ``ValueError`` for keys no selected algorithm understands."""
        known = set(_field_types(MoveParams))
        if "shield" in algorithms:
            known |= set(_field_types(ShieldParams)) - {"forest"}
            known |= {"forest_" + k for k in _field_types(ForestParams)}
        if set(algorithms) - {"shield"}:
            known |= set(_field_types(BaselineParams))
        unknown = [k for k, _ in self.items if k not in known]
        if unknown:
            raise ValueError(f"unknown parameter(s): {', '.join(unknown)}")
        self.shield(), self.baseline(), self.moves()  # type errors surface here


# ---------------------------------------------------------------------------
# Jobs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    algorithm: str
    epoch: int
    budget: Budget
    seed: int
    objectives: tuple[int, ...] = (0, 1, 2)
    overrides: Overrides = Overrides()


def run_job(scenario: Scenario, job: Job) -> RunResult:
    moves = job.overrides.moves()
    if job.algorithm == "shield":
        return run_shield(scenario, job.epoch, job.budget, job.overrides.shield(), seed=job.seed,
                          objectives=job.objectives, moves=moves)
    try:
        fn = BASELINES[job.algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {job.algorithm!r}") from None
    return fn(scenario, job.epoch, job.budget, job.overrides.baseline(), seed=job.seed,
              objectives=job.objectives, moves=moves)


def _strip(result: RunResult) -> RunResult:
    # populations and archives are not needed downstream and are costly to pickle
    result.extra = {k: v for k, v in result.extra.items() if isinstance(v, (int, float, str))}
    return result


def _worker(args):
    scenario, job = args
    return _strip(run_job(scenario, job))


def run_jobs(scenario: Scenario, jobs, workers: int = 1) -> list[RunResult]:
    """Run every job; results are in job order whatever ``workers`` is."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_strip(run_job(scenario, j)) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, [(scenario, j) for j in jobs]))


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def shared_bounds(results) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis min and max over the union of the final fronts."""
    union = np.vstack([r.front for r in results])
    return union.min(axis=0), union.max(axis=0)


def best_index(raw: np.ndarray, objective: int, rtol: float = LEX_RTOL) -> int:
    """Row of ``raw`` that is best on ``objective``, ties broken on the others.

    Rows within ``rtol`` (relative) of the minimum count as tied; among them
    the one with the smallest min-max normalized sum of the remaining
    objectives wins, then the lowest row index.
    """
    raw = np.asarray(raw, dtype=float)
    col = raw[:, objective]
    best = col.min()
    tied = np.flatnonzero(col <= best + rtol * abs(best))
    others = [c for c in range(raw.shape[1]) if c != objective]
    lo, hi = raw[:, others].min(axis=0), raw[:, others].max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    score = ((raw[tied][:, others] - lo) / span).sum(axis=1)
    return int(tied[int(np.argmin(score))])


def best_solutions(result: RunResult) -> dict:
    """Most cost-, carbon- and water-efficient front members of one run."""
    sols = result.front_solutions()
    raw = np.array([f for _, f in sols])
    out = {}
    for i, name in enumerate(OBJECTIVE_NAMES):
        k = best_index(raw, i)
        a, f = sols[k]
        out[name] = {"objectives": objective_dict(f), "rates": a.rates.tolist(),
                     "rho": a.rho.tolist()}
    return out


def objective_dict(f) -> dict:
    return {name: float(v) for name, v in zip(OBJECTIVE_NAMES, f)}


def reach(trace, target: float):
    """First sample whose PHV reaches ``target``, or ``None``."""
    for s in trace:
        if s.phv >= target * (1.0 - 1e-12):
            return s
    return None


def front_document(result: RunResult) -> dict:
    """The deterministic content of ``front.json`` for one run (no timings)."""
    points = []
    for a, f in result.front_solutions():
        points.append({"objectives": objective_dict(f), "rates": a.rates.tolist(),
                       "rho": a.rho.tolist()})
    return {
        "algorithm": result.algorithm,
        "epoch": result.epoch,
        "objectives": [OBJECTIVE_NAMES[i] for i in result.objectives],
        "evaluations": result.evaluations,
        "generations": result.generations,
        "points": points,
    }


def compare_epoch(results: dict[str, RunResult]) -> tuple[dict, dict]:
    """Summary document and normalized PHV traces for one epoch.

    The document holds the shared normalization, final PHV, time to reach
    the best baseline's final PHV and per-objective bests.
    """
    lower, upper = shared_bounds(results.values())
    traces = {name: r.trace(lower, upper) for name, r in results.items()}
    final = {name: tr[-1].phv for name, tr in traces.items()}
    baselines = [n for n in results if n != "shield"]
    doc = {
        "normalization": {"lower": lower.tolist(), "upper": upper.tolist(),
                          "reference": [REFERENCE] * len(lower)},
        "algorithms": {},
    }
    for name, r in results.items():
        doc["algorithms"][name] = {
            "final_phv": final[name],
            "evaluations": r.evaluations,
            "generations": r.generations,
            "elapsed_s": r.elapsed,
            "best": best_solutions(r),
        }
    if "shield" in results and baselines:
        best_base = max(baselines, key=lambda n: final[n])
        target = final[best_base]
        hit = reach(traces["shield"], target)
        base_hit = reach(traces[best_base], target)
        entry = {"best_baseline": best_base, "target_phv": target,
                 "shield_time_s": None, "shield_evaluations": None,
                 "baseline_time_s": base_hit.elapsed, "baseline_evaluations": base_hit.evaluations,
                 "speedup_time": None, "speedup_evaluations": None}
        if hit is not None:
            entry["shield_time_s"] = hit.elapsed
            entry["shield_evaluations"] = hit.evaluations
            entry["speedup_time"] = base_hit.elapsed / hit.elapsed if hit.elapsed > 0 else math.inf
            entry["speedup_evaluations"] = (base_hit.evaluations / hit.evaluations
                                            if hit.evaluations > 0 else math.inf)
        doc["time_to_best_baseline"] = entry
        doc["phv_ratio"] = final["shield"] / target if target > 0 else math.inf
    return doc, traces


def daily_totals(per_epoch: list[dict]) -> dict:
    """Sum each algorithm's per-epoch best selections into 24-hour totals."""
    out = {}
    for doc in per_epoch:
        for name, entry in doc["algorithms"].items():
            algo = out.setdefault(name, {o: {k: 0.0 for k in OBJECTIVE_NAMES}
                                         for o in OBJECTIVE_NAMES})
            for sel in OBJECTIVE_NAMES:
                for k, v in entry["best"][sel]["objectives"].items():
                    algo[sel][k] += v
    return out


def compare(scenario: Scenario, epochs, budget: Budget, seed: int, objectives=None,
            overrides: Overrides | None = None, workers: int = 1,
            algorithms=ALGORITHM_NAMES) -> dict:
    """Run ``algorithms`` on every epoch in ``epochs`` and reduce the results.

    Returns a dict with ``runs`` (RunResult per (algorithm, epoch)),
    ``epochs`` (one :func:`compare_epoch` document each), ``traces`` and,
    for more than one epoch, ``daily`` totals.
    """
    overrides = overrides or Overrides()
    obj = parse_objectives(objectives)
    epochs = list(epochs)
    jobs = [Job(a, e, budget, seed, obj, overrides) for e in epochs for a in algorithms]
    results = run_jobs(scenario, jobs, workers)
    runs = {(j.algorithm, j.epoch): r for j, r in zip(jobs, results)}
    per_epoch, traces = [], {}
    for e in epochs:
        doc, tr = compare_epoch({a: runs[(a, e)] for a in algorithms})
        doc["epoch"] = e
        per_epoch.append(doc)
        for a in algorithms:
            traces[(a, e)] = tr[a]
    out = {"runs": runs, "epochs": per_epoch, "traces": traces}
    if len(epochs) > 1:
        out["daily"] = daily_totals(per_epoch)
    return out
