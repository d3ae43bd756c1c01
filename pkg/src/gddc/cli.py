"""Command-line harness: ``run``, ``compare``, ``eval`` and ``gen-scenario``.

Exit codes: 0 ok, 2 usage or configuration error, 3 infeasible scenario or
assignment, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .encoding import DesignSpace, load_assignment
from .errors import (CapacityExceeded, InfeasibleAssignment, InfeasibleScenario, InvalidPremium,
                     ParseError, ValidationError)
from .experiment import (ALGORITHM_NAMES, Job, Overrides, best_solutions, compare,
                         front_document, run_jobs)
from .model import EPOCHS, OBJECTIVE_NAMES, evaluate
from .scenario import bundled_scenario_path, default_scenario, load_scenario, save_scenario
from .search import Budget, parse_objectives

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4
DEFAULT_GENERATIONS = 50


class UsageError(Exception):
    pass


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _finite(x):
    return None if x is None or x != x or x in (float("inf"), float("-inf")) else x


def _clean(doc):
    """Replace non-finite floats so the output stays strict JSON."""
    if isinstance(doc, dict):
        return {k: _clean(v) for k, v in doc.items()}
    if isinstance(doc, list):
        return [_clean(v) for v in doc]
    if isinstance(doc, float):
        return _finite(doc)
    return doc


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=Path, default=None,
                   help="scenario file (default: the bundled 16-site fleet)")
    p.add_argument("--epoch", default="12", help="epoch 0..23 or 'all' (default 12)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--generations", type=int, help=f"generation budget (default {DEFAULT_GENERATIONS})")
    g.add_argument("--seconds", type=float, help="wall-clock budget per run; not reproducible")
    g.add_argument("--evaluations", type=int, help="objective-evaluation budget per run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="parallel processes over runs")
    p.add_argument("--objectives", default="cost,carbon,water",
                   help="cost | cost,carbon | cost,carbon,water")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="parameter override, repeatable")


def _scenario(args):
    path = args.scenario or bundled_scenario_path()
    return load_scenario(path)


def _epochs(spec: str) -> list[int]:
    if spec == "all":
        return list(range(EPOCHS))
    try:
        e = int(spec)
    except ValueError:
        raise UsageError(f"--epoch must be an integer or 'all', got {spec!r}") from None
    if not 0 <= e < EPOCHS:
        raise UsageError(f"--epoch must lie in 0..{EPOCHS - 1}")
    return [e]


def _budget(args) -> Budget:
    try:
        if args.seconds is not None:
            return Budget(seconds=args.seconds)
        if args.evaluations is not None:
            return Budget(evaluations=args.evaluations)
        gens = DEFAULT_GENERATIONS if args.generations is None else args.generations
        return Budget(generations=gens)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, algorithms):
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    try:
        objectives = parse_objectives(args.objectives)
        overrides = Overrides.parse(args.overrides)
        overrides.check(algorithms)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _epochs(args.epoch), _budget(args), objectives, overrides


def _budget_doc(budget: Budget) -> dict:
    return {budget.kind: getattr(budget, budget.kind)}


def _write_trace(path: Path, rows, with_epoch: bool, with_algorithm: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = (["algorithm"] if with_algorithm else []) + (["epoch"] if with_epoch else [])
        w.writerow(head + ["elapsed_s", "evaluations", "phv"])
        for key, s in rows:
            w.writerow(list(key) + [f"{s.elapsed:.6f}", s.evaluations, repr(float(s.phv))])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    if args.algorithm not in ALGORITHM_NAMES:
        raise UsageError(f"unknown algorithm {args.algorithm!r}; choose from {', '.join(ALGORITHM_NAMES)}")
    epochs, budget, objectives, overrides = _config(args, [args.algorithm])
    scenario = _scenario(args)
    jobs = [Job(args.algorithm, e, budget, args.seed, objectives, overrides) for e in epochs]
    results = run_jobs(scenario, jobs, args.workers)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    header = {"scenario": scenario.label, "algorithm": args.algorithm, "seed": args.seed,
              "budget": _budget_doc(budget), "objectives": [OBJECTIVE_NAMES[i] for i in objectives]}
    fronts = [front_document(r) for r in results]
    if len(epochs) == 1:
        _write_json(out / "front.json", {**header, **fronts[0]})
    else:
        _write_json(out / "front.json", {**header, "epochs": fronts})

    rows = [((r.epoch,) if len(epochs) > 1 else (), s) for r in results for s in r.trace()]
    _write_trace(out / "trace.csv", rows, with_epoch=len(epochs) > 1)

    summary = {**header, "epochs": []}
    daily = {sel: {k: 0.0 for k in OBJECTIVE_NAMES} for sel in OBJECTIVE_NAMES}
    for r in results:
        best = best_solutions(r)
        summary["epochs"].append({"epoch": r.epoch, "evaluations": r.evaluations,
                                  "generations": r.generations, "elapsed_s": r.elapsed,
                                  "front_size": len(r.front), "best": best})
        for sel in OBJECTIVE_NAMES:
            for k, v in best[sel]["objectives"].items():
                daily[sel][k] += v
    if len(epochs) > 1:
        summary["daily"] = daily
    _write_json(out / "summary.json", _clean(summary))
    print(f"{args.algorithm}: {len(results)} epoch(s), "
          f"{sum(len(r.front) for r in results)} front points -> {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    epochs, budget, objectives, overrides = _config(args, ALGORITHM_NAMES)
    scenario = _scenario(args)
    res = compare(scenario, epochs, budget, args.seed, objectives, overrides, args.workers)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    multi = len(epochs) > 1
    header = {"scenario": scenario.label, "seed": args.seed, "budget": _budget_doc(budget),
              "objectives": [OBJECTIVE_NAMES[i] for i in objectives]}

    for a in ALGORITHM_NAMES:
        rows = [((e,) if multi else (), s) for e in epochs for s in res["traces"][(a, e)]]
        _write_trace(out / f"trace_{a}.csv", rows, with_epoch=multi)
        fronts = [front_document(res["runs"][(a, e)]) for e in epochs]
        doc = {**header, **fronts[0]} if not multi else {**header, "algorithm": a, "epochs": fronts}
        _write_json(out / f"front_{a}.json", doc)

    rows = [((a, e) if multi else (a,), s)
            for e in epochs for a in ALGORITHM_NAMES for s in res["traces"][(a, e)]]
    _write_trace(out / "comparison.csv", rows, with_epoch=multi, with_algorithm=True)

    comparison = {**header, "epochs": res["epochs"]}
    if multi:
        comparison["daily"] = res["daily"]
    _write_json(out / "comparison.json", _clean(comparison))

    summary = {**header, "algorithms": {}}
    for a in ALGORITHM_NAMES:
        summary["algorithms"][a] = {
            "epochs": [{"epoch": doc["epoch"], "best": doc["algorithms"][a]["best"]}
                       for doc in res["epochs"]],
        }
        if multi:
            summary["algorithms"][a]["daily"] = res["daily"][a]
    _write_json(out / "summary.json", _clean(summary))

    for doc in res["epochs"]:
        phv = "  ".join(f"{a}={d['final_phv']:.4f}" for a, d in doc["algorithms"].items())
        print(f"epoch {doc['epoch']:2d}: {phv}")
    return EXIT_OK


def cmd_eval(args) -> int:
    scenario = _scenario(args)
    assignment, file_epoch = load_assignment(args.assignment)
    epoch = args.epoch if args.epoch is not None else file_epoch
    if epoch is None:
        raise UsageError("no --epoch given and the assignment file names none")
    if not 0 <= epoch < EPOCHS:
        raise UsageError(f"--epoch must lie in 0..{EPOCHS - 1}")
    DesignSpace(scenario, epoch).check(assignment)
    total, sites = evaluate(assignment, scenario, epoch)
    doc = {
        "schema_version": 1,
        "epoch": epoch,
        "objectives": {k: float(v) for k, v in total._asdict().items()},
        "sites": [{"id": dc.id, **dataclasses.asdict(s), "carbon": s.carbon, "water": s.water}
                  for dc, s in zip(scenario.datacenters, sites)],
    }
    if args.json:
        print(json.dumps(doc, indent=1))
        return EXIT_OK
    print(f"epoch {epoch}: cost ${total.cost:.6g}  carbon {total.carbon:.6g} kg  "
          f"water {total.water:.6g} L")
    cols = ("p_it", "p_cooling", "p_ipcs", "energy_total", "energy_brown", "cost", "carbon", "water")
    print("site".ljust(12) + "".join(c.rjust(14) for c in cols) + "  free")
    for row in doc["sites"]:
        print(str(row["id"])[:12].ljust(12) + "".join(f"{row[c]:14.6g}" for c in cols)
              + ("  yes" if row["free_cooling_active"] else "  no"))
    return EXIT_OK


def cmd_gen_scenario(args) -> int:
    if args.d < 1 or args.t < 1:
        raise UsageError("--d and --t must be at least 1")
    scenario = default_scenario(args.d, args.t, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, args.out)
    load_scenario(args.out)
    print(f"wrote {args.out} ({args.d} sites, {args.t} workload types)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gddc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gddc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one algorithm")
    p.add_argument("--algorithm", default="shield", help="shield | too | gald | dmgc")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all four algorithms under one budget")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval", help="evaluate a saved assignment")
    p.add_argument("--scenario", type=Path, default=None)
    p.add_argument("--assignment", type=Path, required=True)
    p.add_argument("--epoch", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-scenario", help="write a synthetic scenario file")
    p.add_argument("--d", type=int, default=16, help="number of sites")
    p.add_argument("--t", type=int, default=5, help="number of workload types")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", type=Path, default=Path("scenario.json"))
    p.set_defaults(func=cmd_gen_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gddc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError) as exc:
        print(f"gddc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleScenario, InfeasibleAssignment, CapacityExceeded, InvalidPremium) as exc:
        print(f"gddc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001
        print(f"gddc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
