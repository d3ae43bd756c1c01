"""Cost, carbon and water co-optimization for geo-distributed data centers."""

__version__ = "0.1.0"

from .encoding import Assignment, DesignSpace, MoveParams  # noqa: E402
from .model import Fleet, ObjectiveVector, evaluate  # noqa: E402
from .scenario import Scenario, bundled_scenario, default_scenario, load_scenario  # noqa: E402
from .search import Budget, RunResult  # noqa: E402
from .shield import ShieldParams, run_shield  # noqa: E402
from .baselines import BaselineParams, run_dmgc, run_gald, run_too  # noqa: E402

__all__ = [
    "Assignment", "BaselineParams", "Budget", "DesignSpace", "Fleet", "MoveParams",
    "ObjectiveVector", "RunResult", "Scenario", "ShieldParams", "bundled_scenario",
    "default_scenario", "evaluate", "load_scenario", "run_dmgc", "run_gald", "run_shield",
    "run_too",
]
