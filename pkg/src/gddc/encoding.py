"""Decision encoding and the variation operators shared by all optimizers.

A candidate is an :class:`Assignment`: a sites-by-workloads matrix of
arrival rates whose columns sum to the global arrival rate of each
workload, plus a clean-premium fraction per site. Every operator returns a
repaired, feasible assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InfeasibleAssignment, InfeasibleScenario, ParseError
from .scenario import Scenario, epoch_demand

SUM_RTOL = 1e-9        # feasibility tolerance on column sums
_RESCALE_RTOL = 1e-12  # columns closer than this are left untouched
_REDRAWS = 10


@dataclass(frozen=True)
class MoveParams:
    delta_frac: float = 0.1
    delta_rho: float = 0.1
    p_move_rate: float = 0.8


class Assignment:
    """Arrival-rate split ``rates`` (D x T, jobs/h) and premium fractions ``rho`` (D)."""

    __slots__ = ("rates", "rho")

    def __init__(self, rates, rho):
        self.rates = np.array(rates, dtype=float)
        self.rho = np.array(rho, dtype=float)
        if self.rates.ndim != 2 or self.rho.shape != (self.rates.shape[0],):
            raise ValueError("rates must be (D, T) and rho must be (D,)")

    def copy(self) -> "Assignment":
        return Assignment(self.rates, self.rho)

    def same_as(self, other: "Assignment") -> bool:
        return np.array_equal(self.rates, other.rates) and np.array_equal(self.rho, other.rho)

    def features(self, gar) -> np.ndarray:
        """Rates normalized by each workload's global rate, then rho."""
        gar = np.asarray(gar, dtype=float)
        safe = np.where(gar > 0, gar, 1.0)
        return np.concatenate([(self.rates / safe).ravel(), self.rho])

    def __repr__(self):
        return f"Assignment(rates={self.rates.tolist()}, rho={self.rho.tolist()})"


class DesignSpace:
    """Operators bound to one scenario and epoch."""

    def __init__(self, scenario: Scenario, epoch: int, moves: MoveParams | None = None):
        self.scenario = scenario
        self.epoch = epoch
        self.gar = epoch_demand(scenario, epoch)
        self.fleet = scenario.fleet
        self.premium = scenario.premium_mask()
        self.premium_sites = np.flatnonzero(self.premium)
        self.moves = moves or MoveParams()
        self.shape = (scenario.size, scenario.workload_count)

    # -- repair ---------------------------------------------------------

    def repair(self, a: Assignment) -> Assignment:
        D, T = self.shape
        rates = np.where(a.rates > 0.0, a.rates, 0.0)  # also zeroes NaN
        if not np.isfinite(rates).all():
            rates[~np.isfinite(rates)] = 0.0
        sums = rates.sum(axis=0)
        g = self.gar
        off = np.abs(sums - g) > _RESCALE_RTOL * g
        if off.any():
            for j in np.flatnonzero(off):
                if g[j] <= 0.0:
                    rates[:, j] = 0.0
                elif sums[j] <= 0.0:
                    rates[:, j] = g[j] / D
                else:
                    rates[:, j] *= g[j] / sums[j]
        rho = np.where(self.premium & (a.rho > 0.0), a.rho, 0.0)
        np.minimum(rho, 1.0, out=rho)
        rates = self._shift_overflow(rates)
        return Assignment(rates, rho)

    def _shift_overflow(self, rates: np.ndarray) -> np.ndarray:
        D, T = self.shape
        if not self.fleet.overflows(rates):
            return rates
        left, util = self.fleet.load_state(rates)
        rates = rates.copy()
        for _ in range(4 * D * T):
            site = int(np.argmax(left.sum(axis=1)))
            for j in np.flatnonzero(left[site] > 0):
                order = np.argsort(util, kind="stable")
                dst = next((int(d) for d in order if d != site), None)
                if dst is None:
                    break
                amount = min(left[site, j], rates[site, j])
                rates[site, j] -= amount
                rates[dst, j] += amount
                util[dst] += 1.0 / D  # steer the next workload elsewhere
            left, util = self.fleet.load_state(rates)
            if not left.any():
                return np.maximum(rates, 0.0)
        # fall back to a capacity-proportional split
        share = self.fleet.total_nodes / self.fleet.total_nodes.sum()
        rates = np.outer(share, self.gar)
        left, _ = self.fleet.load_state(rates)
        if left.any():
            raise InfeasibleScenario(
                f"epoch {self.epoch}: demand cannot be placed within fleet capacity")
        return rates

    # -- generators and moves -------------------------------------------

    def random(self, rng: np.random.Generator) -> Assignment:
        D, T = self.shape
        rho = np.zeros(D)
        for _ in range(_REDRAWS):
            rates = rng.dirichlet(np.ones(D), size=T).T * self.gar[None, :]
            rho = np.where(self.premium, rng.random(D), 0.0)
            if not self.fleet.overflows(rates):
                return self.repair(Assignment(rates, rho))
        return self.repair(Assignment(rates, rho))

    def transfer(self, a: Assignment, workload: int, src: int, dst: int,
                 amount: float | None = None) -> Assignment:
        """Move up to ``amount`` (default ``delta_frac * GAR``) of one workload between sites."""
        if amount is None:
            amount = self.moves.delta_frac * self.gar[workload]
        rates = a.rates.copy()
        m = min(rates[src, workload], amount)
        if m <= 0.0 or src == dst:
            return a.copy()
        rates[src, workload] -= m
        rates[dst, workload] += m
        return self.repair(Assignment(rates, a.rho))

    def nudge_premium(self, a: Assignment, site: int, delta: float) -> Assignment:
        rho = a.rho.copy()
        rho[site] += delta
        return self.repair(Assignment(a.rates, rho))

    def neighbor(self, a: Assignment, rng: np.random.Generator) -> Assignment:
        D, T = self.shape
        if rng.random() < self.moves.p_move_rate or self.premium_sites.size == 0:
            j = int(rng.integers(T))
            loaded = np.flatnonzero(a.rates[:, j] > 0)
            if D < 2 or loaded.size == 0:
                return a.copy()
            src = int(loaded[rng.integers(loaded.size)])
            dst = int(rng.integers(D - 1))
            dst += dst >= src
            return self.transfer(a, j, src, dst)
        site = int(self.premium_sites[rng.integers(self.premium_sites.size)])
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return self.nudge_premium(a, site, sign * self.moves.delta_rho)

    def crossover(self, a: Assignment, b: Assignment, rng: np.random.Generator,
                  lam=None) -> Assignment:
        T = self.shape[1]
        if lam is None:
            lam = rng.random(T)
            lam_rho = rng.random()
        else:
            lam = np.broadcast_to(np.asarray(lam, dtype=float), (T,))
            lam_rho = float(lam[0])
        rates = lam[None, :] * a.rates + (1.0 - lam[None, :]) * b.rates
        rho = lam_rho * a.rho + (1.0 - lam_rho) * b.rho
        return self.repair(Assignment(rates, rho))

    def mutate(self, a: Assignment, strength: float, rng: np.random.Generator) -> Assignment:
        D, T = self.shape
        rates = a.rates + rng.standard_normal((D, T)) * (strength * self.gar[None, :])
        rho = a.rho + np.where(self.premium, rng.standard_normal(D) * strength, 0.0)
        return self.repair(Assignment(rates, rho))

    # -- checks ---------------------------------------------------------

    def check(self, a: Assignment) -> None:
        """Raise :class:`InfeasibleAssignment` naming the first violated constraint."""
        if a.rates.shape != self.shape:
            raise InfeasibleAssignment(f"rates shape {a.rates.shape} != {self.shape}")
        if np.any(~np.isfinite(a.rates)) or np.any(a.rates < 0):
            raise InfeasibleAssignment("rates must be finite and non-negative")
        sums = a.rates.sum(axis=0)
        for j, w in enumerate(self.scenario.workloads):
            if abs(sums[j] - self.gar[j]) > SUM_RTOL * max(self.gar[j], 1.0):
                raise InfeasibleAssignment(
                    f"workload {w.id!r}: local rates sum to {sums[j]:.6g}, "
                    f"global arrival rate is {self.gar[j]:.6g}")
        if np.any(a.rho < 0) or np.any(a.rho > 1):
            raise InfeasibleAssignment("rho must lie in [0, 1]")
        for i, dc in enumerate(self.scenario.datacenters):
            if a.rho[i] > 0 and not self.premium[i]:
                raise InfeasibleAssignment(f"site {dc.id!r} offers no clean premium")
        left, _ = self.fleet.load_state(a.rates)
        if left.any():
            d, j = np.unravel_index(int(np.argmax(left)), left.shape)
            raise InfeasibleAssignment(
                f"site {self.scenario.datacenters[d].id!r} cannot absorb workload "
                f"{self.scenario.workloads[j].id!r}")

    def is_feasible(self, a: Assignment) -> bool:
        try:
            self.check(a)
        except InfeasibleAssignment:
            return False
        return True


# Module-level forms of the operators

def random_assignment(scenario: Scenario, epoch: int, rng) -> Assignment:
    return DesignSpace(scenario, epoch).random(rng)


def repair(assignment: Assignment, scenario: Scenario, epoch: int) -> Assignment:
    return DesignSpace(scenario, epoch).repair(assignment)


def neighbor(assignment: Assignment, scenario: Scenario, epoch: int, rng,
             moves: MoveParams | None = None) -> Assignment:
    return DesignSpace(scenario, epoch, moves).neighbor(assignment, rng)


def crossover(a: Assignment, b: Assignment, scenario: Scenario, epoch: int, rng) -> Assignment:
    return DesignSpace(scenario, epoch).crossover(a, b, rng)


def mutate(a: Assignment, strength: float, scenario: Scenario, epoch: int, rng) -> Assignment:
    return DesignSpace(scenario, epoch).mutate(a, strength, rng)


# Assignment files

def assignment_to_dict(a: Assignment, scenario: Scenario, epoch: int) -> dict:
    return {
        "schema_version": 1,
        "epoch": epoch,
        "sites": [dc.id for dc in scenario.datacenters],
        "workloads": [w.id for w in scenario.workloads],
        "rates": a.rates.tolist(),
        "rho": a.rho.tolist(),
    }


def save_assignment(a: Assignment, scenario: Scenario, epoch: int, path) -> None:
    Path(path).write_text(json.dumps(assignment_to_dict(a, scenario, epoch), indent=1) + "\n",
                          encoding="utf-8")


def load_assignment(path) -> tuple[Assignment, int | None]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {"schema_version", "epoch", "sites", "workloads", "rates", "rho"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"{path}: unknown fields {sorted(unknown)}")
        return Assignment(data["rates"], data["rho"]), data.get("epoch")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None
