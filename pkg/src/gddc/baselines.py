"""Comparison optimizers: simulated annealing (TOO), a nondominated-sorting GA
(GALD) and a Tchebycheff decomposition EA with Gaussian mutation and a
crowding-truncated archive (DMGC).

They share the encoding operators, evaluation and PHV bookkeeping with
SHIELD; only the search logic differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .search import Budget, BudgetExhausted, RunResult, SearchContext
from .shield import _scale, make_weights, scalarize


@dataclass(frozen=True)
class BaselineParams:
    population: int = 30
    # simulated annealing
    initial_acceptance: float = 0.8
    alpha: float = 0.95
    steps_per_temperature: int = 20
    # genetic algorithm
    crossover_prob: float = 0.9
    mutation_prob: float = 1.0
    mutation_strength: float = 0.05
    tournament_size: int = 2
    # decomposition EA
    neighborhood: int = 5
    sigma: float = 0.05
    archive_capacity: int | None = None  # default population

    def __post_init__(self):
        for name in ("initial_acceptance", "crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        for name in ("population", "steps_per_temperature", "tournament_size", "neighborhood"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


def tchebycheff(objectives, weight, ideal, nadir) -> float:
    f = np.asarray(objectives, dtype=float)
    z = np.asarray(ideal, dtype=float)
    return float(np.max(np.asarray(weight) * np.abs(f - z) / _scale(z, nadir)))


def crowding_distance(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, m = pts.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for c in range(m):
        order = np.argsort(pts[:, c], kind="stable")
        col = pts[order, c]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def nondominated_ranks(points) -> np.ndarray:
    """Front index (0 = nondominated) of every point."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    ranks = np.full(n, -1)
    r = 0
    current = np.flatnonzero(count == 0)
    while current.size:
        ranks[current] = r
        count = count - dom[current].sum(axis=0)
        count[ranks >= 0] = -1
        current = np.flatnonzero(count == 0)
        r += 1
    return ranks


def metropolis_accept(delta: float, temperature: float, rng) -> bool:
    if delta < 0:
        return True
    if temperature <= 0:
        return False
    return rng.random() < math.exp(-delta / temperature)


# ---------------------------------------------------------------------------
# TOO: one annealing chain per weight vector
# ---------------------------------------------------------------------------

def run_too(scenario, epoch: int, budget: Budget, params: BaselineParams | None = None,
            seed: int = 0, objectives=None, moves=None, ctx: SearchContext | None = None) -> RunResult:
    params = params or BaselineParams()
    ctx = ctx or SearchContext(scenario, epoch, budget, objectives, moves)
    space = ctx.space
    rng = np.random.default_rng(seed)
    W = make_weights(params.population, ctx.m)
    temperature = None
    try:
        X = [space.random(rng) for _ in range(params.population)]
        F = np.array([ctx.evaluate(a) for a in X])
        ideal, nadir = F.min(axis=0), F.max(axis=0)
        # calibrate T0 from one uphill sample per chain
        uphill = []
        for c in range(params.population):
            cand = space.neighbor(X[c], rng)
            f = ctx.evaluate(cand)
            ideal = np.minimum(ideal, f)
            d = scalarize(f, W[c], ideal, nadir) - scalarize(F[c], W[c], ideal, nadir)
            if d > 0:
                uphill.append(d)
        mean_up = float(np.mean(uphill)) if uphill else 1e-3
        temperature = -mean_up / math.log(params.initial_acceptance)
        while ctx.running():
            for c in range(params.population):
                for _ in range(params.steps_per_temperature):
                    cand = space.neighbor(X[c], rng)
                    if cand.same_as(X[c]):
                        continue
                    f = ctx.evaluate(cand)
                    ideal = np.minimum(ideal, f)
                    d = scalarize(f, W[c], ideal, nadir) - scalarize(F[c], W[c], ideal, nadir)
                    if metropolis_accept(d, temperature, rng):
                        X[c], F[c] = cand, f
            temperature *= params.alpha
            nadir = F.max(axis=0)
            ctx.end_generation(ideal)
    except BudgetExhausted:
        pass
    return ctx.finish("too", temperature=temperature)


# ---------------------------------------------------------------------------
# GALD: generational GA with nondominated-sorting survival
# ---------------------------------------------------------------------------

def _rank_and_crowd(F):
    ranks = nondominated_ranks(F)
    crowd = np.zeros(len(F))
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        crowd[members] = crowding_distance(F[members])
    return ranks, crowd


def _environmental_selection(F, n):
    ranks, crowd = _rank_and_crowd(F)
    # lexsort: last key primary
    order = np.lexsort((np.arange(len(F)), -crowd, ranks))
    return order[:n]


def run_gald(scenario, epoch: int, budget: Budget, params: BaselineParams | None = None,
             seed: int = 0, objectives=None, moves=None, ctx: SearchContext | None = None) -> RunResult:
    params = params or BaselineParams()
    ctx = ctx or SearchContext(scenario, epoch, budget, objectives, moves)
    space = ctx.space
    rng = np.random.default_rng(seed)
    n = params.population
    sizes = []
    try:
        X = [space.random(rng) for _ in range(n)]
        F = np.array([ctx.evaluate(a) for a in X])
        while ctx.running():
            ranks, crowd = _rank_and_crowd(F)

            def tournament():
                pick = rng.choice(n, size=min(params.tournament_size, n), replace=False)
                best = pick[0]
                for p in pick[1:]:
                    if (ranks[p], -crowd[p]) < (ranks[best], -crowd[best]):
                        best = p
                return X[int(best)]

            children, child_f = [], []
            try:
                for _ in range(n):
                    a, b = tournament(), tournament()
                    child = space.crossover(a, b, rng) if rng.random() < params.crossover_prob else a
                    if rng.random() < params.mutation_prob:
                        child = space.mutate(child, params.mutation_strength, rng)
                    child_f.append(ctx.evaluate(child))
                    children.append(child)
            finally:
                if children:
                    allX = X + children
                    allF = np.vstack([F, np.array(child_f)])
                    keep = _environmental_selection(allF, n)
                    X = [allX[int(i)] for i in keep]
                    F = allF[keep]
            sizes.append(len(X))
            ctx.end_generation(F.min(axis=0))
    except BudgetExhausted:
        pass
    return ctx.finish("gald", population_sizes=sizes)


# ---------------------------------------------------------------------------
# DMGC: Tchebycheff decomposition with a crowding-truncated archive
# ---------------------------------------------------------------------------

def truncate_by_crowding(F, capacity: int) -> np.ndarray:
    """Indices kept after repeatedly dropping the most crowded point."""
    keep = np.arange(len(F))
    while len(keep) > capacity:
        d = crowding_distance(F[keep])
        keep = np.delete(keep, int(np.argmin(d)))
    return keep


class CrowdingArchive:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.F = np.zeros((0, 0))
        self.X: list = []

    def add(self, a, f) -> None:
        f = np.asarray(f, dtype=float)
        if self.F.size == 0:
            self.F, self.X = f[None, :].copy(), [a]
            return
        if np.any(np.all(self.F <= f, axis=1)):
            return  # dominated by or equal to a member
        survivors = ~np.all(f <= self.F, axis=1)
        idx = np.flatnonzero(survivors)
        F = np.vstack([self.F[idx], f[None, :]])
        X = [self.X[int(i)] for i in idx] + [a]
        if len(F) > self.capacity:
            keep = truncate_by_crowding(F, self.capacity)
            F, X = F[keep], [X[int(i)] for i in keep]
        self.F, self.X = F, X

    def __len__(self):
        return len(self.X)


def run_dmgc(scenario, epoch: int, budget: Budget, params: BaselineParams | None = None,
             seed: int = 0, objectives=None, moves=None, ctx: SearchContext | None = None) -> RunResult:
    params = params or BaselineParams()
    ctx = ctx or SearchContext(scenario, epoch, budget, objectives, moves)
    space = ctx.space
    rng = np.random.default_rng(seed)
    n = params.population
    W = make_weights(n, ctx.m)
    k = min(params.neighborhood, n)
    dists = np.linalg.norm(W[:, None, :] - W[None, :, :], axis=2)
    B = np.argsort(dists, axis=1, kind="stable")[:, :k]
    archive = CrowdingArchive(params.archive_capacity or n)
    archive_sizes = []
    try:
        X = [space.random(rng) for _ in range(n)]
        F = np.array([ctx.evaluate(a) for a in X])
        for a, f in zip(X, F):
            archive.add(a, f)
        ideal, nadir = F.min(axis=0), F.max(axis=0)
        while ctx.running():
            for i in range(n):
                p, q = rng.choice(B[i], size=2, replace=k < 2)
                child = space.mutate(space.crossover(X[int(p)], X[int(q)], rng), params.sigma, rng)
                f = ctx.evaluate(child)
                ideal = np.minimum(ideal, f)
                scale = _scale(ideal, nadir)
                nb = B[i]
                g_child = np.max(W[nb] * np.abs(f - ideal) / scale, axis=1)
                g_old = np.max(W[nb] * np.abs(F[nb] - ideal) / scale, axis=1)
                for j in nb[g_child < g_old]:
                    X[int(j)], F[int(j)] = child, f
                archive.add(child, f)
                archive_sizes.append(len(archive))
            nadir = F.max(axis=0)
            ctx.end_generation(ideal)
    except BudgetExhausted:
        pass
    return ctx.finish("dmgc", archive=archive, archive_sizes=archive_sizes)


ALGORITHMS = {
    "too": run_too,
    "gald": run_gald,
    "dmgc": run_dmgc,
}
