"""SHIELD: learned-start local search combined with a decomposition EA.

Each generation:

1. pick local-search starts (random early on, then the slots a random
   forest expects to improve most, plus the single-objective slots);
2. run first-improvement descent from each start on its slot's weighted
   sum and put the endpoints back into their slots;
3. cross searched endpoints with unsearched members, mutate the children
   and let each child challenge a few random slots.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import learner
from .encoding import Assignment, DesignSpace
from .errors import InsufficientData
from .learner import ForestModel, ForestParams, TrainRow
from .search import Budget, BudgetExhausted, RunResult, SearchContext


@dataclass(frozen=True)
class ShieldParams:
    population: int = 30
    n_local: int | None = None      # default population // 5
    iter_early: int = 500
    f_update: int = 50
    max_steps: int = 100
    patience: int = 20
    n_offspring: int | None = None  # default population
    mut_sigma: float = 0.05
    n_compare: int = 2
    forest: ForestParams = field(default_factory=ForestParams)

    @property
    def local_count(self) -> int:
        return self.n_local if self.n_local is not None else max(1, self.population // 5)

    @property
    def offspring_count(self) -> int:
        return self.n_offspring if self.n_offspring is not None else self.population


# ---------------------------------------------------------------------------
# Weight vectors and scalarization
# ---------------------------------------------------------------------------

def _lattice(m: int, h: int) -> np.ndarray:
    pts = []
    for bars in itertools.combinations(range(h + m - 1), m - 1):
        parts, prev = [], -1
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(h + m - 2 - prev)
        pts.append(parts)
    return np.array(pts[::-1], dtype=float) / h


def make_weights(n: int, m: int) -> np.ndarray:
    """``n`` weight vectors on the unit simplex, always including the ``m`` corners.

    Uses the smallest simplex lattice holding at least ``n`` points and, if it
    holds more, keeps the corners and greedily adds the lattice point farthest
    from those already chosen.
    """
    if not n >= m >= 1:
        raise ValueError("need n >= m >= 1")
    if m == 1:
        return np.ones((n, 1))
    h = 1
    while math.comb(h + m - 1, m - 1) < n:
        h += 1
    lattice = _lattice(m, h)
    if len(lattice) == n:
        return lattice
    corners = [int(np.flatnonzero(np.all(lattice == np.eye(m)[i], axis=1))[0]) for i in range(m)]
    chosen = list(corners)
    dist = np.min(np.linalg.norm(lattice[:, None, :] - lattice[None, chosen, :], axis=2), axis=1)
    while len(chosen) < n:
        k = int(np.argmax(dist))
        chosen.append(k)
        dist = np.minimum(dist, np.linalg.norm(lattice - lattice[k], axis=1))
    return lattice[sorted(chosen)]


def _scale(ideal, nadir):
    span = np.asarray(nadir, dtype=float) - np.asarray(ideal, dtype=float)
    return np.where(span > 0, span, 1.0)


def scalarize(objectives, weight, ideal, nadir) -> float:
    """Normalized weighted distance to the ideal point."""
    f = np.asarray(objectives, dtype=float)
    z = np.asarray(ideal, dtype=float)
    return float(np.sum(np.asarray(weight) * np.abs(f - z) / _scale(z, nadir)))


# ---------------------------------------------------------------------------
# Population
# ---------------------------------------------------------------------------

class SearchPopulation:
    """N slots, each permanently owning one weight vector."""

    def __init__(self, assignments, objectives, weights):
        self.X: list[Assignment] = list(assignments)
        self.F = np.array(objectives, dtype=float)
        self.W = np.asarray(weights, dtype=float)
        self.ideal = self.F.min(axis=0)
        self.train_buffer: list[TrainRow] = []
        self.model: ForestModel | None = None
        self.generation = 0
        self.refresh()

    def __len__(self):
        return len(self.X)

    def refresh(self) -> None:
        """Recompute the nadir estimate and every slot's scalarized value."""
        self.nadir = self.F.max(axis=0)
        self.g = np.sum(self.W * np.abs(self.F - self.ideal) / _scale(self.ideal, self.nadir), axis=1)

    def g_of(self, f, slot: int) -> float:
        return scalarize(f, self.W[slot], self.ideal, self.nadir)

    def lower_ideal(self, f) -> None:
        self.ideal = np.minimum(self.ideal, f)

    def replace(self, slot: int, a: Assignment, f) -> None:
        self.X[slot] = a
        self.F[slot] = f

    def unit_slots(self) -> list[int]:
        m = self.W.shape[1]
        slots = []
        for i in range(m):
            hits = np.flatnonzero(np.all(self.W == np.eye(m)[i], axis=1))
            if hits.size:
                slots.append(int(hits[0]))
        return slots


def slot_features(a: Assignment, weight, gar) -> np.ndarray:
    return np.concatenate([a.features(gar), np.asarray(weight, dtype=float)])


# ---------------------------------------------------------------------------
# Local search
# ---------------------------------------------------------------------------

@dataclass
class LocalSearchResult:
    endpoint: Assignment
    objectives: np.ndarray
    g: float
    start_g: float
    accepted_g: list[float]
    trajectory: list[TrainRow]
    visited_min: np.ndarray
    proposals: int


def local_search(ctx: SearchContext, start: Assignment, start_f, weight, ideal, nadir,
                 params: ShieldParams, rng) -> LocalSearchResult:
    """First-improvement descent on the weighted sum, normalization frozen at entry."""
    space = ctx.space
    z = np.asarray(ideal, dtype=float)
    scale = _scale(z, nadir)
    w = np.asarray(weight, dtype=float)

    def g_of(f):
        return float(np.sum(w * np.abs(f - z) / scale))

    cur, cur_f = start, np.asarray(start_f, dtype=float)
    g_cur = g_of(cur_f)
    start_g = g_cur
    accepted = [cur]
    accepted_g = [g_cur]
    visited_min = cur_f.copy()
    fails = 0
    proposals = 0
    while proposals < params.max_steps and fails < params.patience:
        proposals += 1
        cand = space.neighbor(cur, rng)
        if cand.same_as(cur):
            fails += 1
            continue
        f = ctx.evaluate(cand)
        np.minimum(visited_min, f, out=visited_min)
        g = g_of(f)
        if g < g_cur:
            cur, cur_f, g_cur = cand, f, g
            accepted.append(cur)
            accepted_g.append(g)
            fails = 0
        else:
            fails += 1
    rows = [TrainRow(slot_features(a, w, space.gar), g_cur) for a in accepted]
    return LocalSearchResult(cur, cur_f, g_cur, start_g, accepted_g, rows, visited_min, proposals)


# ---------------------------------------------------------------------------
# Start selection, propagation, update
# ---------------------------------------------------------------------------

def select_starts(pop: SearchPopulation, params: ShieldParams, rng, gar) -> list[int]:
    n = len(pop)
    k = min(params.local_count, n)
    if pop.generation < params.iter_early:
        return [int(i) for i in rng.choice(n, size=k, replace=False)]
    if pop.model is None:
        starts = [int(i) for i in rng.choice(n, size=k, replace=False)]
    else:
        feats = np.array([slot_features(pop.X[i], pop.W[i], gar) for i in range(n)])
        improvement = pop.g - pop.model.predict(feats)
        order = np.argsort(-improvement, kind="stable")
        starts = [int(i) for i in order[:k]]
    for s in pop.unit_slots():
        if s not in starts:
            starts.append(s)
    return starts


def propagate(space: DesignSpace, endpoints, rest, params: ShieldParams, rng) -> list[Assignment]:
    """Children of one searched endpoint and one unsearched member, then mutated."""
    if not endpoints or not rest:
        raise ValueError("propagation needs searched and unsearched parents")
    children = []
    for _ in range(params.offspring_count):
        a = endpoints[int(rng.integers(len(endpoints)))]
        b = rest[int(rng.integers(len(rest)))]
        children.append(space.mutate(space.crossover(a, b, rng), params.mut_sigma, rng))
    return children


def update(pop: SearchPopulation, child: Assignment, f, params: ShieldParams, rng) -> int:
    """Let one evaluated child challenge ``n_compare`` random slots; returns replacements."""
    f = np.asarray(f, dtype=float)
    old_ideal = pop.ideal
    pop.lower_ideal(f)
    if not np.array_equal(old_ideal, pop.ideal):
        pop.refresh()
    slots = rng.choice(len(pop), size=min(params.n_compare, len(pop)), replace=False)
    replaced = 0
    for j in slots:
        j = int(j)
        if pop.g_of(f, j) < pop.g[j]:
            pop.replace(j, child, f)
            pop.refresh()
            replaced += 1
    return replaced


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _maybe_train(pop: SearchPopulation, params: ShieldParams, rng) -> None:
    gen = pop.generation
    if gen < params.iter_early or (gen - params.iter_early) % params.f_update:
        return
    try:
        pop.model = learner.fit(pop.train_buffer, params.forest, rng)
    except InsufficientData:
        return
    pop.train_buffer = []


def run_shield(scenario, epoch: int, budget: Budget, params: ShieldParams | None = None,
               seed: int = 0, objectives=None, moves=None, ctx: SearchContext | None = None,
               on_generation=None) -> RunResult:
    params = params or ShieldParams()
    ctx = ctx or SearchContext(scenario, epoch, budget, objectives, moves)
    space = ctx.space
    rng = np.random.default_rng(seed)
    weights = make_weights(params.population, ctx.m)
    pop = None
    stats = {"local_searches": 0, "trainings": 0, "replacements": 0}
    try:
        X, F = [], []
        for _ in range(params.population):
            a = space.random(rng)
            X.append(a)
            F.append(ctx.evaluate(a))
        pop = SearchPopulation(X, F, weights)
        while ctx.running():
            pop.generation = ctx.generation
            had_model = pop.model
            _maybe_train(pop, params, rng)
            if pop.model is not had_model:
                stats["trainings"] += 1
            starts = select_starts(pop, params, rng, space.gar)
            endpoints = []
            for s in starts:
                res = local_search(ctx, pop.X[s], pop.F[s], pop.W[s], pop.ideal, pop.nadir,
                                   params, rng)
                pop.replace(s, res.endpoint, res.objectives)
                pop.lower_ideal(res.visited_min)
                pop.refresh()
                pop.train_buffer.extend(res.trajectory)
                endpoints.append(res.endpoint)
                stats["local_searches"] += 1
            searched = set(starts)
            rest = [pop.X[i] for i in range(len(pop)) if i not in searched] or list(pop.X)
            for child in propagate(space, endpoints, rest, params, rng):
                f = ctx.evaluate(child)
                stats["replacements"] += update(pop, child, f, params, rng)
            ctx.end_generation(pop.ideal)
            if on_generation is not None:
                on_generation(ctx, pop)
    except BudgetExhausted:
        pass
    return ctx.finish("shield", population=pop, **stats)


def default_params(**overrides) -> ShieldParams:
    forest = {k[len("forest_"):]: overrides.pop(k) for k in list(overrides) if k.startswith("forest_")}
    p = ShieldParams(**overrides)
    if forest:
        p = replace(p, forest=replace(p.forest, **forest))
    return p
