"""Scenario schema, JSON ingestion and a seeded synthetic fleet generator."""

from __future__ import annotations

import json
import math
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Annotated

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ParseError, ValidationError
from .model import DEFAULT_COP_FREE, EPOCHS, DataCenterSpec, Fleet, NodeTypeSpec

SCHEMA_VERSION = 1

# Parameter ranges of the synthetic fleet
COP_RANGE = (3.75, 5.72)
EWIF_RANGE = (0.0, 3.97)          # L/kWh
CF_RANGE = (99.7, 775.0)          # g/kWh
TOU_RANGE = (0.018, 0.48)         # $/kWh
PREMIUM_RANGE = (0.0039, 0.14)    # $/kWh
CONTRACT_PRICE = 0.15             # $/kWh
CONCENTRATION_CYCLE = 5.0
NODES_PER_SITE = 4320
MAX_UTILIZATION = 0.6

# Table of workload kinds cycled through by the generator
WORKLOAD_KINDS = (
    ("lda", "offline analytics"),
    ("kmeans", "offline analytics"),
    ("naive-bayes", "offline analytics"),
    ("image-to-text", "artificial intelligence"),
    ("image-to-image", "artificial intelligence"),
)

# Synthetic hardware: (name, relative job time, idle kW, dynamic kW)
NODE_KINDS = (
    ("E5-2697v2", 0.45, 0.090, 0.22),
    ("E3-1225v3", 0.75, 0.035, 0.10),
    ("E5649", 1.00, 0.060, 0.12),
)


class WorkloadSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    category: str = ""
    gar: tuple[Annotated[float, Field(ge=0, allow_inf_nan=False)], ...] = Field(
        min_length=EPOCHS, max_length=EPOCHS)


class Scenario(BaseModel):
    """A fleet of sites plus the global arrival rates of every workload type."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: int = SCHEMA_VERSION
    label: str = ""
    seed: int = 0
    epoch_count: int = EPOCHS
    free_cooling_cop: float = Field(default=DEFAULT_COP_FREE, gt=0)
    datacenters: tuple[DataCenterSpec, ...] = Field(min_length=1)
    workloads: tuple[WorkloadSpec, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        if self.epoch_count != EPOCHS:
            raise ValueError(f"epoch_count must be {EPOCHS}")
        n_work = len(self.workloads)
        for i, dc in enumerate(self.datacenters):
            if not dc.nodes:
                raise _FieldError(f"datacenters[{i}].nodes", "a site needs at least one node type")
            for k, node in enumerate(dc.nodes):
                if len(node.active_power) != n_work:
                    raise _FieldError(f"datacenters[{i}].nodes[{k}].active_power",
                                      f"expected {n_work} entries, got {len(node.active_power)}")
        # necessary capacity condition: all demand on the fastest node anywhere
        fastest = [min(n.exec_time[j] for dc in self.datacenters for n in dc.nodes if n.count > 0)
                   if any(n.count > 0 for dc in self.datacenters for n in dc.nodes) else math.inf
                   for j in range(n_work)]
        total_nodes = sum(dc.total_nodes for dc in self.datacenters)
        for t in range(EPOCHS):
            need = sum(w.gar[t] * fastest[j] for j, w in enumerate(self.workloads) if w.gar[t] > 0)
            if need > total_nodes:
                raise _FieldError("workloads", f"epoch {t} demand needs {need:.1f} nodes, "
                                               f"fleet has {total_nodes}")
        return self

    @property
    def size(self) -> int:
        return len(self.datacenters)

    @property
    def workload_count(self) -> int:
        return len(self.workloads)

    @cached_property
    def fleet(self) -> Fleet:
        return Fleet(self.datacenters, self.free_cooling_cop)

    @cached_property
    def gar_matrix(self) -> np.ndarray:
        """(epochs, T) global arrival rates."""
        return np.array([w.gar for w in self.workloads], dtype=float).T.copy()

    def premium_mask(self) -> np.ndarray:
        return np.array([dc.premium_available and not dc.annual_contract
                         for dc in self.datacenters])


class _FieldError(ValueError):
    def __init__(self, path, message):
        super().__init__(message)
        self.path = path


def epoch_demand(scenario: Scenario, epoch: int) -> np.ndarray:
    """Global arrival rate (jobs/h) of each workload type in ``epoch``."""
    if not 0 <= epoch < scenario.epoch_count:
        raise IndexError(f"epoch {epoch} outside 0..{scenario.epoch_count - 1}")
    return scenario.gar_matrix[epoch].copy()


def _format_loc(loc) -> str:
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        elif part in ("function-after", "after") or "[" in str(part):
            continue
        else:
            path += f".{part}" if path else str(part)
    return path


def scenario_from_dict(data: dict) -> Scenario:
    """Validate a parsed document, raising :class:`ValidationError` with a field path."""
    try:
        return Scenario.model_validate(data)
    except pydantic.ValidationError as exc:
        err = exc.errors()[0]
        path = _format_loc(err["loc"])
        ctx_err = err.get("ctx", {}).get("error")
        if isinstance(ctx_err, _FieldError):
            path = ctx_err.path
        raise ValidationError(err["msg"], path=path) from None


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return scenario_from_dict(data)


def dump_scenario(scenario: Scenario) -> str:
    """Canonical JSON text of a scenario."""
    return json.dumps(scenario.model_dump(mode="json"), indent=1) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(scenario), encoding="utf-8")


def bundled_scenario_path() -> Path:
    return Path(str(resources.files("gddc") / "data" / "default_scenario.json"))


def bundled_scenario() -> Scenario:
    """The shipped 16-site, 5-workload fleet (``default_scenario(16, 5, 42)``)."""
    return load_scenario(bundled_scenario_path())


def _r(x: float) -> float:
    return round(float(x), 6)


def _tou_curve(rng, offset: int) -> list[float]:
    lo = rng.uniform(TOU_RANGE[0], 0.10)
    hi = rng.uniform(max(2.0 * lo, 0.08), TOU_RANGE[1])
    prices = []
    for t in range(EPOCHS):
        local = (t - offset) % EPOCHS
        if 14 <= local < 20:
            p = hi
        elif 10 <= local < 14 or 20 <= local < 22:
            p = 0.5 * (lo + hi)
        else:
            p = lo
        prices.append(_r(min(max(p, TOU_RANGE[0]), TOU_RANGE[1])))
    return prices


def _diurnal(rng, mean: float, amp: float, offset: int) -> list[float]:
    # coldest around 05:00 local, warmest around 17:00
    return [_r(mean - amp * math.cos(2 * math.pi * ((t - offset - 5) % EPOCHS) / EPOCHS)
               + rng.normal(0, 0.5)) for t in range(EPOCHS)]


def _split_nodes(rng) -> list[int]:
    shares = 0.15 + 0.55 * rng.dirichlet(np.ones(len(NODE_KINDS)))
    shares /= shares.sum()
    counts = np.floor(shares * NODES_PER_SITE).astype(int)
    counts[int(np.argmax(shares))] += NODES_PER_SITE - counts.sum()
    return [int(c) for c in counts]


def default_scenario(d: int = 16, t: int = 5, seed: int = 42) -> Scenario:
    """Synthetic fleet with ``d`` sites and ``t`` workload types.

    All values are drawn within published parameter ranges; geography,
    tariffs and weather are synthetic and regenerable from ``seed``.
    """
    if d < 1 or t < 1:
        raise ValueError("need at least one site and one workload type")
    rng = np.random.default_rng(seed)

    # hardware profiles are shared by every site; only the mix differs
    base_time = rng.uniform(0.3, 1.1, size=t)
    intensity = rng.uniform(0.6, 1.0, size=t)
    profiles = []
    for name, speed, idle, dyn in NODE_KINDS:
        et = np.clip(base_time * speed * rng.uniform(0.9, 1.1, size=t), 0.1, 2.0)
        ap = np.clip(idle + dyn * intensity * rng.uniform(0.9, 1.1, size=t), 0.08, 0.35)
        profiles.append((name, idle, [_r(x) for x in ap], [_r(x) for x in et]))

    n_premium = max(0, round(0.375 * d)) if d > 1 else 0
    n_free = max(1, round(0.3 * d))
    perm = rng.permutation(d)
    contract_site = int(perm[0])
    premium_sites = set(int(i) for i in perm[1:1 + n_premium])
    free_sites = set(int(i) for i in rng.permutation(d)[:n_free])

    sites = []
    for i in range(d):
        offset = int(rng.integers(0, 4))
        counts = _split_nodes(rng)
        nodes = tuple(
            NodeTypeSpec(id=name, count=c, idle_power=idle,
                         active_power=tuple(ap), exec_time=tuple(et))
            for (name, idle, ap, et), c in zip(profiles, counts)
        )
        ewif = 0.0 if rng.random() < 0.1 else rng.uniform(*EWIF_RANGE)
        if i in free_sites:
            temp_mean, dew_mean = rng.uniform(62, 76), rng.uniform(50, 63)
        else:
            temp_mean, dew_mean = rng.uniform(60, 95), rng.uniform(45, 75)
        sites.append(DataCenterSpec(
            id=f"dc{i:02d}",
            nodes=nodes,
            cop=_r(rng.uniform(*COP_RANGE)),
            ewif=_r(ewif),
            cf=_r(rng.uniform(*CF_RANGE)),
            concentration_cycle=CONCENTRATION_CYCLE,
            tou=tuple(_tou_curve(rng, offset)),
            premium_available=i in premium_sites,
            premium_price=_r(rng.uniform(*PREMIUM_RANGE)) if i in premium_sites else 0.0,
            annual_contract=i == contract_site,
            contract_price=CONTRACT_PRICE if i == contract_site else 0.0,
            free_cooling_available=i in free_sites,
            temperature=tuple(_diurnal(rng, temp_mean, rng.uniform(8, 15), offset)),
            dew_point=tuple(_diurnal(rng, dew_mean, rng.uniform(3, 6), offset)),
        ))

    # diurnal demand, scaled so the busiest epoch uses MAX_UTILIZATION of
    # the fleet's nodes at count-weighted mean job times
    counts = np.array([[n.count for n in dc.nodes] for dc in sites], dtype=float)
    kind_counts = counts.sum(axis=0)
    mean_time = np.array([sum(kind_counts[k] * profiles[k][3][j] for k in range(len(profiles)))
                          / kind_counts.sum() for j in range(t)])
    weight = rng.uniform(0.5, 1.5, size=t)
    phase = rng.uniform(0, 24, size=t)
    hours = np.arange(EPOCHS)
    shape = 1.0 + 0.35 * np.sin(2 * np.pi * (hours[:, None] - phase[None, :]) / EPOCHS)
    shape *= 1.0 + 0.05 * rng.standard_normal((EPOCHS, t))
    raw = weight[None, :] * np.clip(shape, 0.05, None)
    node_hours = raw @ mean_time
    scale = MAX_UTILIZATION * counts.sum() / node_hours.max()
    gar = raw * scale

    workloads = []
    for j in range(t):
        name, category = WORKLOAD_KINDS[j % len(WORKLOAD_KINDS)]
        if j >= len(WORKLOAD_KINDS):
            name = f"{name}-{j // len(WORKLOAD_KINDS)}"
        workloads.append(WorkloadSpec(id=name, category=category,
                                      gar=tuple(_r(g) for g in gar[:, j])))

    return Scenario(label=f"synthetic-{d}dc-{t}wl-seed{seed}", seed=seed,
                    datacenters=tuple(sites), workloads=tuple(workloads))
