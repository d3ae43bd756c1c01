"""Power, cooling, water, carbon and price model of a data-center fleet.

Every function here evaluates one epoch (one hour), so power in kW and
energy in kWh are numerically equal. Two evaluation paths exist:

* :func:`evaluate` composes the per-equation functions site by site and
  returns a full :class:`SiteBreakdown` per site. It is the readable path.
* :class:`Fleet` packs a scenario into dense arrays and evaluates the whole
  fleet in one compiled kernel. Optimizers call this path.

Both must agree to floating-point round-off; the test suite checks it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import CapacityExceeded, InvalidPremium

EPOCHS = 24

IPCS_FACTOR = 0.13             # P_IPCS / P_IT
COOLING_MULTIPLIER = 3.0       # CRAC + chillers + tower/pumps
H_WATER = 0.66                 # kWh of heat removed per litre evaporated
I_POTABLE = 550.0              # kWh per megalitre of potable water produced
I_WASTEWATER = 640.0           # kWh per megalitre of water treated
FREE_COOLING_MAX_TEMP = 75.0   # degF, strict
FREE_COOLING_MAX_DEW = 63.0    # degF, strict
DEFAULT_COP_FREE = 20.0

_SCHED_EPS = 1e-9


class NodeTypeSpec(BaseModel):
    """One homogeneous group of compute nodes at a site."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    count: int = Field(ge=0)
    idle_power: float = Field(gt=0)
    active_power: tuple[float, ...]
    exec_time: tuple[float, ...]

    @model_validator(mode="after")
    def _check_profiles(self):
        if len(self.active_power) != len(self.exec_time):
            raise ValueError("active_power and exec_time must have one entry per workload type")
        for j, (ap, et) in enumerate(zip(self.active_power, self.exec_time)):
            if not ap >= self.idle_power:
                raise ValueError(f"active_power[{j}]={ap} is below idle_power={self.idle_power}")
            if not et > 0:
                raise ValueError(f"exec_time[{j}] must be positive, got {et}")
        return self


class DataCenterSpec(BaseModel):
    """Static and hourly parameters of one site."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    nodes: tuple[NodeTypeSpec, ...]
    cop: float = Field(gt=0)
    ewif: float = Field(ge=0)
    cf: float = Field(gt=0)
    concentration_cycle: float = Field(gt=1)
    tou: tuple[float, ...] = Field(min_length=EPOCHS, max_length=EPOCHS)
    premium_available: bool = False
    premium_price: float = Field(default=0.0, ge=0)
    annual_contract: bool = False
    contract_price: float = Field(default=0.0, ge=0)
    free_cooling_available: bool = False
    temperature: tuple[float, ...] = Field(min_length=EPOCHS, max_length=EPOCHS)
    dew_point: tuple[float, ...] = Field(min_length=EPOCHS, max_length=EPOCHS)

    @model_validator(mode="after")
    def _check_regime(self):
        if any(not p > 0 for p in self.tou):
            raise ValueError("tou prices must be positive")
        if self.premium_available and self.annual_contract:
            raise ValueError("a site is either on an annual clean contract or offers a premium, not both")
        if self.annual_contract and not self.contract_price > 0:
            raise ValueError("contract_price must be positive on a contract site")
        return self

    @property
    def total_nodes(self) -> int:
        return sum(n.count for n in self.nodes)

    @property
    def workload_count(self) -> int:
        return len(self.nodes[0].exec_time) if self.nodes else 0


class ObjectiveVector(NamedTuple):
    cost: float    # USD
    carbon: float  # kg CO2
    water: float   # L


OBJECTIVE_NAMES = ObjectiveVector._fields


@dataclass(frozen=True)
class Roster:
    """Result of local list scheduling at one site.

    ``active[k, j]`` counts nodes of type ``k`` busy with workload ``j``;
    ``idle[k]`` counts the remaining nodes of type ``k``.
    """

    active: np.ndarray
    idle: np.ndarray

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    @property
    def idle_count(self) -> int:
        return int(self.idle.sum())


@dataclass(frozen=True)
class SiteBreakdown:
    p_it: float
    p_cooling: float
    p_ipcs: float
    energy_total: float
    energy_brown: float
    energy_clean: float
    v_e: float
    v_b: float
    v_s: float
    m_electricity: float
    m_water: float
    cost: float
    free_cooling_active: bool

    @property
    def carbon(self) -> float:
        return self.m_electricity + self.m_water

    @property
    def water(self) -> float:
        return self.v_e + self.v_b + self.v_s


# ---------------------------------------------------------------------------
# Per-equation reference functions
# ---------------------------------------------------------------------------

def schedule_local(dc: DataCenterSpec, local_rates: Sequence[float]) -> Roster:
    """Greedy list scheduling of per-type arrival rates onto a site's nodes.

    Workload types are placed in index order. For each, node types are
    filled fastest-first; a type with ``a`` free nodes can absorb
    ``a / exec_time`` jobs per hour, and the nodes it needs are rounded up.
    """
    rates = np.asarray(local_rates, dtype=float)
    n_types = len(dc.nodes)
    n_work = len(rates)
    if np.any(rates < 0):
        raise ValueError("local arrival rates must be non-negative")
    free = np.array([n.count for n in dc.nodes], dtype=np.int64)
    active = np.zeros((n_types, n_work), dtype=np.int64)
    for j in range(n_work):
        remaining = float(rates[j])
        order = sorted(range(n_types), key=lambda k: (dc.nodes[k].exec_time[j], k))
        for k in order:
            if remaining <= 0.0:
                break
            if free[k] == 0:
                continue
            et = dc.nodes[k].exec_time[j]
            capacity = free[k] / et
            if remaining <= capacity:
                take, leftover = remaining, 0.0
            else:
                take, leftover = capacity, remaining - capacity
            used = min(int(math.ceil(take * et - _SCHED_EPS)), int(free[k]))
            used = max(used, 0)
            active[k, j] = used
            free[k] -= used
            remaining = leftover
        if remaining > _SCHED_EPS * max(1.0, rates[j]):
            raise CapacityExceeded(
                f"site {dc.id!r} cannot absorb {remaining:.6g} jobs/h of workload {j}",
                site=dc.id, workload=j, excess=remaining,
            )
    return Roster(active=active, idle=free)


def it_power(roster: Roster, dc: DataCenterSpec) -> float:
    """IT load in kW: active power of busy nodes plus idle power of the rest."""
    total = 0.0
    for k, node in enumerate(dc.nodes):
        for j in range(roster.active.shape[1]):
            total += roster.active[k, j] * node.active_power[j]
        total += roster.idle[k] * node.idle_power
    return total


def free_cooling_possible(dc: DataCenterSpec, epoch: int) -> bool:
    return (
        dc.free_cooling_available
        and dc.temperature[epoch] < FREE_COOLING_MAX_TEMP
        and dc.dew_point[epoch] < FREE_COOLING_MAX_DEW
    )


def cooling_power(p_it: float, dc: DataCenterSpec, epoch: int,
                  cop_free: float = DEFAULT_COP_FREE) -> tuple[float, bool]:
    """Cooling power in kW and whether free-air cooling is in use."""
    if free_cooling_possible(dc, epoch):
        return p_it / cop_free, True
    p_crac = p_it / dc.cop
    return COOLING_MULTIPLIER * p_crac, False


def ipcs_power(p_it: float) -> float:
    return IPCS_FACTOR * p_it


def water_site(e_it: float, dc: DataCenterSpec, free_cooling_active: bool) -> tuple[float, float]:
    """Evaporated and blowdown water (L) of the cooling tower."""
    if free_cooling_active:
        return 0.0, 0.0
    v_e = e_it / H_WATER
    v_b = v_e / (dc.concentration_cycle - 1.0)
    return v_e, v_b


def water_source(e_brown: float, dc: DataCenterSpec) -> float:
    """Water consumed upstream by generating the site's grid (brown) energy."""
    return e_brown * dc.ewif


def carbon_site(e_brown: float, v_e: float, v_b: float, v_s: float,
                dc: DataCenterSpec) -> tuple[float, float]:
    """Electricity- and water-borne CO2 in kg.

    Emission mass is energy times the carbon factor (g/kWh), so both terms
    multiply by ``cf``. Water volumes are converted to megalitres before the
    treatment intensities apply.
    """
    m_electricity = e_brown * dc.cf / 1000.0
    water_energy = ((v_b + v_e) * I_POTABLE + v_s * I_WASTEWATER) / 1e6
    m_water = water_energy * dc.cf / 1000.0
    return m_electricity, m_water


def energy_cost(e_total: float, rho: float, dc: DataCenterSpec,
                epoch: int) -> tuple[float, float, float]:
    """Return (cost USD, brown kWh, clean kWh) under the site's price regime."""
    if not 0.0 <= rho <= 1.0:
        raise InvalidPremium(f"premium fraction {rho} outside [0, 1] at site {dc.id!r}")
    if dc.annual_contract:
        return e_total * dc.contract_price, 0.0, e_total
    if rho > 0.0 and not dc.premium_available:
        raise InvalidPremium(f"site {dc.id!r} offers no clean premium (rho={rho})")
    e_clean = rho * e_total
    e_brown = (1.0 - rho) * e_total
    cost = e_total * dc.tou[epoch] + e_clean * dc.premium_price
    return cost, e_brown, e_clean


def evaluate_site(dc: DataCenterSpec, local_rates: Sequence[float], rho: float, epoch: int,
                  cop_free: float = DEFAULT_COP_FREE) -> SiteBreakdown:
    roster = schedule_local(dc, local_rates)
    p_it = it_power(roster, dc)
    p_cooling, free = cooling_power(p_it, dc, epoch, cop_free)
    p_ipcs = ipcs_power(p_it)
    e_total = p_it + p_cooling + p_ipcs
    cost, e_brown, e_clean = energy_cost(e_total, rho, dc, epoch)
    v_e, v_b = water_site(p_it, dc, free)
    v_s = water_source(e_brown, dc)
    m_el, m_w = carbon_site(e_brown, v_e, v_b, v_s, dc)
    return SiteBreakdown(
        p_it=p_it, p_cooling=p_cooling, p_ipcs=p_ipcs, energy_total=e_total,
        energy_brown=e_brown, energy_clean=e_clean, v_e=v_e, v_b=v_b, v_s=v_s,
        m_electricity=m_el, m_water=m_w, cost=cost, free_cooling_active=free,
    )


def evaluate(assignment, scenario, epoch: int) -> tuple[ObjectiveVector, list[SiteBreakdown]]:
    """Fleet objectives and per-site breakdown of one assignment at one epoch."""
    rates = np.asarray(assignment.rates, dtype=float)
    rho = np.asarray(assignment.rho, dtype=float)
    sites = [
        evaluate_site(dc, rates[i], float(rho[i]), epoch, scenario.free_cooling_cop)
        for i, dc in enumerate(scenario.datacenters)
    ]
    total = ObjectiveVector(
        cost=math.fsum(s.cost for s in sites),
        carbon=math.fsum(s.carbon for s in sites),
        water=math.fsum(s.water for s in sites),
    )
    return total, sites


# ---------------------------------------------------------------------------
# Compiled fleet evaluation
# ---------------------------------------------------------------------------

@njit(cache=True)
def _schedule_kernel(rates, counts, exec_time, order):
    D, T = rates.shape
    K = counts.shape[1]
    free = counts.copy()
    active = np.zeros((D, K, T), dtype=np.int64)
    leftover = np.zeros((D, T))
    for d in range(D):
        for j in range(T):
            remaining = rates[d, j]
            for q in range(K):
                if remaining <= 0.0:
                    break
                k = order[d, j, q]
                avail = free[d, k]
                if avail == 0:
                    continue
                et = exec_time[d, k, j]
                capacity = avail / et
                if remaining <= capacity:
                    take = remaining
                    rest = 0.0
                else:
                    take = capacity
                    rest = remaining - capacity
                used = int(math.ceil(take * et - 1e-9))
                if used > avail:
                    used = avail
                if used < 0:
                    used = 0
                active[d, k, j] = used
                free[d, k] -= used
                remaining = rest
            if remaining > 1e-9 * max(1.0, rates[d, j]):
                leftover[d, j] = remaining
    return active, free, leftover


@njit(cache=True)
def _overflow_kernel(rates, counts, exec_time, order):
    D, T = rates.shape
    K = counts.shape[1]
    for d in range(D):
        free = counts[d].copy()
        for j in range(T):
            remaining = rates[d, j]
            for q in range(K):
                if remaining <= 0.0:
                    break
                k = order[d, j, q]
                avail = free[k]
                if avail == 0:
                    continue
                et = exec_time[d, k, j]
                capacity = avail / et
                if remaining <= capacity:
                    take = remaining
                    rest = 0.0
                else:
                    take = capacity
                    rest = remaining - capacity
                used = int(math.ceil(take * et - 1e-9))
                if used > avail:
                    used = avail
                if used < 0:
                    used = 0
                free[k] -= used
                remaining = rest
            if remaining > 1e-9 * max(1.0, rates[d, j]):
                return True
    return False


@njit(cache=True)
def _site_kernel(rates, rho, counts, exec_time, order, ap, ip, cool_div, evap_on,
                 conc, tou, premium_price, contract, contract_price, ewif, cf, out):
    """Fill ``out[d, :]`` with (p_it, p_cool, p_ipcs, e, e_brown, e_clean,
    v_e, v_b, v_s, m_el, m_w, cost). Returns False on capacity overflow."""
    active, free, leftover = _schedule_kernel(rates, counts, exec_time, order)
    D, T = rates.shape
    K = counts.shape[1]
    ok = True
    for d in range(D):
        for j in range(T):
            if leftover[d, j] > 0.0:
                ok = False
        p_it = 0.0
        for k in range(K):
            for j in range(T):
                p_it += active[d, k, j] * ap[d, k, j]
            p_it += free[d, k] * ip[d, k]
        p_cool = p_it / cool_div[d]
        p_ipcs = 0.13 * p_it
        e = p_it + p_cool + p_ipcs
        if contract[d]:
            cost = e * contract_price[d]
            e_brown = 0.0
            e_clean = e
        else:
            e_clean = rho[d] * e
            e_brown = (1.0 - rho[d]) * e
            cost = e * tou[d] + e_clean * premium_price[d]
        if evap_on[d]:
            v_e = p_it / 0.66
            v_b = v_e / (conc[d] - 1.0)
        else:
            v_e = 0.0
            v_b = 0.0
        v_s = e_brown * ewif[d]
        m_el = e_brown * cf[d] / 1000.0
        m_w = ((v_b + v_e) * 550.0 + v_s * 640.0) / 1e6 * cf[d] / 1000.0
        out[d, 0] = p_it
        out[d, 1] = p_cool
        out[d, 2] = p_ipcs
        out[d, 3] = e
        out[d, 4] = e_brown
        out[d, 5] = e_clean
        out[d, 6] = v_e
        out[d, 7] = v_b
        out[d, 8] = v_s
        out[d, 9] = m_el
        out[d, 10] = m_w
        out[d, 11] = cost
    return ok


@njit(cache=True)
def _objective_kernel(rates, rho, counts, exec_time, order, ap, ip, cool_div, evap_on,
                      conc, tou, premium_price, contract, contract_price, ewif, cf):
    D = rates.shape[0]
    out = np.empty((D, 12))
    ok = _site_kernel(rates, rho, counts, exec_time, order, ap, ip, cool_div, evap_on,
                      conc, tou, premium_price, contract, contract_price, ewif, cf, out)
    obj = np.zeros(3)
    for d in range(D):
        obj[0] += out[d, 11]
        obj[1] += out[d, 9] + out[d, 10]
        obj[2] += out[d, 6] + out[d, 7] + out[d, 8]
    return ok, obj


class Fleet:
    """Dense-array view of a fleet for fast repeated evaluation."""

    def __init__(self, datacenters: Sequence[DataCenterSpec], cop_free: float = DEFAULT_COP_FREE):
        D = len(datacenters)
        T = datacenters[0].workload_count
        K = max(len(dc.nodes) for dc in datacenters)
        self.size = D
        self.workloads = T
        self.ids = [dc.id for dc in datacenters]
        counts = np.zeros((D, K), dtype=np.int64)
        exec_time = np.ones((D, K, T))
        ap = np.zeros((D, K, T))
        ip = np.zeros((D, K))
        order = np.zeros((D, T, K), dtype=np.int64)
        for d, dc in enumerate(datacenters):
            for k, node in enumerate(dc.nodes):
                counts[d, k] = node.count
                exec_time[d, k] = node.exec_time
                ap[d, k] = node.active_power
                ip[d, k] = node.idle_power
            n_k = len(dc.nodes)
            for j in range(T):
                real = sorted(range(n_k), key=lambda k: (dc.nodes[k].exec_time[j], k))
                order[d, j] = real + list(range(n_k, K))
        self.counts = counts
        self.exec_time = exec_time
        self.active_power = ap
        self.idle_power = ip
        self.order = order
        self.total_nodes = counts.sum(axis=1)
        self.cop = np.array([dc.cop for dc in datacenters])
        self.conc = np.array([dc.concentration_cycle for dc in datacenters])
        self.ewif = np.array([dc.ewif for dc in datacenters])
        self.cf = np.array([dc.cf for dc in datacenters])
        self.tou = np.array([dc.tou for dc in datacenters])
        self.premium = np.array([dc.premium_available for dc in datacenters])
        self.premium_price = np.array([dc.premium_price if dc.premium_available else 0.0
                                       for dc in datacenters])
        self.contract = np.array([dc.annual_contract for dc in datacenters])
        self.contract_price = np.array([dc.contract_price for dc in datacenters])
        self.free_mode = np.array([[free_cooling_possible(dc, t) for t in range(EPOCHS)]
                                   for dc in datacenters])
        self.cop_free = float(cop_free)
        # P_cool = p_it / cool_div, per site and epoch
        mech = self.cop[:, None] / COOLING_MULTIPLIER * np.ones((1, EPOCHS))
        self.cool_div = np.where(self.free_mode, self.cop_free, mech)
        self.no_premium = ~self.premium & ~self.contract
        self._epoch_cache = {}

    def _epoch_args(self, epoch):
        args = self._epoch_cache.get(epoch)
        if args is None:
            args = (self.counts, self.exec_time, self.order, self.active_power, self.idle_power,
                    np.ascontiguousarray(self.cool_div[:, epoch]),
                    np.ascontiguousarray(~self.free_mode[:, epoch]),
                    self.conc, np.ascontiguousarray(self.tou[:, epoch]), self.premium_price,
                    self.contract, self.contract_price, self.ewif, self.cf)
            self._epoch_cache[epoch] = args
        return args

    def _args(self, rates, rho, epoch):
        return (np.ascontiguousarray(rates, dtype=np.float64),
                np.ascontiguousarray(rho, dtype=np.float64)) + self._epoch_args(epoch)

    def _check_rho(self, rho):
        bad = (np.asarray(rho) > 0) & self.no_premium
        if bad.any():
            d = int(np.flatnonzero(bad)[0])
            raise InvalidPremium(f"site {self.ids[d]!r} offers no clean premium")

    def objectives(self, rates, rho, epoch: int) -> np.ndarray:
        """Fleet (cost, carbon, water) as a length-3 array."""
        self._check_rho(rho)
        ok, obj = _objective_kernel(*self._args(rates, rho, epoch))
        if not ok:
            _, _, left = _schedule_kernel(np.ascontiguousarray(rates, dtype=np.float64),
                                          self.counts, self.exec_time, self.order)
            d, j = np.unravel_index(int(np.argmax(left)), left.shape)
            raise CapacityExceeded(
                f"site {self.ids[d]!r} cannot absorb {left[d, j]:.6g} jobs/h of workload {j}",
                site=self.ids[d], workload=int(j), excess=float(left[d, j]),
            )
        return obj

    def site_table(self, rates, rho, epoch: int) -> np.ndarray:
        """Per-site (D, 12) table; columns follow ``SITE_COLUMNS``."""
        self._check_rho(rho)
        out = np.empty((self.size, 12))
        ok = _site_kernel(*self._args(rates, rho, epoch), out)
        if not ok:
            raise CapacityExceeded("assignment exceeds site capacity")
        return out

    def overflows(self, rates) -> bool:
        return bool(_overflow_kernel(np.ascontiguousarray(rates, dtype=np.float64),
                                     self.counts, self.exec_time, self.order))

    def load_state(self, rates):
        """Unabsorbed rate per (site, workload) and node utilization per site."""
        _, free, left = _schedule_kernel(np.ascontiguousarray(rates, dtype=np.float64),
                                         self.counts, self.exec_time, self.order)
        used = self.total_nodes - free.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            util = np.where(self.total_nodes > 0, used / np.maximum(self.total_nodes, 1), 1.0)
        return left, util


SITE_COLUMNS = ("p_it", "p_cooling", "p_ipcs", "energy_total", "energy_brown", "energy_clean",
                "v_e", "v_b", "v_s", "m_electricity", "m_water", "cost")
