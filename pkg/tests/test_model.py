import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gddc.encoding import Assignment, DesignSpace
from gddc.errors import CapacityExceeded, InvalidPremium
from gddc.model import (SITE_COLUMNS, NodeTypeSpec, Roster, carbon_site,
                        cooling_power, energy_cost, evaluate, evaluate_site, ipcs_power, it_power,
                        schedule_local, water_site, water_source)

from conftest import make_scenario, make_site


def hand_oracle():
    """The one-site example traced with exact rationals, sharing no code with the model."""
    ap, ip, n_active, n_idle = Fr(3, 10), Fr(1, 10), 2, 1
    cop, conc, ewif, cf, tou = Fr(4), Fr(5), Fr(2), Fr(500), Fr(1, 10)
    p_it = n_active * ap + n_idle * ip
    p_cool = 3 * (p_it / cop)
    p_ipcs = Fr(13, 100) * p_it
    e = p_it + p_cool + p_ipcs
    v_e = p_it / Fr(66, 100)
    v_b = v_e / (conc - 1)
    v_s = e * ewif
    m_el = e * cf / 1000
    m_w = ((v_e + v_b) * 550 + v_s * 640) / 10**6 * cf / 1000
    return dict(p_it=p_it, e=e, cost=e * tou, water=v_e + v_b + v_s, carbon=m_el + m_w)


def test_hand_oracle_values():
    o = hand_oracle()
    assert o["p_it"] == Fr(7, 10)
    assert o["e"] == Fr(1316, 1000)
    assert o["cost"] == Fr(1316, 10000)
    assert float(o["water"]) == pytest.approx(3.958, abs=5e-4)
    assert float(o["carbon"]) == pytest.approx(0.659, abs=5e-4)


def test_evaluate_matches_hand_oracle(oracle_scenario):
    o = hand_oracle()
    total, sites = evaluate(Assignment([[2.0]], [0.0]), oracle_scenario, 0)
    assert sites[0].p_it == pytest.approx(float(o["p_it"]), rel=1e-12)
    assert sites[0].energy_total == pytest.approx(float(o["e"]), rel=1e-12)
    assert total.cost == pytest.approx(float(o["cost"]), rel=1e-12)
    assert total.water == pytest.approx(float(o["water"]), rel=1e-12)
    assert total.carbon == pytest.approx(float(o["carbon"]), rel=1e-12)


# --- list scheduling -------------------------------------------------------

def test_schedule_zero_load_is_all_idle():
    dc = make_site(nodes=((3, 0.1, (0.3, 0.2), (1.0, 0.5)), (2, 0.1, (0.3, 0.2), (0.5, 1.0))))
    r = schedule_local(dc, [0.0, 0.0])
    assert r.active_count == 0 and r.idle_count == 5


def test_schedule_single_type_hand_trace():
    r = schedule_local(make_site(), [2.0])
    assert r.active.tolist() == [[2]] and r.idle.tolist() == [1]


def test_schedule_capacity_exceeded():
    with pytest.raises(CapacityExceeded) as info:
        schedule_local(make_site(), [3.5])
    assert info.value.site == "s" and info.value.workload == 0


def test_schedule_fastest_first_and_no_double_booking():
    # type 1 is faster for workload 0; workload 1 must fall back to what is left
    dc = make_site(nodes=((4, 0.1, (0.2, 0.2), (1.0, 1.0)), (2, 0.1, (0.3, 0.3), (0.5, 0.5))))
    r = schedule_local(dc, [5.0, 2.0])
    assert r.active[1, 0] == 2 and r.active[0, 0] == 1   # 4 jobs/h on fast, 1 on slow
    assert r.active[:, 1].tolist() == [2, 0]              # fast nodes already taken
    assert (r.active.sum(axis=1) + r.idle).tolist() == [4, 2]


def test_schedule_rejects_negative_rates():
    with pytest.raises(ValueError):
        schedule_local(make_site(), [-1.0])


# --- equations ----------------------------------------------------------------

def test_it_power_examples():
    dc10 = make_site(nodes=((10, 0.1, (0.3,), (1.0,)),))
    assert it_power(Roster(np.zeros((1, 1), int), np.array([10])), dc10) == pytest.approx(1.0)
    assert it_power(Roster(np.array([[2]]), np.array([1])), make_site()) == pytest.approx(0.7)
    empty = make_site(nodes=((0, 0.1, (0.3,), (1.0,)),))
    assert it_power(Roster(np.zeros((1, 1), int), np.array([0])), empty) == 0.0


def test_cooling_examples():
    assert cooling_power(100.0, make_site(cop=4.0), 0) == (75.0, False)
    assert cooling_power(0.0, make_site(), 0) == (0.0, False)
    free = make_site(free=True, temperature=74.0, dew=62.0)
    assert cooling_power(100.0, free, 0, cop_free=20.0) == (5.0, True)
    assert cooling_power(0.0, free, 0) == (0.0, True)


@pytest.mark.parametrize("temp,dew,expect", [(74.9, 62.9, True), (75.0, 50.0, False),
                                             (60.0, 63.0, False)])
def test_free_cooling_thresholds_are_strict(temp, dew, expect):
    dc = make_site(free=True, temperature=temp, dew=dew)
    assert cooling_power(10.0, dc, 5)[1] is expect


def test_ipcs_examples():
    assert ipcs_power(100.0) == pytest.approx(13.0)
    assert ipcs_power(0.0) == 0.0
    assert ipcs_power(0.7) == pytest.approx(0.091)


def test_water_site_examples():
    v_e, v_b = water_site(66.0, make_site(conc=5.0), False)
    assert v_e == pytest.approx(100.0) and v_b == pytest.approx(25.0)
    assert water_site(66.0, make_site(), True) == (0.0, 0.0)
    assert water_site(0.0, make_site(), False) == (0.0, 0.0)


def test_water_source_examples():
    assert water_source(100.0, make_site(ewif=3.97)) == pytest.approx(397.0)
    assert water_source(100.0, make_site(ewif=0.0)) == 0.0
    assert water_source(0.0, make_site(ewif=3.97)) == 0.0


def test_carbon_examples():
    m_el, _ = carbon_site(100.0, 0.0, 0.0, 0.0, make_site(cf=500.0))
    assert m_el == pytest.approx(50.0)
    _, m_w = carbon_site(0.0, 1.0606, 0.2652, 2.632, make_site(cf=500.0))
    assert m_w * 1000 == pytest.approx(1.21, abs=5e-3)
    assert carbon_site(0.0, 0.0, 0.0, 0.0, make_site()) == (0.0, 0.0)


def test_energy_cost_examples():
    contract = make_site(contract=0.15)
    assert energy_cost(100.0, 0.0, contract, 0) == pytest.approx((15.0, 0.0, 100.0))
    assert energy_cost(10.0, 0.0, make_site(tou=0.10), 0) == pytest.approx((1.0, 10.0, 0.0))
    prem = make_site(tou=0.10, premium=0.04)
    assert energy_cost(10.0, 0.5, prem, 0) == pytest.approx((1.2, 5.0, 5.0))


def test_energy_cost_rejects_premium_without_offer():
    with pytest.raises(InvalidPremium):
        energy_cost(10.0, 0.2, make_site(), 0)


def test_site_spec_validation():
    with pytest.raises(ValueError):
        NodeTypeSpec(id="x", count=1, idle_power=0.2, active_power=(0.1,), exec_time=(1.0,))
    with pytest.raises(ValueError):
        make_site(premium=0.01, contract=0.15)
    with pytest.raises(ValueError):
        make_site(tou=0.0)


# --- fleet evaluation -----------------------------------------------------------

def test_zero_arrival_costs_idle_power_only():
    s = make_scenario([make_site(tou=0.1)], [0.0])
    total, sites = evaluate(Assignment([[0.0]], [0.0]), s, 0)
    p_it = 3 * 0.1
    e = p_it * (1 + 3 / 4 + 0.13)
    assert sites[0].p_it == pytest.approx(p_it)
    assert total.cost == pytest.approx(e * 0.1)


def test_doubling_power_doubles_it_load():
    base = make_site(nodes=((5, 0.1, (0.3,), (1.0,)),))
    dbl = make_site(nodes=((5, 0.2, (0.6,), (1.0,)),))
    a = evaluate_site(base, [3.0], 0.0, 0)
    b = evaluate_site(dbl, [3.0], 0.0, 0)
    assert b.p_it == pytest.approx(2 * a.p_it, rel=1e-15)
    assert b.energy_total == pytest.approx(2 * a.energy_total, rel=1e-15)


def test_breakdown_invariants(small):
    rng = np.random.default_rng(0)
    space = DesignSpace(small, 7)
    for _ in range(20):
        a = space.random(rng)
        total, sites = evaluate(a, small, 7)
        for s in sites:
            vals = [getattr(s, c) for c in SITE_COLUMNS]
            assert min(vals) >= 0
            assert s.energy_brown + s.energy_clean == pytest.approx(s.energy_total, rel=1e-12)
            if s.free_cooling_active:
                assert s.v_e == 0 and s.v_b == 0
        assert total.cost == math.fsum(s.cost for s in sites)
        assert total.carbon == math.fsum(s.carbon for s in sites)
        assert total.water == math.fsum(s.water for s in sites)


def test_evaluate_is_bit_reproducible(small):
    a = DesignSpace(small, 3).random(np.random.default_rng(1))
    assert evaluate(a, small, 3) == evaluate(a.copy(), small, 3)


def test_compiled_path_matches_reference(bundled):
    rng = np.random.default_rng(5)
    for epoch in (0, 6, 12, 18, 23):
        space = DesignSpace(bundled, epoch)
        for _ in range(10):
            a = space.random(rng)
            total, sites = evaluate(a, bundled, epoch)
            fast = bundled.fleet.objectives(a.rates, a.rho, epoch)
            np.testing.assert_allclose(fast, list(total), rtol=1e-12)
            table = bundled.fleet.site_table(a.rates, a.rho, epoch)
            ref = np.array([[getattr(s, c) for c in SITE_COLUMNS] for s in sites])
            np.testing.assert_allclose(table, ref, rtol=1e-12, atol=1e-12)


def test_fleet_raises_like_reference(small):
    rates = np.zeros((small.size, small.workload_count))
    rates[0, 0] = 1e9
    with pytest.raises(CapacityExceeded):
        small.fleet.objectives(rates, np.zeros(small.size), 0)
    rho = np.ones(small.size)
    with pytest.raises(InvalidPremium):
        small.fleet.objectives(np.zeros_like(rates), rho, 0)


# --- properties -------------------------------------------------------------------

site_params = st.fixed_dictionaries({
    "cop": st.floats(3.75, 5.72), "ewif": st.floats(0.0, 3.97), "cf": st.floats(99.7, 775.0),
    "tou": st.floats(0.018, 0.48), "premium": st.floats(0.0039, 0.14),
})


@given(site_params, st.floats(0.0, 40.0), st.floats(0.01, 5.0),
       st.integers(0, 1), st.booleans())
def test_monotone_in_load_single_workload(p, rate, extra, multi, free):
    nodes = ((30, 0.05, (0.2,), (1.0,)),) if not multi else \
        ((20, 0.05, (0.2,), (1.0,)), (20, 0.09, (0.3,), (0.5,)))
    dc = make_site(nodes=nodes, cop=p["cop"], ewif=p["ewif"], cf=p["cf"], tou=p["tou"],
                   premium=p["premium"], free=free, temperature=60.0, dew=50.0)
    cap = sum(n.count / n.exec_time[0] for n in dc.nodes)
    lo, hi = min(rate, cap), min(rate + extra, cap)
    a, b = evaluate_site(dc, [lo], 0.3, 0), evaluate_site(dc, [hi], 0.3, 0)
    assert b.cost >= a.cost and b.carbon >= a.carbon and b.water >= a.water


@given(st.lists(st.floats(0.0, 8.0), min_size=3, max_size=3), st.integers(0, 2),
       st.floats(0.0, 4.0))
def test_monotone_in_load_uniform_node_type(rates, j, extra):
    dc = make_site(nodes=((40, 0.05, (0.2, 0.25, 0.3), (1.0, 0.7, 1.3)),))
    bumped = list(rates)
    bumped[j] += extra
    a, b = evaluate_site(dc, rates, 0.0, 0), evaluate_site(dc, bumped, 0.0, 0)
    assert b.cost >= a.cost and b.carbon >= a.carbon and b.water >= a.water


@given(site_params, st.floats(0.0, 50.0))
def test_free_cooling_dominates_mechanical(p, p_it):
    mech = make_site(cop=p["cop"])
    free = make_site(cop=p["cop"], free=True, temperature=60.0, dew=50.0)
    pc_m, _ = cooling_power(p_it, mech, 0)
    pc_f, on = cooling_power(p_it, free, 0)
    assert on and pc_f <= pc_m
    assert water_site(p_it, free, on) == (0.0, 0.0)


@given(site_params, st.floats(0.5, 25.0), st.floats(0.0, 0.9), st.floats(0.01, 0.1))
def test_premium_tradeoff(p, rate, rho, step):
    dc = make_site(nodes=((30, 0.05, (0.2,), (1.0,)),), cop=p["cop"], ewif=max(p["ewif"], 0.1),
                   cf=p["cf"], tou=p["tou"], premium=p["premium"])
    a = evaluate_site(dc, [rate], rho, 0)
    b = evaluate_site(dc, [rate], min(rho + step, 1.0), 0)
    assert b.cost > a.cost
    assert b.carbon < a.carbon
    assert b.v_s < a.v_s
