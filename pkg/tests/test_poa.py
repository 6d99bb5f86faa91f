import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mecgame.engine import is_nash, run_dynamics
from mecgame.overhead import (StrategyProfile, network_potential, potential, utilities)
from mecgame.poa import (TooManyUsers, candidate_tables, centralized_optimum,
                         check_global_optimality, interference_sweep, network_total,
                         objective_weights, poa_report, poa_upper_bound, price_of_anarchy)
from mecgame.scenario import GeneratorConfig, Network, isolated_scenario, make_network

from conftest import mixed_network


def small_net(seed, n=4, **kw):
    return make_network(GeneratorConfig(num_bs=4, num_users=n, **kw), seed)


def brute_force(net, points, objective):
    """Plain itertools enumeration over the same candidate tables."""
    lam, pw, fr, counts = candidate_tables(net, points)
    w = objective_weights(net, objective)
    best, best_idx = np.inf, None
    for idx in itertools.product(*[range(c) for c in counts]):
        cols = np.arange(net.n)
        prof = StrategyProfile(lam[cols, idx], pw[cols, idx], fr[cols, idx])
        val = potential(prof, net.graph, net.scenario) if objective == "potential" \
            else float(utilities(net, prof).sum())
        if val < best * (1 - 1e-12):
            best, best_idx = val, prof
    return best_idx, best, w


@pytest.mark.parametrize("objective", ["potential", "utility"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_enumeration_matches_itertools(backend, seed, objective):
    net = small_net(seed, n=3)
    ref, ref_val, _ = brute_force(net, 5, objective)
    opt = centralized_optimum(net, 5, objective=objective)
    val = network_potential(net, opt) if objective == "potential" else network_total(net, opt)
    assert val == pytest.approx(ref_val, rel=1e-12)


def test_optimum_refuses_large_instances():
    with pytest.raises(TooManyUsers):
        centralized_optimum(small_net(0, n=7))


def test_candidate_order_is_canonical():
    net = small_net(3, n=3)
    trace = run_dynamics(net)
    a = candidate_tables(net, 6, trace.final)
    b = candidate_tables(net, 6, trace.final)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    lam, pw, _, counts = a
    for n in range(net.n):
        assert lam[n, 0] == 0.0
        assert np.all(np.diff(pw[n, 1:counts[n]]) > 0)


def test_two_symmetric_users():
    sc = isolated_scenario([(-40.0, 0.0), (40.0, 0.0)], [(-50.0, 0.0), (50.0, 0.0)],
                           [0, 1], num_channels=1)
    net = Network.build(sc)
    opt = centralized_optimum(net, 12)
    ref, ref_val, _ = brute_force(net, 12, "potential")
    assert network_potential(net, opt) == pytest.approx(ref_val, rel=1e-12)
    symmetric = opt.lam[0] == opt.lam[1] and opt.power[0] == opt.power[1]
    split = sorted(opt.lam.tolist()) == [0.0, 1.0]
    assert symmetric or split


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000))
def test_poa_at_least_one_and_below_bound(seed):
    net = small_net(seed)
    ne = run_dynamics(net).final
    report, opt = poa_report(net, ne, 8)
    assert report.poa >= 1 - 1e-9
    assert report.poa <= report.bound_upper * (1 + 1e-9)
    assert report.opt_total <= report.ne_total * (1 + 1e-12)
    assert price_of_anarchy(ne, opt, net) == pytest.approx(report.poa)


def test_bound_grows_with_assumed_interferer_power():
    net = small_net(5)
    ne = run_dynamics(net).final
    values = [poa_upper_bound(net, ne, p_prime_max=p) for p in np.linspace(0.001, 0.15, 12)]
    assert np.all(np.diff(values) >= -1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_potential_minimiser_is_nash(seed):
    net = small_net(seed)
    ne = run_dynamics(net).final
    opt = centralized_optimum(net, 16, ne_hint=ne)
    report = check_global_optimality(ne, opt, net)
    assert report.opt_is_nash
    assert report.opt_potential <= report.ne_potential * (1 + 1e-9)


def test_refined_optimum_not_worse():
    net = mixed_network(4, 8, num_bs=4, alpha_t=(1.0,))
    raw = centralized_optimum(net, 6)
    refined = centralized_optimum(net, 6, refine=True)
    assert network_potential(net, refined) <= network_potential(net, raw) + 1e-12
    with pytest.raises(ValueError):
        centralized_optimum(net, 6, objective="utility", refine=True)


def test_optimality_report_flags_bad_profile():
    net = small_net(2)
    ne = run_dynamics(net).final
    opt = centralized_optimum(net, 16, ne_hint=ne)
    bad = StrategyProfile(np.ones(4), np.full(4, 1e-3), np.zeros(4))
    report = check_global_optimality(bad, opt, net)
    assert not report.ne_is_global_min and report.notes


def test_interference_sweep_rows():
    net = small_net(4)
    rows = interference_sweep(net, [0.0, 1.0, 4.0], power_grid_points=6)
    assert [r["multiplier"] for r in rows] == [0.0, 1.0, 4.0]
    for r in rows:
        assert r["poa"] >= 1 - 1e-9 and r["poa"] <= r["bound_upper"] * (1 + 1e-9)
    assert rows[0]["poa"] == pytest.approx(1.0)
    assert rows[0]["inv_sinr"] < rows[-1]["inv_sinr"]
