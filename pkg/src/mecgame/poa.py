"""Brute-force centralized optimum, price of anarchy and its analytic bound."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Literal

import numpy as np

from mecgame import kernels
from mecgame.best_response import DEFAULT_SEARCH, PowerSearchConfig, best_cpu_frequency
from mecgame.engine import is_nash, run_dynamics
from mecgame.overhead import StrategyProfile, profile_overheads, sinr, utilities
from mecgame.scenario import Network

Objective = Literal["potential", "utility"]
EXHAUSTIVE_LIMIT = 6


class TooManyUsers(ValueError):
    pass


@dataclass
class PoaReport:
    ne_total: float
    opt_total: float
    poa: float
    bound_upper: float
    grid_spec: dict
    ne_potential: float = math.nan
    opt_potential: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def objective_weights(net: Network, objective: Objective) -> np.ndarray:
    """Per-user weights w such that the objective is sum_i w_i O_i.

    Summing the altruistic utilities counts user i once for itself and once
    for each user that can interfere with it.
    """
    if objective == "potential":
        return np.ones(net.n)
    if objective == "utility":
        return 1.0 + net.in_degree().astype(float)
    raise ValueError(f"unknown objective {objective!r}")


def candidate_tables(net: Network, power_grid_points: int,
                     ne_hint: StrategyProfile | None = None,
                     cfg: PowerSearchConfig = DEFAULT_SEARCH):
    """Per-user candidate strategies: local at f*, or offload on a power grid.

    Candidates are in canonical order (local first, powers ascending), so the
    search result does not depend on how the grid was put together.
    """
    if power_grid_points < 1:
        raise ValueError("power_grid_points must be >= 1")
    rows = []
    for n in range(net.n):
        powers = set(np.linspace(net.p_min[n], net.p_max[n], power_grid_points).tolist()
                     if power_grid_points > 1 else [float(net.p_max[n])])
        if ne_hint is not None and ne_hint.lam[n] > 0:
            powers.add(float(ne_hint.power[n]))
        f_star = best_cpu_frequency(n, net.scenario, cfg.f_min_positive)
        rows.append([(0.0, 0.0, f_star)] + [(1.0, p, 0.0) for p in sorted(powers)])
    width = max(len(r) for r in rows)
    lam = np.zeros((net.n, width))
    pw = np.zeros((net.n, width))
    fr = np.zeros((net.n, width))
    for n, r in enumerate(rows):
        for k, (a, b, c) in enumerate(r):
            lam[n, k], pw[n, k], fr[n, k] = a, b, c
    counts = np.array([len(r) for r in rows], dtype=np.int64)
    return lam, pw, fr, counts


def _profile_from_index(idx, lam, pw, fr) -> StrategyProfile:
    cols = np.arange(len(idx))
    return StrategyProfile(lam[cols, idx], pw[cols, idx], fr[cols, idx])


def centralized_optimum(net: Network, power_grid_points: int = 16,
                        ne_hint: StrategyProfile | None = None,
                        objective: Objective = "potential",
                        refine: bool = False,
                        max_users: int = EXHAUSTIVE_LIMIT,
                        cfg: PowerSearchConfig = DEFAULT_SEARCH) -> StrategyProfile:
    """Exact minimiser of the network objective over the candidate product.

    With ``refine`` (potential objective only) the grid winner is polished by
    sequential best responses, which descend the potential exactly and so
    can only lower it while removing the power-grid resolution error.
    """
    if net.n > max_users:
        raise TooManyUsers(
            f"{net.n} users exceed the exhaustive limit of {max_users}; "
            "lower num_users or raise the limit explicitly")
    lam, pw, fr, counts = candidate_tables(net, power_grid_points, ne_hint, cfg)
    idx, _ = kernels.enumerate_argmin(net, lam, pw, fr, counts,
                                      objective_weights(net, objective))
    best = _profile_from_index(idx, lam, pw, fr)
    if refine:
        if objective != "potential":
            raise ValueError("refinement only descends the potential objective")
        trace = run_dynamics(net, best, cfg=cfg)
        if trace.rounds[-1].potential <= trace.rounds[0].potential:
            best = trace.final
    return best


def network_total(net: Network, profile: StrategyProfile) -> float:
    """Sum of altruistic utilities over all users."""
    return float(utilities(net, profile).sum())


def price_of_anarchy(ne_profile: StrategyProfile, opt_profile: StrategyProfile,
                     net: Network) -> float:
    return network_total(net, ne_profile) / network_total(net, opt_profile)


def _cloud_overhead_at_rate(net: Network, n: int, p: float, interference: float) -> float:
    rate = net.bandwidth * math.log2(1.0 + p * net.own_gain[n] / (net.noise + interference))
    w = net.work[n]
    return ((net.alpha_t[n] + net.alpha_e[n] * p) * net.bits[n] / rate
            + net.alpha_t[n] * w / net.f_cloud
            + net.alpha_e[n] * net.kappa_cloud * w * net.f_cloud ** 2)


def _local_overhead(net: Network, n: int, f: float) -> float:
    w = net.work[n]
    return net.alpha_t[n] * w / f + net.alpha_e[n] * net.kappa[n] * w * f * f


def _min_clean_cloud_overhead(net: Network, n: int, samples: int = 2001) -> float:
    """Interference-free cloud overhead minimised over the power box."""
    ps = np.linspace(net.p_min[n], net.p_max[n], samples)
    vals = [_cloud_overhead_at_rate(net, n, float(p), 0.0) for p in ps]
    k = int(np.argmin(vals))
    lo, hi = ps[max(k - 1, 0)], ps[min(k + 1, samples - 1)]
    # golden-section polish inside the winning grid cell
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    for _ in range(80):
        c, d = b - g * (b - a), a + g * (b - a)
        if _cloud_overhead_at_rate(net, n, c, 0.0) < _cloud_overhead_at_rate(net, n, d, 0.0):
            b = d
        else:
            a = c
    return min(vals[k], _cloud_overhead_at_rate(net, n, 0.5 * (a + b), 0.0))


def _extreme_terms(net: Network, profile: StrategyProfile, worst: bool,
                   p_prime_max: float | None, cfg: PowerSearchConfig) -> float:
    lam, power = profile.lam, profile.power
    o = profile_overheads(net, profile)
    total = 0.0
    for n in range(net.n):
        harmed = sum(o[i] for i in net.out_of(n))
        if lam[n] > 0 and worst:
            ins = net.in_of(n)
            pmax_in = (max((power[j] for j in ins), default=0.0)
                       if p_prime_max is None else p_prime_max)
            interf = sum(pmax_in * net.cross[n, j] for j in ins if lam[j] > 0)
            own = _cloud_overhead_at_rate(net, n, float(power[n]), interf)
        elif lam[n] > 0:
            own = _min_clean_cloud_overhead(net, n)
        elif worst:
            own = _local_overhead(net, n, float(net.f_max[n]))
        else:
            own = _local_overhead(
                net, n, best_cpu_frequency(n, net.scenario, cfg.f_min_positive))
        total += own + harmed
    return total


def poa_upper_bound(net: Network, profile_at_ne: StrategyProfile,
                    opt_profile: StrategyProfile | None = None,
                    p_prime_max: float | None = None,
                    cfg: PowerSearchConfig = DEFAULT_SEARCH) -> float:
    """Worst-case NE total over best-case centralized total.

    Numerator, per NE offloader: upload rate with every transmitting
    in-neighbour at the largest in-neighbour power (``p_prime_max``
    overrides it); per NE local user: f_max. Denominator, per user of the
    centralized profile: interference-free upload at the best power, or the
    local overhead at f*. Each side adds its own profile's overheads of the
    harmed neighbours. Without ``opt_profile`` the NE profile stands in for
    the centralized one.
    """
    num = _extreme_terms(net, profile_at_ne, True, p_prime_max, cfg)
    den = _extreme_terms(net, profile_at_ne if opt_profile is None else opt_profile,
                         False, None, cfg)
    return num / den


def poa_report(net: Network, ne_profile: StrategyProfile, power_grid_points: int = 16,
               cfg: PowerSearchConfig = DEFAULT_SEARCH) -> tuple[PoaReport, StrategyProfile]:
    """PoA against the utility-sum optimum over an NE-augmented grid."""
    opt = centralized_optimum(net, power_grid_points, ne_hint=ne_profile,
                              objective="utility", cfg=cfg)
    ne_total = network_total(net, ne_profile)
    opt_total = network_total(net, opt)
    report = PoaReport(
        ne_total=ne_total, opt_total=opt_total, poa=ne_total / opt_total,
        bound_upper=poa_upper_bound(net, ne_profile, opt, cfg=cfg),
        grid_spec={"power_grid_points": power_grid_points, "ne_augmented": True,
                   "objective": "utility"},
        ne_potential=float(profile_overheads(net, ne_profile).sum()),
        opt_potential=float(profile_overheads(net, opt).sum()))
    return report, opt


@dataclass
class OptimalityReport:
    ne_potential: float
    opt_potential: float
    ne_is_global_min: bool
    opt_is_nash: bool
    ne_pareto_efficient: bool
    pareto_dominators: int = 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _all_profile_utilities(net: Network, lam, pw, fr, counts):
    """Utility vectors of every profile in the candidate product."""
    grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    cols = np.arange(net.n)
    L, P, F = lam[cols, idx], pw[cols, idx], fr[cols, idx]
    tx = np.where(L > 0, P, 0.0)
    interf = tx @ net.cross.T
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = net.bandwidth * np.log2(1.0 + P * net.own_gain / (net.noise + interf))
        t_tx = np.where(L > 0, L * net.bits / rate, 0.0)
        loc = (1.0 - L) * net.work
        lt = np.where(L < 1, loc / F, 0.0)
        le = np.where(L < 1, net.kappa * loc * F * F, 0.0)
    o = (net.alpha_t * (t_tx + L * net.work / net.f_cloud + lt)
         + net.alpha_e * (P * t_tx + L * net.work * net.kappa_cloud * net.f_cloud ** 2 + le))
    adj = np.zeros((net.n, net.n))
    for n in range(net.n):
        for i in net.out_of(n):
            adj[n, i] = 1.0
    return o + o @ adj.T


def check_global_optimality(ne_profile: StrategyProfile, opt_profile: StrategyProfile,
                            net: Network, tol: float = 1e-9, power_grid_points: int = 16,
                            cfg: PowerSearchConfig = DEFAULT_SEARCH) -> OptimalityReport:
    """Compare an NE against the centralized optimum; report, never raise."""
    ne_phi = float(profile_overheads(net, ne_profile).sum())
    opt_phi = float(profile_overheads(net, opt_profile).sum())
    lam, pw, fr, counts = candidate_tables(net, power_grid_points, ne_profile, cfg)
    u_all = _all_profile_utilities(net, lam, pw, fr, counts)
    u_ne = utilities(net, ne_profile)
    scale = tol * np.maximum(1.0, np.abs(u_ne))
    weakly = np.all(u_all <= u_ne + scale, axis=1)
    strictly = np.any(u_all < u_ne - scale, axis=1)
    dominators = int(np.count_nonzero(weakly & strictly))
    report = OptimalityReport(
        ne_potential=ne_phi, opt_potential=opt_phi,
        ne_is_global_min=ne_phi <= opt_phi + tol * max(1.0, abs(opt_phi)),
        opt_is_nash=is_nash(net, opt_profile, cfg, tol),
        ne_pareto_efficient=dominators == 0, pareto_dominators=dominators)
    if not report.ne_is_global_min:
        report.notes.append(
            f"NE potential {ne_phi:.12g} exceeds the enumerated optimum {opt_phi:.12g}")
    if dominators:
        report.notes.append(f"{dominators} enumerated profiles Pareto-dominate the NE")
    return report


def interference_sweep(net: Network, multipliers, power_grid_points: int = 16,
                       max_rounds: int = 500, eps_power: float = 1e-6,
                       cfg: PowerSearchConfig = DEFAULT_SEARCH) -> list[dict]:
    """PoA and its bound as every cross-cell gain is scaled up."""
    rows = []
    for m in multipliers:
        scaled = net.with_interference_scale(float(m))
        trace = run_dynamics(scaled, max_rounds=max_rounds, eps_power=eps_power, cfg=cfg)
        ne = trace.final
        report, _ = poa_report(scaled, ne, power_grid_points, cfg)
        total_sinr = sum(sinr(scaled, ne, n) for n in range(scaled.n))
        rows.append({
            "multiplier": float(m),
            "inv_sinr": (1.0 / total_sinr) if total_sinr > 0 else math.inf,
            "poa": report.poa,
            "bound_upper": report.bound_upper,
            "ne_total": report.ne_total,
            "opt_total": report.opt_total,
            "offloaders": int(np.count_nonzero(ne.lam > 0)),
            "converged": trace.converged,
        })
    return rows
