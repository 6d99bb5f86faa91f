"""Exact single-user best responses against a frozen opponent profile.

The offload decision is binary: the user compares its utility when fully
offloading at the best transmit power against its utility when computing
locally at the best CPU frequency, and keeps the cheaper branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mecgame import kernels
from mecgame.overhead import Strategy, StrategyProfile, utility
from mecgame.scenario import Network, Scenario


@dataclass(frozen=True)
class PowerSearchConfig:
    newton_max_iter: int = 60
    newton_tol: float = 1e-10        # on |d overhead / d p|
    multistart_count: int = 8
    fallback_grid: int = 64
    # floor for the CPU frequency of users with no latency weight
    f_min_positive: float = 1e6
    # relative gap under which the two offload branches count as tied
    tie_tol: float = 1e-12

    def __post_init__(self):
        if self.newton_max_iter < 1 or self.fallback_grid < 2:
            raise ValueError("newton_max_iter >= 1 and fallback_grid >= 2 required")
        if self.multistart_count < 2:
            raise ValueError("multistart_count must be >= 2")
        if not (self.newton_tol > 0 and self.f_min_positive > 0 and self.tie_tol >= 0):
            raise ValueError("tolerances and f_min_positive must be positive")


DEFAULT_SEARCH = PowerSearchConfig()


@dataclass(frozen=True)
class BestResponse:
    strategy: Strategy
    u_one: float     # utility of the offloading branch
    u_zero: float    # utility of the local branch

    @property
    def utility(self) -> float:
        return self.u_one if self.strategy.lam == 1.0 else self.u_zero


def best_cpu_frequency(n: int, scenario: Scenario,
                       f_min_positive: float = DEFAULT_SEARCH.f_min_positive) -> float:
    """Minimiser of the local overhead over the CPU frequency, clamped to f_max."""
    prof = scenario.profiles[n]
    at, ae = prof.alpha_t, prof.alpha_e
    if at == 0.0 and ae == 0.0:
        raise ValueError(f"user {n} has both weights zero")
    if ae == 0.0:
        return prof.f_max_hz
    if at == 0.0:
        return min(f_min_positive, prof.f_max_hz)
    return min((at / (2.0 * ae * prof.kappa)) ** (1.0 / 3.0), prof.f_max_hz)


def transmission_params(net: Network, n: int, profile: StrategyProfile) -> tuple:
    """Coefficients of user ``n``'s power-dependent overhead, opponents frozen.

    Returns ``(a, alpha_t, alpha_e, G_n, noise + interference, b, c, g, d0)``:
    the own upload term ``a (alpha_t + alpha_e p) / ln(1 + p G_n / gamma')``
    and, for every transmitting user ``i`` that ``n`` harms,
    ``b_i / ln(1 + c_i / (d0_i + g_i p))``.
    """
    lam, power = profile.lam, profile.power
    ln2_w = math.log(2.0) / net.bandwidth
    gamma_p = net.noise
    for i in net.in_of(n):
        if lam[i] > 0.0:
            gamma_p += power[i] * net.cross[n, i]
    b, c, g, d0 = [], [], [], []
    for i in net.out_of(n):
        if not lam[i] > 0.0:
            continue
        b.append(lam[i] * net.bits[i] * (net.alpha_t[i] + net.alpha_e[i] * power[i]) * ln2_w)
        c.append(power[i] * net.own_gain[i])
        g.append(net.cross[i, n])
        rest = net.noise
        for j in net.in_of(i):
            if j != n and lam[j] > 0.0:
                rest += power[j] * net.cross[i, j]
        d0.append(rest)
    return (net.bits[n] * ln2_w, float(net.alpha_t[n]), float(net.alpha_e[n]),
            float(net.own_gain[n]), gamma_p,
            np.array(b), np.array(c), np.array(g), np.array(d0))


def transmission_overhead(n: int, p: float, profile: StrategyProfile, net: Network) -> float:
    """Power-dependent utility of ``n`` when it offloads everything at power ``p``."""
    return kernels.transmission_terms(p, transmission_params(net, n, profile))[0]


def power_candidates(n: int, profile: StrategyProfile, net: Network,
                     cfg: PowerSearchConfig = DEFAULT_SEARCH):
    """``(best power, its transmission overhead, interior stationary points)``."""
    params = transmission_params(net, n, profile)
    return kernels.power_search(params, float(net.p_min[n]), float(net.p_max[n]), cfg)


def best_transmit_power(n: int, profile: StrategyProfile, net: Network,
                        cfg: PowerSearchConfig = DEFAULT_SEARCH) -> float:
    return float(power_candidates(n, profile, net, cfg)[0])


def best_response(n: int, profile: StrategyProfile, net: Network,
                  cfg: PowerSearchConfig = DEFAULT_SEARCH) -> BestResponse:
    p_bar = best_transmit_power(n, profile, net, cfg)
    f_star = best_cpu_frequency(n, net.scenario, cfg.f_min_positive)
    offload = Strategy(1.0, p_bar, 0.0)
    local = Strategy(0.0, 0.0, f_star)
    u_one = utility(net, n, profile.replace(n, offload))
    u_zero = utility(net, n, profile.replace(n, local))
    # ties go local: no transmit energy spent when indifferent
    if u_one < u_zero - cfg.tie_tol * max(abs(u_one), abs(u_zero)):
        return BestResponse(offload, u_one, u_zero)
    return BestResponse(local, u_one, u_zero)
