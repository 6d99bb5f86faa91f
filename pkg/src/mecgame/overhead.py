"""Latency/energy overhead model, altruistic utility and the network potential.

The per-user functions here are plain scalar Python and follow the cost
formulas term by term; they are the reference the vectorised kernels are
tested against. Solvers use :func:`profile_overheads` and
:func:`utilities`, which go through :mod:`mecgame.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from mecgame import kernels
from mecgame.scenario import InterferenceGraph, Network, Scenario, channel_gain, cross_gain


class InfeasibleStrategy(ValueError):
    """A strategy violates the (lambda, p, f) feasibility rules."""


@dataclass(frozen=True)
class Strategy:
    lam: float
    power_w: float
    freq_hz: float

    def check(self, profile, user=None):
        """Raise :class:`InfeasibleStrategy` unless feasible for ``profile``."""
        who = "" if user is None else f"user {user}: "
        if not 0.0 <= self.lam <= 1.0:
            raise InfeasibleStrategy(f"{who}lambda={self.lam} outside [0, 1]")
        if self.lam == 0.0:
            if self.power_w != 0.0:
                raise InfeasibleStrategy(f"{who}local-only strategy must not transmit")
        elif not profile.p_min_w <= self.power_w <= profile.p_max_w:
            raise InfeasibleStrategy(
                f"{who}power {self.power_w} outside [{profile.p_min_w}, {profile.p_max_w}]")
        if not 0.0 <= self.freq_hz <= profile.f_max_hz:
            raise InfeasibleStrategy(f"{who}frequency {self.freq_hz} outside [0, f_max]")
        if self.lam < 1.0 and self.freq_hz <= 0.0:
            raise InfeasibleStrategy(f"{who}local work needs a positive CPU frequency")


class StrategyProfile:
    """Immutable vector of strategies, stored column-wise."""

    __slots__ = ("lam", "power", "freq")

    def __init__(self, lam, power, freq):
        lam = np.array(lam, dtype=float)
        power = np.array(power, dtype=float)
        freq = np.array(freq, dtype=float)
        if not lam.shape == power.shape == freq.shape or lam.ndim != 1:
            raise ValueError("lam, power and freq must be 1-D arrays of equal length")
        for a in (lam, power, freq):
            a.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "freq", freq)

    def __setattr__(self, name, value):
        raise AttributeError("StrategyProfile is immutable")

    @classmethod
    def from_strategies(cls, strategies: Iterable[Strategy]) -> "StrategyProfile":
        s = list(strategies)
        return cls([x.lam for x in s], [x.power_w for x in s], [x.freq_hz for x in s])

    def __len__(self):
        return len(self.lam)

    def __getitem__(self, n) -> Strategy:
        return Strategy(float(self.lam[n]), float(self.power[n]), float(self.freq[n]))

    def __iter__(self):
        return (self[n] for n in range(len(self)))

    def __eq__(self, other):
        return (isinstance(other, StrategyProfile)
                and np.array_equal(self.lam, other.lam)
                and np.array_equal(self.power, other.power)
                and np.array_equal(self.freq, other.freq))

    def __hash__(self):
        return hash((self.lam.tobytes(), self.power.tobytes(), self.freq.tobytes()))

    def __repr__(self):
        return f"StrategyProfile({[tuple(s.__dict__.values()) for s in self]})"

    def replace(self, n: int, s: Strategy) -> "StrategyProfile":
        lam, power, freq = self.lam.copy(), self.power.copy(), self.freq.copy()
        lam[n], power[n], freq[n] = s.lam, s.power_w, s.freq_hz
        return StrategyProfile(lam, power, freq)

    def check(self, scenario: Scenario):
        if len(self) != scenario.num_users:
            raise InfeasibleStrategy(
                f"profile has {len(self)} entries for {scenario.num_users} users")
        for n, s in enumerate(self):
            s.check(scenario.profiles[n], n)

    def to_dict(self) -> dict:
        return {"lam": self.lam.tolist(), "power": self.power.tolist(),
                "freq": self.freq.tolist()}


def all_offload_profile(scenario: Scenario) -> StrategyProfile:
    """Every user starts fully offloading at maximum power with the CPU idle."""
    n = scenario.num_users
    return StrategyProfile(np.ones(n), [p.p_max_w for p in scenario.profiles], np.zeros(n))


# --- scalar reference path ---------------------------------------------------

def interference_power(n: int, profile: StrategyProfile, graph: InterferenceGraph,
                       scenario: Scenario) -> float:
    """Received co-channel power at the BS serving ``n`` from transmitting in-neighbours."""
    total = 0.0
    for i in graph.in_neighbors[n]:
        if profile.lam[i] > 0.0:
            total += profile.power[i] * cross_gain(i, n, scenario)
    return total


def transmission_rate(n: int, profile: StrategyProfile, graph: InterferenceGraph,
                      scenario: Scenario) -> float:
    if not profile.lam[n] > 0.0:
        raise InfeasibleStrategy(f"user {n} does not transmit; rate undefined")
    sinr = (profile.power[n] * channel_gain(n, scenario.cell_of[n], scenario)
            / (scenario.noise_power_w + interference_power(n, profile, graph, scenario)))
    return scenario.channel_bandwidth_hz * math.log2(1.0 + sinr)


def local_overhead(n: int, freq_hz: float, scenario: Scenario, fraction: float = 1.0) -> float:
    """Weighted latency + energy of running ``fraction`` of the task on the device."""
    if fraction == 0.0:
        return 0.0
    if freq_hz <= 0.0:
        raise InfeasibleStrategy(f"user {n}: local work at zero CPU frequency")
    prof = scenario.profiles[n]
    w = fraction * scenario.tasks[n].workload
    return prof.alpha_t * w / freq_hz + prof.alpha_e * prof.kappa * w * freq_hz ** 2


def cloud_overhead(n: int, profile: StrategyProfile, graph: InterferenceGraph,
                   scenario: Scenario) -> float:
    """Upload latency/energy plus server latency/energy for the offloaded share."""
    lam = profile.lam[n]
    if not lam > 0.0:
        raise InfeasibleStrategy(f"user {n} offloads nothing")
    prof = scenario.profiles[n]
    task = scenario.tasks[n]
    rate = transmission_rate(n, profile, graph, scenario)
    t_trans = lam * task.input_bits / rate
    e_trans = profile.power[n] * t_trans
    t_server = lam * task.workload / scenario.cloud_frequency_hz
    e_server = lam * scenario.cloud_kappa * task.workload * scenario.cloud_frequency_hz ** 2
    return prof.alpha_t * (t_trans + t_server) + prof.alpha_e * (e_trans + e_server)


def total_overhead(n: int, profile: StrategyProfile, graph: InterferenceGraph,
                   scenario: Scenario) -> float:
    lam = float(profile.lam[n])
    if lam == 0.0:
        # local-only users neither transmit nor need a rate
        return local_overhead(n, profile.freq[n], scenario)
    value = cloud_overhead(n, profile, graph, scenario)
    if lam < 1.0:
        value += local_overhead(n, profile.freq[n], scenario, fraction=1.0 - lam)
    return value


def altruistic_utility(n: int, profile: StrategyProfile, graph: InterferenceGraph,
                       scenario: Scenario) -> float:
    """Own overhead plus the overheads of every user ``n`` can interfere with."""
    return total_overhead(n, profile, graph, scenario) + sum(
        total_overhead(i, profile, graph, scenario) for i in graph.out_neighbors[n])


def potential(profile: StrategyProfile, graph: InterferenceGraph, scenario: Scenario) -> float:
    return sum(total_overhead(n, profile, graph, scenario)
               for n in range(scenario.num_users))


# --- vectorised path -----------------------------------------------------------

def profile_overheads(net: Network, profile: StrategyProfile,
                      users: Sequence[int] | None = None) -> np.ndarray:
    return kernels.overheads(net, profile.lam, profile.power, profile.freq, users)


def utilities(net: Network, profile: StrategyProfile,
              overheads: np.ndarray | None = None) -> np.ndarray:
    """Altruistic utility of every user."""
    o = profile_overheads(net, profile) if overheads is None else overheads
    u = o.copy()
    for n in range(net.n):
        for i in net.out_of(n):
            u[n] += o[i]
    return u


def utility(net: Network, n: int, profile: StrategyProfile) -> float:
    users = (n,) + net.out_of(n)
    return float(profile_overheads(net, profile, users).sum())


def network_potential(net: Network, profile: StrategyProfile) -> float:
    return float(profile_overheads(net, profile).sum())


def sinr(net: Network, profile: StrategyProfile, n: int) -> float:
    """SINR of a transmitting user; 0 for local-only users."""
    if profile.lam[n] <= 0.0:
        return 0.0
    interf = sum(profile.power[i] * net.cross[n, i]
                 for i in net.in_of(n) if profile.lam[i] > 0.0)
    return profile.power[n] * net.own_gain[n] / (net.noise + interf)
