"""World construction: geometry, channel plan, path-loss gains, interference graph.

Everything here is immutable once built. :class:`Network` is the flattened,
array-backed view of a (scenario, channel plan, interference graph) triple that
the numerical kernels consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, asdict
from typing import Sequence

import numpy as np


class ScenarioError(ValueError):
    """Invalid scenario or generator configuration."""


class CapacityError(ScenarioError):
    """A cell holds more users than there are orthogonal subchannels."""


@dataclass(frozen=True)
class TaskSpec:
    input_bits: float
    cycles_per_bit: float

    def __post_init__(self):
        if not (self.input_bits > 0 and self.cycles_per_bit > 0):
            raise ScenarioError(f"task sizes must be positive, got {self}")

    @property
    def workload(self) -> float:
        """Total CPU cycles L_n * C_n."""
        return self.input_bits * self.cycles_per_bit


@dataclass(frozen=True)
class UserProfile:
    kappa: float
    f_max_hz: float
    p_min_w: float
    p_max_w: float
    alpha_t: float
    alpha_e: float
    tx_range_m: float

    def __post_init__(self):
        if not (0.0 <= self.alpha_t <= 1.0 and 0.0 <= self.alpha_e <= 1.0):
            raise ScenarioError(f"weights must lie in [0, 1]: {self}")
        if abs(self.alpha_t + self.alpha_e - 1.0) > 1e-12:
            raise ScenarioError(f"alpha_t + alpha_e must equal 1: {self}")
        if not 0.0 < self.p_min_w <= self.p_max_w:
            raise ScenarioError(f"need 0 < p_min <= p_max: {self}")
        if not (self.f_max_hz > 0 and self.kappa > 0 and self.tx_range_m > 0):
            raise ScenarioError(f"kappa, f_max, tx_range must be positive: {self}")


@dataclass(frozen=True, eq=False)
class Scenario:
    bs_positions: np.ndarray      # (L, 2) meters
    user_positions: np.ndarray    # (N, 2) meters
    cell_of: tuple[int, ...]
    num_channels: int
    channel_bandwidth_hz: float
    noise_power_w: float
    path_loss_exponent: float
    cloud_frequency_hz: float
    cloud_kappa: float
    tasks: tuple[TaskSpec, ...]
    profiles: tuple[UserProfile, ...]
    # multiplies every cross-cell gain; 1.0 is the physical model
    interference_scale: float = 1.0

    def __post_init__(self):
        bs = np.array(self.bs_positions, dtype=float).reshape(-1, 2)
        us = np.array(self.user_positions, dtype=float).reshape(-1, 2)
        bs.flags.writeable = False
        us.flags.writeable = False
        object.__setattr__(self, "bs_positions", bs)
        object.__setattr__(self, "user_positions", us)
        object.__setattr__(self, "cell_of", tuple(int(c) for c in self.cell_of))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "profiles", tuple(self.profiles))
        self.validate()

    @property
    def num_users(self) -> int:
        return len(self.user_positions)

    @property
    def num_cells(self) -> int:
        return len(self.bs_positions)

    def validate(self):
        n, l = self.num_users, self.num_cells
        if n < 1 or l < 1 or self.num_channels < 1:
            raise ScenarioError(f"need N, L, K >= 1 (got N={n}, L={l}, K={self.num_channels})")
        if len(self.cell_of) != n or len(self.tasks) != n or len(self.profiles) != n:
            raise ScenarioError("cell_of, tasks and profiles must have one entry per user")
        for u, c in enumerate(self.cell_of):
            if not 0 <= c < l:
                raise ScenarioError(f"user {u} attached to unknown BS {c}")
        for name in ("channel_bandwidth_hz", "noise_power_w", "path_loss_exponent",
                     "cloud_frequency_hz", "cloud_kappa"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        if self.interference_scale < 0:
            raise ScenarioError("interference_scale must be non-negative")

    def members(self, cell: int) -> list[int]:
        return [u for u, c in enumerate(self.cell_of) if c == cell]

    def replace(self, **changes) -> "Scenario":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return Scenario(**kw)

    def to_dict(self) -> dict:
        return {
            "bs_positions": self.bs_positions.tolist(),
            "user_positions": self.user_positions.tolist(),
            "cell_of": list(self.cell_of),
            "num_channels": self.num_channels,
            "channel_bandwidth_hz": self.channel_bandwidth_hz,
            "noise_power_w": self.noise_power_w,
            "path_loss_exponent": self.path_loss_exponent,
            "cloud_frequency_hz": self.cloud_frequency_hz,
            "cloud_kappa": self.cloud_kappa,
            "interference_scale": self.interference_scale,
            "tasks": [asdict(t) for t in self.tasks],
            "profiles": [asdict(p) for p in self.profiles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        d["tasks"] = tuple(TaskSpec(**t) for t in d["tasks"])
        d["profiles"] = tuple(UserProfile(**p) for p in d["profiles"])
        return cls(**d)


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for :func:`generate_scenario`. Defaults follow the 5-cell setup."""

    num_bs: int = 5
    num_users: int = 20
    radius_m: float = 50.0
    bs_spacing_m: float = 100.0
    num_channels: int | None = None      # None: the largest cell population
    channel_bandwidth_hz: float = 5e6
    noise_power_w: float = 1e-13
    path_loss_exponent: float = 4.0
    input_bits: float = 5e6
    workload_cycles: float = 1e9
    kappa: float = 1e-27
    f_max_hz: float = 1e9
    p_min_w: float = 1e-3
    p_max_w: float = 0.15
    # scalar, or a list of choices drawn per user
    alpha_t: float | tuple[float, ...] = 1.0
    tx_range_m: float = 1e6
    cloud_frequency_hz: float = 1e10
    cloud_kappa: float = 1e-27
    interference_scale: float = 1.0
    min_bs_distance_m: float = 1.0

    def __post_init__(self):
        if isinstance(self.alpha_t, list):
            object.__setattr__(self, "alpha_t", tuple(self.alpha_t))
        if self.num_bs < 1:
            raise ScenarioError("num_bs must be >= 1")
        if self.num_users < 1:
            raise ScenarioError("num_users must be >= 1")
        if not self.radius_m > 0:
            raise ScenarioError("radius_m must be positive")
        if self.bs_spacing_m < 0:
            raise ScenarioError("bs_spacing_m must be non-negative")
        if not 0 <= self.min_bs_distance_m < self.radius_m:
            raise ScenarioError("min_bs_distance_m must lie in [0, radius_m)")
        if self.num_channels is not None and self.num_channels < 1:
            raise ScenarioError("num_channels must be >= 1")
        for name in ("input_bits", "workload_cycles", "channel_bandwidth_hz",
                     "noise_power_w", "path_loss_exponent", "cloud_frequency_hz",
                     "cloud_kappa", "kappa", "f_max_hz", "p_max_w", "p_min_w",
                     "tx_range_m"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        if self.p_min_w > self.p_max_w:
            raise ScenarioError("p_min_w must not exceed p_max_w")
        for a in np.atleast_1d(self.alpha_t):
            if not 0.0 <= a <= 1.0:
                raise ScenarioError(f"alpha_t choices must lie in [0, 1], got {a}")

    def replace(self, **changes) -> "GeneratorConfig":
        kw = asdict(self)
        kw.update(changes)
        return GeneratorConfig(**kw)


def bs_grid(num_bs: int, spacing: float) -> np.ndarray:
    cols = math.ceil(math.sqrt(num_bs))
    idx = np.arange(num_bs)
    return np.column_stack([(idx % cols) * spacing, (idx // cols) * spacing]).astype(float)


def generate_scenario(config: GeneratorConfig, seed: int) -> Scenario:
    """Drop users uniformly in their BS's coverage disc.

    User ``u`` is attached to BS ``u % num_bs`` so cells stay balanced.
    """
    rng = np.random.default_rng(seed)
    bs = bs_grid(config.num_bs, config.bs_spacing_m)
    cell_of = np.arange(config.num_users) % config.num_bs
    # area-uniform radius, kept off the BS itself so gains stay finite
    r_lo = config.min_bs_distance_m / config.radius_m
    r = config.radius_m * np.sqrt(rng.uniform(r_lo**2, 1.0, config.num_users))
    theta = rng.uniform(0.0, 2.0 * np.pi, config.num_users)
    users = bs[cell_of] + np.column_stack([r * np.cos(theta), r * np.sin(theta)])

    choices = np.atleast_1d(np.asarray(config.alpha_t, dtype=float))
    if choices.size == 1:
        alphas = np.full(config.num_users, choices[0])
    else:
        alphas = rng.choice(choices, size=config.num_users)

    k = config.num_channels
    if k is None:
        k = int(np.bincount(cell_of, minlength=config.num_bs).max())
    task = TaskSpec(config.input_bits, config.workload_cycles / config.input_bits)
    profiles = tuple(
        UserProfile(kappa=config.kappa, f_max_hz=config.f_max_hz,
                    p_min_w=config.p_min_w, p_max_w=config.p_max_w,
                    alpha_t=float(a), alpha_e=float(1.0 - a),
                    tx_range_m=config.tx_range_m)
        for a in alphas)
    return Scenario(
        bs_positions=bs, user_positions=users, cell_of=tuple(cell_of.tolist()),
        num_channels=k, channel_bandwidth_hz=config.channel_bandwidth_hz,
        noise_power_w=config.noise_power_w,
        path_loss_exponent=config.path_loss_exponent,
        cloud_frequency_hz=config.cloud_frequency_hz, cloud_kappa=config.cloud_kappa,
        tasks=(task,) * config.num_users, profiles=profiles,
        interference_scale=config.interference_scale)


def channel_gain(user: int, bs: int, scenario: Scenario) -> float:
    """Path-loss gain d^-gamma between a user and a BS."""
    d = float(np.hypot(*(scenario.user_positions[user] - scenario.bs_positions[bs])))
    if d <= 0.0:
        raise ScenarioError(f"user {user} coincides with BS {bs}; gain undefined")
    return d ** -scenario.path_loss_exponent


def cross_gain(interferer: int, victim: int, scenario: Scenario) -> float:
    """Gain from ``interferer`` toward the serving BS of ``victim``."""
    return scenario.interference_scale * channel_gain(
        interferer, scenario.cell_of[victim], scenario)


@dataclass(frozen=True)
class ChannelPlan:
    channel_of: tuple[int, ...]

    def validate(self, scenario: Scenario):
        if len(self.channel_of) != scenario.num_users:
            raise ScenarioError("channel plan length differs from user count")
        seen = set()
        for u, (c, k) in enumerate(zip(scenario.cell_of, self.channel_of)):
            if not 0 <= k < scenario.num_channels:
                raise ScenarioError(f"user {u} on channel {k} outside [0, K)")
            if (c, k) in seen:
                raise ScenarioError(f"channel {k} reused inside cell {c}")
            seen.add((c, k))


def assign_channels(scenario: Scenario, seed: int | None = None) -> ChannelPlan:
    """Orthogonal within each cell, full reuse across cells.

    Users take channels in index order; with a seed each cell uses a random
    permutation of the channel labels instead.
    """
    rng = None if seed is None else np.random.default_rng(seed)
    channel_of = [0] * scenario.num_users
    for cell in range(scenario.num_cells):
        members = scenario.members(cell)
        if len(members) > scenario.num_channels:
            raise CapacityError(
                f"cell {cell} has {len(members)} users but only "
                f"{scenario.num_channels} subchannels")
        labels = np.arange(scenario.num_channels)
        if rng is not None:
            labels = rng.permutation(labels)
        for j, u in enumerate(members):
            channel_of[u] = int(labels[j])
    return ChannelPlan(tuple(channel_of))


@dataclass(frozen=True)
class InterferenceGraph:
    in_neighbors: tuple[tuple[int, ...], ...]
    out_neighbors: tuple[tuple[int, ...], ...]


def build_interference_graph(scenario: Scenario, plan: ChannelPlan) -> InterferenceGraph:
    """i hurts n iff other cell, same channel, and R_i reaches n."""
    plan.validate(scenario)
    n_users = scenario.num_users
    pos = scenario.user_positions
    ranges = np.array([p.tx_range_m for p in scenario.profiles])
    ins: list[list[int]] = [[] for _ in range(n_users)]
    outs: list[list[int]] = [[] for _ in range(n_users)]
    for n in range(n_users):
        for i in range(n_users):
            if i == n or scenario.cell_of[i] == scenario.cell_of[n]:
                continue
            if plan.channel_of[i] != plan.channel_of[n]:
                continue
            if ranges[i] >= np.hypot(*(pos[i] - pos[n])):
                ins[n].append(i)
                outs[i].append(n)
    return InterferenceGraph(tuple(map(tuple, ins)), tuple(map(tuple, outs)))


@dataclass(frozen=True, eq=False)
class Network:
    """Array view of a game instance, shared by every solver.

    ``in_gain[k]`` is the gain from ``in_idx[k]`` toward the BS of the user
    owning that CSR row, already multiplied by ``interference_scale``.
    """

    scenario: Scenario
    plan: ChannelPlan
    graph: InterferenceGraph
    own_gain: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)
    work: np.ndarray = field(repr=False)
    alpha_t: np.ndarray = field(repr=False)
    alpha_e: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    f_max: np.ndarray = field(repr=False)
    p_min: np.ndarray = field(repr=False)
    p_max: np.ndarray = field(repr=False)
    in_ptr: np.ndarray = field(repr=False)
    in_idx: np.ndarray = field(repr=False)
    in_gain: np.ndarray = field(repr=False)
    cross: np.ndarray = field(repr=False)   # dense (N, N): cross[n, i] = in_gain of i at n

    @property
    def n(self) -> int:
        return self.scenario.num_users

    @property
    def bandwidth(self) -> float:
        return self.scenario.channel_bandwidth_hz

    @property
    def noise(self) -> float:
        return self.scenario.noise_power_w

    @property
    def f_cloud(self) -> float:
        return self.scenario.cloud_frequency_hz

    @property
    def kappa_cloud(self) -> float:
        return self.scenario.cloud_kappa

    def in_of(self, n: int) -> tuple[int, ...]:
        return self.graph.in_neighbors[n]

    def out_of(self, n: int) -> tuple[int, ...]:
        return self.graph.out_neighbors[n]

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    @classmethod
    def build(cls, scenario: Scenario, plan: ChannelPlan | None = None,
              graph: InterferenceGraph | None = None) -> "Network":
        if plan is None:
            plan = assign_channels(scenario)
        if graph is None:
            graph = build_interference_graph(scenario, plan)
        n = scenario.num_users
        own = np.array([channel_gain(u, scenario.cell_of[u], scenario) for u in range(n)])
        ptr = np.zeros(n + 1, dtype=np.int64)
        idx, gain = [], []
        cross = np.zeros((n, n))
        for u in range(n):
            for i in graph.in_neighbors[u]:
                g = cross_gain(i, u, scenario)
                idx.append(i)
                gain.append(g)
                cross[u, i] = g
            ptr[u + 1] = len(idx)

        def col(attr, src):
            return np.array([getattr(x, attr) for x in src], dtype=float)

        arrays = dict(
            own_gain=own,
            bits=col("input_bits", scenario.tasks),
            work=np.array([t.workload for t in scenario.tasks]),
            alpha_t=col("alpha_t", scenario.profiles),
            alpha_e=col("alpha_e", scenario.profiles),
            kappa=col("kappa", scenario.profiles),
            f_max=col("f_max_hz", scenario.profiles),
            p_min=col("p_min_w", scenario.profiles),
            p_max=col("p_max_w", scenario.profiles),
            in_ptr=ptr,
            in_idx=np.array(idx, dtype=np.int64),
            in_gain=np.array(gain, dtype=float),
            cross=cross,
        )
        for a in arrays.values():
            a.flags.writeable = False
        return cls(scenario=scenario, plan=plan, graph=graph, **arrays)

    def with_interference_scale(self, scale: float) -> "Network":
        return Network.build(self.scenario.replace(interference_scale=scale),
                             self.plan, self.graph)


def make_network(config: GeneratorConfig, seed: int,
                 channel_seed: int | None = None) -> Network:
    scenario = generate_scenario(config, seed)
    return Network.build(scenario, assign_channels(scenario, channel_seed))


def isolated_scenario(positions: Sequence[Sequence[float]],
                      bs_positions: Sequence[Sequence[float]],
                      cell_of: Sequence[int], **kw) -> Scenario:
    """Hand-built scenario with the default 5 MHz / 0.15 W parameters; handy in tests."""
    n = len(positions)
    task = kw.pop("task", TaskSpec(5e6, 200.0))
    profile = kw.pop("profile", UserProfile(1e-27, 1e9, 1e-3, 0.15, 1.0, 0.0, 1e6))
    profiles = kw.pop("profiles", (profile,) * n)
    tasks = kw.pop("tasks", (task,) * n)
    defaults = dict(num_channels=max(np.bincount(np.asarray(cell_of)).max(), 1),
                    channel_bandwidth_hz=5e6, noise_power_w=1e-13,
                    path_loss_exponent=4.0, cloud_frequency_hz=1e10, cloud_kappa=1e-27)
    defaults.update(kw)
    return Scenario(bs_positions=bs_positions, user_positions=positions,
                    cell_of=tuple(cell_of), tasks=tasks, profiles=profiles, **defaults)
