"""Slotted best-response dynamics, Nash checks and potential-game verification."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from mecgame.best_response import DEFAULT_SEARCH, PowerSearchConfig, best_response
from mecgame.overhead import (Strategy, StrategyProfile, all_offload_profile,
                              altruistic_utility, profile_overheads, utilities,
                              utility)
from mecgame.scenario import Network

Schedule = Literal["sequential", "parallel"]
CYCLE_WINDOW = 64


@dataclass(frozen=True, eq=False)
class IterationRecord:
    round: int
    profile: StrategyProfile
    overheads: np.ndarray
    utilities: np.ndarray
    potential: float
    offloaders: int
    changed: int          # users whose strategy moved during this round

    @classmethod
    def capture(cls, net: Network, profile: StrategyProfile, rnd: int, changed: int):
        o = profile_overheads(net, profile)
        return cls(rnd, profile, o, utilities(net, profile, o), float(o.sum()),
                   int(np.count_nonzero(profile.lam > 0.0)), changed)


@dataclass(eq=False)
class GameTrace:
    schedule: str
    rounds: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    cycle_detected: bool = False

    @property
    def final(self) -> StrategyProfile:
        return self.rounds[-1].profile

    @property
    def rounds_to_converge(self) -> int:
        """Index of the last round in which some user still moved."""
        moving = [r.round for r in self.rounds if r.changed]
        return moving[-1] if moving else 0

    @property
    def potentials(self) -> np.ndarray:
        return np.array([r.potential for r in self.rounds])

    def summary(self) -> dict:
        last = self.rounds[-1]
        return {
            "schedule": self.schedule,
            "converged": self.converged,
            "cycle_detected": self.cycle_detected,
            "rounds": self.rounds_to_converge,
            "rounds_executed": len(self.rounds) - 1,
            "final_potential": last.potential,
            "offloaders": last.offloaders,
            "num_users": len(last.profile),
        }

    def to_csv(self) -> str:
        n = len(self.rounds[0].profile)
        header = ["round", "potential", "offloaders", "changed"]
        for key in ("lam", "p", "f", "O", "U"):
            header += [f"{key}_{i}" for i in range(n)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in self.rounds:
            row = [r.round, repr(r.potential), r.offloaders, r.changed]
            for arr in (r.profile.lam, r.profile.power, r.profile.freq,
                        r.overheads, r.utilities):
                row += [repr(float(x)) for x in arr]
            w.writerow(row)
        return buf.getvalue()


def _moved(old: Strategy, new: Strategy, eps_power: float) -> bool:
    return (old.lam != new.lam or old.freq_hz != new.freq_hz
            or abs(old.power_w - new.power_w) > eps_power)


def run_dynamics(net: Network, initial: StrategyProfile | None = None,
                 schedule: Schedule = "sequential", max_rounds: int = 500,
                 eps_power: float = 1e-6,
                 cfg: PowerSearchConfig = DEFAULT_SEARCH) -> GameTrace:
    """Iterate best responses until a full round leaves every strategy in place.

    ``sequential`` updates users one at a time in index order against the
    live profile; this is the schedule that descends the potential.
    ``parallel`` lets every user respond to the previous round's profile at
    once and stops early if a profile repeats within the last 64 rounds.
    """
    if schedule not in ("sequential", "parallel"):
        raise ValueError(f"unknown schedule {schedule!r}")
    profile = all_offload_profile(net.scenario) if initial is None else initial
    profile.check(net.scenario)

    trace = GameTrace(schedule)
    trace.rounds.append(IterationRecord.capture(net, profile, 0, 0))
    seen = {hash(profile): 0}
    for rnd in range(1, max_rounds + 1):
        changed = 0
        if schedule == "sequential":
            for n in range(net.n):
                new = best_response(n, profile, net, cfg).strategy
                if _moved(profile[n], new, eps_power):
                    changed += 1
                profile = profile.replace(n, new)
        else:
            frozen = profile
            moves = [best_response(n, frozen, net, cfg).strategy for n in range(net.n)]
            changed = sum(_moved(frozen[n], s, eps_power) for n, s in enumerate(moves))
            profile = StrategyProfile.from_strategies(moves)
        trace.rounds.append(IterationRecord.capture(net, profile, rnd, changed))
        if changed == 0:
            trace.converged = True
            break
        key = hash(profile)
        if schedule == "parallel":
            if key in seen and rnd - seen[key] <= CYCLE_WINDOW:
                trace.cycle_detected = True
                break
            seen[key] = rnd
    return trace


def nash_gaps(net: Network, profile: StrategyProfile,
              cfg: PowerSearchConfig = DEFAULT_SEARCH) -> np.ndarray:
    """How much each user could still gain by deviating unilaterally."""
    gaps = np.empty(net.n)
    for n in range(net.n):
        current = utility(net, n, profile)
        gaps[n] = current - best_response(n, profile, net, cfg).utility
    return gaps


def is_nash(net: Network, profile: StrategyProfile,
            cfg: PowerSearchConfig = DEFAULT_SEARCH, tol: float = 1e-9) -> bool:
    """True if no user improves its utility by more than ``tol`` (relative)."""
    for n in range(net.n):
        current = utility(net, n, profile)
        if current > best_response(n, profile, net, cfg).utility + tol * max(1.0, abs(current)):
            return False
    return True


PATTERNS = ("lam", "p", "f", "lam+p", "lam+f", "p+f", "lam+p+f")


def random_strategy(rng: np.random.Generator, prof) -> Strategy:
    lam = float(rng.choice([0.0, 1.0, rng.uniform(0.05, 0.95)]))
    p = float(rng.uniform(prof.p_min_w, prof.p_max_w)) if lam > 0 else 0.0
    f = float(rng.uniform(0.05, 1.0) * prof.f_max_hz)
    if lam == 1.0 and rng.random() < 0.5:
        f = 0.0
    return Strategy(lam, p, f)


def random_profile(net: Network, rng: np.random.Generator) -> StrategyProfile:
    return StrategyProfile.from_strategies(
        random_strategy(rng, net.scenario.profiles[n]) for n in range(net.n))


def random_deviation(rng: np.random.Generator, prof, s: Strategy, pattern: str) -> Strategy:
    """Change the named components of ``s``, then repair feasibility."""
    lam, p, f = s.lam, s.power_w, s.freq_hz
    parts = pattern.split("+")
    if "lam" in parts:
        options = [x for x in (0.0, 1.0, float(rng.uniform(0.05, 0.95))) if x != lam]
        lam = float(rng.choice(options))
    if "p" in parts and lam > 0:
        p = float(rng.uniform(prof.p_min_w, prof.p_max_w))
    if "f" in parts:
        f = float(rng.uniform(0.05, 1.0) * prof.f_max_hz)
    if lam == 0.0:
        p = 0.0
    elif p == 0.0:
        p = float(rng.uniform(prof.p_min_w, prof.p_max_w))
    if lam < 1.0 and f == 0.0:
        f = float(rng.uniform(0.05, 1.0) * prof.f_max_hz)
    return Strategy(lam, p, f)


@dataclass
class PotentialReport:
    trials: int
    max_residual: float
    violations: list[dict]
    pattern_counts: dict[str, int]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"trials": self.trials, "max_residual": self.max_residual,
                "violations": self.violations, "pattern_counts": self.pattern_counts,
                "ok": self.ok}


def verify_exact_potential(net: Network, trials: int, seed: int,
                           rtol: float = 1e-9) -> PotentialReport:
    """Check that a unilateral deviation moves utility and potential equally.

    The utility side uses the scalar reference formulas; the potential side
    uses the vectorised kernels, so the two are computed independently.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = []
    counts = {k: 0 for k in PATTERNS}
    sc, graph = net.scenario, net.graph
    for t in range(trials):
        pattern = PATTERNS[t % len(PATTERNS)]
        before = random_profile(net, rng)
        n = int(rng.integers(net.n))
        dev = random_deviation(rng, sc.profiles[n], before[n], pattern)
        after = before.replace(n, dev)
        d_u = (altruistic_utility(n, after, graph, sc)
               - altruistic_utility(n, before, graph, sc))
        d_phi = float(profile_overheads(net, after).sum()
                      - profile_overheads(net, before).sum())
        resid = abs(d_u - d_phi) / max(1.0, abs(d_phi))
        worst = max(worst, resid)
        counts[pattern] += 1
        if resid > rtol:
            violations.append({"trial": t, "seed": seed, "user": n, "pattern": pattern,
                               "residual": resid, "before": before.to_dict(),
                               "deviation": dev.__dict__})
    return PotentialReport(trials, worst, violations, counts)


def summary_json(trace: GameTrace) -> str:
    return json.dumps(trace.summary(), indent=2, sort_keys=True) + "\n"
