"""Shared machinery for the decision-based attacks.

Every attack in this package runs against a DecisionOracle and sees
labels only. The pieces here keep the bookkeeping honest across all of
them: a query session that clips candidates to the unit box, enforces
the budget before each query, and records a milestone exactly when a
query both flips the label and improves the best distortion so far.

Distortion is always the Euclidean norm of (clipped candidate - x_o),
measured against the raw input point.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import QueryBudgetExceededError
from ..probes import DecisionOracle

TRACE_CSV_HEADER = "queries_used,best_distortion"

#: Terminal reasons an attack can report.
REASONS = ("already_adversarial", "init_failed", "budget_exhausted")


@dataclass(frozen=True)
class AttackConfig:
    """Knobs shared by hsja / surfree / rays.

    budget caps the total oracle queries an attack may issue; the run
    stops exactly there. init_strategy names how a first adversarial
    point is found ("uniform": sample the unit box, at most init_cap
    queries, then binary search toward x_o; rays needs no init and
    ignores it). bisect_tol is the bracket width at which every
    binary search stops, as a fraction of the searched segment.

    Per-attack defaults, chosen for d <= 64 problems:
      hsja_b0: gradient probe count at iteration t is ceil(b0 * sqrt(t))
      surfree_angle_probes: arc probes per plane, angles +-j*pi/10
      surfree_refine_steps: golden-ratio refinements of the best angle
    """

    budget: int = 2000
    init_cap: int = 100
    seed: int = 0
    init_strategy: str = "uniform"
    bisect_tol: float = 1e-3
    hsja_b0: int = 20
    surfree_angle_probes: int = 8
    surfree_refine_steps: int = 4

    def __post_init__(self):
        if not isinstance(self.budget, int) or isinstance(self.budget, bool):
            raise ValueError("budget must be an integer")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.init_cap < 1:
            raise ValueError(f"init_cap must be >= 1, got {self.init_cap}")
        if self.init_strategy != "uniform":
            raise ValueError(
                f"unknown init strategy {self.init_strategy!r}")
        if not (0.0 < self.bisect_tol < 1.0):
            raise ValueError(
                f"bisect_tol must be in (0, 1), got {self.bisect_tol}")
        if self.hsja_b0 < 1:
            raise ValueError(f"hsja_b0 must be >= 1, got {self.hsja_b0}")
        if self.surfree_angle_probes < 2 or self.surfree_angle_probes % 2:
            raise ValueError("surfree_angle_probes must be even and >= 2")
        if self.surfree_refine_steps < 0:
            raise ValueError("surfree_refine_steps must be >= 0")


@dataclass(frozen=True)
class AttackTrace:
    """Distortion-vs-queries record of one attack run.

    milestones holds (queries_used, best_distortion) pairs, recorded
    only at queries whose candidate flipped the oracle's label and
    improved on every earlier milestone; queries_used is the oracle
    counter right after that query. final_adversarial is the last such
    candidate, or None when the run never found one.
    """

    attack: str
    milestones: tuple[tuple[int, float], ...]
    final_adversarial: Optional[np.ndarray]
    reason: str
    events: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValueError(f"unknown terminal reason {self.reason!r}")
        prev_q, prev_d = 0, math.inf
        for q, dist in self.milestones:
            if q <= prev_q:
                raise ValueError("milestone queries must strictly increase")
            if dist > prev_d:
                raise ValueError("milestone distortion must not increase")
            if dist < 0.0:
                raise ValueError("distortion cannot be negative")
            prev_q, prev_d = q, dist

    @property
    def final_distortion(self) -> Optional[float]:
        return self.milestones[-1][1] if self.milestones else None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_CSV_HEADER.split(","))
            for q, dist in self.milestones:
                writer.writerow([q, repr(dist)])

    def sidecar(self, cfg: AttackConfig) -> dict:
        """JSON-ready run summary: config, outcome, and event log."""
        final = self.final_adversarial
        return {
            "attack": self.attack,
            "config": {
                "budget": cfg.budget,
                "init_cap": cfg.init_cap,
                "init_strategy": cfg.init_strategy,
                "bisect_tol": cfg.bisect_tol,
                "hsja_b0": cfg.hsja_b0,
                "surfree_angle_probes": cfg.surfree_angle_probes,
                "surfree_refine_steps": cfg.surfree_refine_steps,
            },
            "seed": cfg.seed,
            "reason": self.reason,
            "final_distortion": self.final_distortion,
            "final_point": None if final is None else [float(v) for v in final],
            "events": list(self.events),
        }

    def write(self, csv_path, cfg: AttackConfig) -> Path:
        """CSV of milestones plus a .json sidecar next to it."""
        csv_path = Path(csv_path)
        self.to_csv(csv_path)
        side = csv_path.with_suffix(".json")
        with open(side, "w") as fh:
            json.dump(self.sidecar(cfg), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return side


def best_distortion(trace: AttackTrace, at_budget: int) -> Optional[float]:
    """Best distortion once at_budget queries have been spent.

    Step function over the recorded milestones: the value is the last
    milestone at or before at_budget, never an interpolation. None when
    no milestone exists that early.
    """
    if at_budget < 1:
        raise ValueError(f"at_budget must be >= 1, got {at_budget}")
    value = None
    for q, dist in trace.milestones:
        if q > at_budget:
            break
        value = dist
    return value


class _OutOfQueries(Exception):
    """Internal: the attack's budget (or the oracle's) ran dry."""


class _BracketLost(Exception):
    """Internal: a binary-search endpoint failed its re-query twice."""


class Session:
    """One attack run's query funnel.

    ask() is the only path to the oracle: it clips the candidate to
    [0,1]^d, refuses to exceed cfg.budget (counted from the oracle's
    state at construction on a fresh oracle this is simply its total),
    and appends a milestone whenever the query flips and improves.
    """

    def __init__(self, oracle: DecisionOracle, x_o: np.ndarray, label_o: int,
                 cfg: AttackConfig):
        self.oracle = oracle
        self.x_o = x_o
        self.label_o = label_o
        self.cfg = cfg
        self.milestones: list[tuple[int, float]] = []
        self.events: list[str] = []
        self.best_point: Optional[np.ndarray] = None
        self.best_dist = math.inf

    def ask(self, candidate) -> tuple[bool, np.ndarray]:
        """Query one clipped candidate; returns (flipped, clipped point)."""
        if self.oracle.query_count >= self.cfg.budget:
            raise _OutOfQueries
        cand = np.clip(np.asarray(candidate, dtype=np.float64), 0.0, 1.0)
        try:
            label = self.oracle.query(cand)
        except QueryBudgetExceededError:
            raise _OutOfQueries from None
        flipped = label != self.label_o
        if flipped:
            diff = cand - self.x_o
            dist = float(np.sqrt(np.sum(diff * diff)))
            if dist < self.best_dist:
                self.best_dist = dist
                self.best_point = cand
                self.milestones.append((self.oracle.query_count, dist))
        return flipped, cand

    def finish(self, attack: str, reason: str) -> AttackTrace:
        return AttackTrace(
            attack=attack,
            milestones=tuple(self.milestones),
            final_adversarial=self.best_point,
            reason=reason,
            events=tuple(self.events),
        )


def start_session(attack: str, oracle: DecisionOracle, x_o, label_o: int,
                  cfg: AttackConfig) -> tuple[Session, Optional[AttackTrace]]:
    """Validate inputs and spend the first query on x_o itself.

    Returns (session, trace): trace is non-None only in the trivial
    case where x_o already flips, which ends the attack at one query
    and distortion zero.
    """
    x_o = np.ascontiguousarray(x_o, dtype=np.float64)
    if x_o.ndim != 1:
        raise ValueError("x_o must be a 1-D point")
    if x_o.shape[0] != oracle.dimension:
        raise ValueError(
            f"x_o has dimension {x_o.shape[0]}, oracle expects "
            f"{oracle.dimension}")
    if label_o not in (0, 1):
        raise ValueError(f"label_o must be 0 or 1, got {label_o}")
    session = Session(oracle, x_o, int(label_o), cfg)
    try:
        flipped, _ = session.ask(x_o)
    except _OutOfQueries:
        # a pre-spent oracle can refuse even the first query
        return session, session.finish(attack, "budget_exhausted")
    if flipped:
        return session, session.finish(attack, "already_adversarial")
    return session, None


def uniform_init(session: Session, init_stream) -> Optional[np.ndarray]:
    """Sample the unit box until a label flip, at most init_cap tries.

    Returns the flipped point, or None when the cap passes without one
    (the attack then reports init_failed).
    """
    d = session.x_o.shape[0]
    for i in range(session.cfg.init_cap):
        u = init_stream.uniforms(d, start=i * d)
        flipped, cand = session.ask(u)
        if flipped:
            return cand
    return None


def bisect_toward(session: Session, x_adv: np.ndarray, tag: str) -> np.ndarray:
    """Tighten an adversarial point toward x_o by interval halving.

    The adversarial endpoint is re-queried first; a randomized oracle
    may contradict the earlier flip, in which case one retry is allowed
    before the bracket is declared lost (the caller skips its
    iteration). Halving stops at cfg.bisect_tol of the segment, so the
    cost is about log2(1/tol) queries plus the endpoint check.
    """
    flipped, x_adv = session.ask(x_adv)
    if not flipped:
        session.events.append(f"{tag}: bracket endpoint re-query failed, retrying")
        flipped, x_adv = session.ask(x_adv)
        if not flipped:
            raise _BracketLost
    lo, hi = 0.0, 1.0
    x_o = session.x_o
    span = x_adv - x_o
    while hi - lo > session.cfg.bisect_tol:
        mid = 0.5 * (lo + hi)
        mid_flipped, _ = session.ask(x_o + mid * span)
        if mid_flipped:
            hi = mid
        else:
            lo = mid
    return np.clip(x_o + hi * span, 0.0, 1.0)
