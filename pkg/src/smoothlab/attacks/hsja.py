"""Boundary-walking attack with Monte Carlo gradient estimates.

The loop keeps an adversarial anchor and repeats three moves until the
query budget runs out:

  1. binary search from x_o toward the anchor, landing near the
     decision boundary;
  2. estimate the boundary normal there by bombarding the point with
     ceil(b0 * sqrt(t)) spherical probes of radius dist/sqrt(d) and
     averaging baseline-subtracted flip indicators;
  3. step along the estimate by dist/sqrt(t), halving the step until
     the candidate flips (the new anchor).

A probe batch whose answers all agree carries no direction signal; the
update is skipped and the event logged. Under a randomized oracle the
bisection bracket can dissolve; that costs the iteration (see
common.bisect_toward).
"""
from __future__ import annotations

import math

import numpy as np

from ..rng import Stream
from .common import (AttackConfig, AttackTrace, _BracketLost, _OutOfQueries,
                     bisect_toward, start_session, uniform_init)


def attack_hsja(oracle, x_o, label_o: int, cfg: AttackConfig) -> AttackTrace:
    session, done = start_session("hsja", oracle, x_o, label_o, cfg)
    if done is not None:
        return done
    root = Stream.from_seed(cfg.seed, "hsja")
    d = session.x_o.shape[0]
    try:
        anchor = uniform_init(session, root.child("init"))
        if anchor is None:
            return session.finish("hsja", "init_failed")
        t = 0
        while True:
            t += 1
            try:
                x_b = bisect_toward(session, anchor, f"iter {t}")
            except _BracketLost:
                session.events.append(f"iter {t}: bracket lost, skipped")
                continue
            diff = x_b - session.x_o
            dist = float(np.sqrt(np.sum(diff * diff)))
            probe_radius = max(dist / math.sqrt(d), 1e-9)

            n_probes = math.ceil(cfg.hsja_b0 * math.sqrt(t))
            directions = root.child("probe", t).normals(n_probes, d)
            norms = np.sqrt(np.sum(directions * directions, axis=1))
            norms[norms == 0.0] = 1.0
            directions /= norms[:, None]
            signs = np.empty(n_probes)
            for i in range(n_probes):
                flipped, _ = session.ask(x_b + probe_radius * directions[i])
                signs[i] = 1.0 if flipped else -1.0
            if np.all(signs == signs[0]):
                session.events.append(
                    f"iter {t}: degenerate probe batch, update skipped")
                anchor = x_b
                continue
            grad = np.mean((signs - signs.mean())[:, None] * directions,
                           axis=0)
            norm = float(np.sqrt(np.sum(grad * grad)))
            if norm == 0.0:
                session.events.append(
                    f"iter {t}: zero gradient estimate, update skipped")
                anchor = x_b
                continue
            grad /= norm

            step = dist / math.sqrt(t)
            moved = False
            while step > 1e-12:
                flipped, cand = session.ask(x_b + step * grad)
                if flipped:
                    anchor = cand
                    moved = True
                    break
                step *= 0.5
            if not moved:
                session.events.append(f"iter {t}: step search collapsed")
                anchor = x_b
    except _OutOfQueries:
        pass
    return session.finish("hsja", "budget_exhausted")
