"""Geometric attack that searches circular arcs instead of gradients.

Given the current adversarial anchor at distance dist from x_o, any
point of the circle whose diameter is the segment [x_o, anchor] sits at
distance dist*|cos(theta/2)| from x_o (theta = 0 is the anchor, pi is
x_o itself). Each iteration picks a fresh random 2-D plane through that
axis, probes the arc at angles +-j*scale*pi/10, refines the widest
flipping angle by golden-ratio steps against the nearest non-flipping
one, and binary searches the winner back onto the boundary. Every
accepted angle strictly shrinks the distortion, so progress is monotone
and the only terminator is the query budget.

The angle scale adapts to the geometry: a plane where no probe flips
halves it (the boundary is close to tangent, so only narrow arcs can
stay adversarial), and any success doubles it back, capped at 1. Each
new low of the scale is logged; a flat arc is the arc-search analog of
a degenerate probe batch.
"""
from __future__ import annotations

import math

import numpy as np

from ..rng import Stream
from .common import (AttackConfig, AttackTrace, _BracketLost, _OutOfQueries,
                     bisect_toward, start_session, uniform_init)

_INV_GOLDEN = 2.0 / (1.0 + math.sqrt(5.0))


def attack_surfree(oracle, x_o, label_o: int, cfg: AttackConfig) -> AttackTrace:
    session, done = start_session("surfree", oracle, x_o, label_o, cfg)
    if done is not None:
        return done
    root = Stream.from_seed(cfg.seed, "surfree")
    d = session.x_o.shape[0]
    x_origin = session.x_o
    try:
        anchor = uniform_init(session, root.child("init"))
        if anchor is None:
            return session.finish("surfree", "init_failed")
        try:
            anchor = bisect_toward(session, anchor, "init")
        except _BracketLost:
            session.events.append("init: bracket lost, polish skipped")

        t = 0
        angle_scale = 1.0
        logged_scale_floor = 1.0
        while True:
            t += 1
            axis = anchor - x_origin
            dist = float(np.sqrt(np.sum(axis * axis)))
            if dist == 0.0:
                session.events.append(f"iter {t}: anchor equals x_o, stopping")
                break
            u_hat = axis / dist
            v = root.child("plane", t).normal_vector(d)
            v = v - np.dot(v, u_hat) * u_hat
            v_norm = float(np.sqrt(np.sum(v * v)))
            if v_norm < 1e-12:
                session.events.append(f"iter {t}: degenerate plane, skipped")
                continue
            v_hat = v / v_norm
            mid = x_origin + 0.5 * axis
            r = 0.5 * dist

            def on_circle(theta: float) -> np.ndarray:
                return mid + r * (math.cos(theta) * u_hat
                                  + math.sin(theta) * v_hat)

            # arc probes, each sign stopped at its first non-flip
            step_angle = angle_scale * (math.pi / 10.0)
            best = {}   # sign -> (theta_flip, theta_fail)
            for sign in (1.0, -1.0):
                theta_flip = None
                theta_fail = sign * math.pi  # the arc ends at x_o itself
                for j in range(1, cfg.surfree_angle_probes // 2 + 1):
                    theta = sign * j * step_angle
                    flipped, _ = session.ask(on_circle(theta))
                    if flipped:
                        theta_flip = theta
                    else:
                        theta_fail = theta
                        break
                if theta_flip is not None:
                    best[sign] = (theta_flip, theta_fail)
            if not best:
                if angle_scale > 1e-6:
                    angle_scale *= 0.5
                    if angle_scale < logged_scale_floor:
                        logged_scale_floor = angle_scale
                        session.events.append(
                            f"iter {t}: flat arc, angle scale down "
                            f"to {angle_scale:g}")
                continue
            angle_scale = min(1.0, angle_scale * 2.0)
            sign = max(best, key=lambda s: abs(best[s][0]))
            theta_flip, theta_fail = best[sign]

            for _ in range(cfg.surfree_refine_steps):
                theta_try = theta_flip + (theta_fail - theta_flip) * _INV_GOLDEN
                flipped, _ = session.ask(on_circle(theta_try))
                if flipped:
                    theta_flip = theta_try
                else:
                    theta_fail = theta_try

            z_best = np.clip(on_circle(theta_flip), 0.0, 1.0)
            try:
                anchor = bisect_toward(session, z_best, f"iter {t}")
            except _BracketLost:
                session.events.append(
                    f"iter {t}: bracket lost, keeping arc point")
                anchor = z_best
    except _OutOfQueries:
        pass
    return session.finish("surfree", "budget_exhausted")
