"""Ray search over sign directions with hierarchical block flips.

Candidate directions are sign vectors s in {-1,+1}^d scaled to unit
length; along each ray the attack wants the smallest radius whose
(box-clipped) point flips the oracle. The search starts from all-ones
and sweeps coordinate blocks, halving block size each level down to
single coordinates, flipping a block's sign whenever that strictly
shrinks the ray radius. A direction is vetted cheaply first: one probe
at the current best radius (early stop when it fails to flip), and only
promising directions pay for a binary search on [0, r].

There is no random initialization: the first scalar tests land on box
corners after clipping, which is the whole point of starting from a
sign vector. cfg.seed and cfg.init_cap are therefore unused here, and
the init_failed outcome cannot occur; a run that never flips anything
simply exhausts its budget with an empty milestone list.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .common import (AttackConfig, AttackTrace, _OutOfQueries, Session,
                     start_session)


def _ray_radius(session: Session, s_hat: np.ndarray,
                r_hi: float, tol: float) -> Optional[float]:
    """Smallest flipping radius along the ray, or None past r_hi."""
    flipped, _ = session.ask(session.x_o + r_hi * s_hat)
    if not flipped:
        return None
    lo, hi = 0.0, r_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        mid_flipped, _ = session.ask(session.x_o + mid * s_hat)
        if mid_flipped:
            hi = mid
        else:
            lo = mid
    return hi


def attack_rays(oracle, x_o, label_o: int, cfg: AttackConfig) -> AttackTrace:
    session, done = start_session("rays", oracle, x_o, label_o, cfg)
    if done is not None:
        return done
    d = session.x_o.shape[0]
    sqrt_d = math.sqrt(d)
    tol = cfg.bisect_tol * sqrt_d
    signs = np.ones(d)
    r_best = math.inf
    max_level = max(0, math.ceil(math.log2(d))) if d > 1 else 0
    try:
        r = _ray_radius(session, signs / sqrt_d, sqrt_d, tol)
        if r is not None:
            r_best = r
        level = 0
        while True:
            n_blocks = min(d, 2 ** level)
            for block in np.array_split(np.arange(d), n_blocks):
                trial = signs.copy()
                trial[block] *= -1.0
                r_cap = min(r_best, sqrt_d)
                r = _ray_radius(session, trial / sqrt_d, r_cap, tol)
                if r is not None and r < r_best:
                    signs = trial
                    r_best = r
            level = 0 if level >= max_level else level + 1
    except _OutOfQueries:
        pass
    return session.finish("rays", "budget_exhausted")
