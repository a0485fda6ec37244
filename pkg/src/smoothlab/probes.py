"""Geometric probes against label-only classifiers.

This is the attacker's side of the fence: a DecisionOracle exposes
nothing but labels (no probabilities, votes, or noise settings), and the
probes here reconstruct geometry from those labels alone — boundary
points by bisection, 2-D decision maps, flip-probability profiles along
a direction, and boundary-normal estimates from noisy bombardment.

Randomized oracles make these diagnostics noisy: a bisection against a
smoothed classifier lands at a random offset from the true smoothed
boundary, and binary_search_distribution measures exactly that spread.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BoundaryBracketError, QueryBudgetExceededError
from .rng import Stream
from .smoothing import SmoothingConfig, exact_pi, smoothed_decide


class DecisionOracle:
    """Label-only query counter around a base or smoothed classifier.

    Every query advances the counter by exactly one; an optional budget
    refuses queries past the cap. A smoothed oracle keys each query's
    noise by the query index, so a transcript replays bit-exactly.
    """

    def __init__(self, decide_fn: Callable[[np.ndarray, int], int],
                 dimension: int, budget: Optional[int] = None,
                 log_queries: bool = False):
        if budget is not None and budget < 0:
            raise ValueError(f"budget must be nonnegative, got {budget}")
        self._decide = decide_fn
        self._dimension = dimension
        self._budget = budget
        self._count = 0
        self.log: list[tuple[np.ndarray, int]] = []
        self._log_queries = log_queries

    @classmethod
    def from_base(cls, classifier, budget: Optional[int] = None,
                  log_queries: bool = False) -> "DecisionOracle":
        return cls(lambda x, _i: classifier.decide(x), classifier.dimension,
                   budget=budget, log_queries=log_queries)

    @classmethod
    def from_smoothed(cls, classifier, cfg: SmoothingConfig, stream: Stream,
                      budget: Optional[int] = None,
                      log_queries: bool = False) -> "DecisionOracle":
        def decide(x: np.ndarray, i: int) -> int:
            return smoothed_decide(classifier, cfg, x, stream.child(i)).label

        return cls(decide, classifier.dimension,
                   budget=budget, log_queries=log_queries)

    @property
    def query_count(self) -> int:
        return self._count

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def remaining(self) -> Optional[int]:
        return None if self._budget is None else self._budget - self._count

    def query(self, x) -> int:
        if self._budget is not None and self._count >= self._budget:
            raise QueryBudgetExceededError(
                f"query budget of {self._budget} exhausted")
        x = np.asarray(x, dtype=np.float64)
        label = self._decide(x, self._count)
        self._count += 1
        if self._log_queries:
            self.log.append((x.copy(), label))
        return label

    __call__ = query


def _bisect_param(oracle: DecisionOracle, x_in: np.ndarray,
                  x_out: np.ndarray, tol: float, max_steps: int) -> float:
    """Bracket parameter of the label change on [x_in, x_out].

    Endpoints are re-queried here rather than trusted: under a
    randomized oracle the labels may disagree with what the caller saw,
    and that jeopardy should surface, not hide.
    """
    label_in = oracle.query(x_in)
    label_out = oracle.query(x_out)
    if label_in == label_out:
        raise BoundaryBracketError(
            f"both endpoints answered {label_in}; bracket lost")
    lo, hi = 0.0, 1.0
    steps = 0
    while True:
        mid = 0.5 * (lo + hi)
        if oracle.query(x_in + mid * (x_out - x_in)) == label_in:
            lo = mid
        else:
            hi = mid
        steps += 1
        if hi - lo <= tol or steps >= max_steps:
            return 0.5 * (lo + hi)


def binary_search_boundary(oracle: DecisionOracle, x_in, x_out,
                           tol: float = 1e-6, max_steps: int = 60) -> np.ndarray:
    """Point near the oracle's label change along the segment.

    tol is the bracket width in segment-parameter units; one oracle
    query per halving plus the two endpoint re-queries.
    """
    if not (tol > 0.0):
        raise ValueError(f"tol must be positive, got {tol}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    x_in = np.asarray(x_in, dtype=np.float64)
    x_out = np.asarray(x_out, dtype=np.float64)
    if x_in.shape != x_out.shape or x_in.ndim != 1:
        raise ValueError("x_in and x_out must be 1-D points of equal shape")
    t = _bisect_param(oracle, x_in, x_out, tol, max_steps)
    return x_in + t * (x_out - x_in)


def _true_crossing_param(base, sigma: float, x_in: np.ndarray,
                         x_out: np.ndarray) -> float:
    """Parameter where the exact smoothed probability crosses 1/2."""
    def p(t: float) -> float:
        return exact_pi(base, x_in + t * (x_out - x_in), sigma) - 0.5

    p0, p1 = p(0.0), p(1.0)
    if p0 == 0.0:
        return 0.0
    if p1 == 0.0:
        return 1.0
    if (p0 > 0.0) == (p1 > 0.0):
        raise ValueError(
            "the exact smoothed probability does not cross 1/2 on the segment")
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if (p(mid) > 0.0) == (p0 > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BinarySearchStats:
    """Spread of randomized-bisection results around the true smoothed
    boundary. Offsets are in input units; positive offsets lie beyond
    the boundary as seen from x_in."""

    mean: float
    std: float
    counts: np.ndarray
    bin_edges: np.ndarray
    offsets: np.ndarray
    crossing_t: float
    trials: int

    def histogram_csv(self, path) -> None:
        lines = ["# signed offset from the smoothed boundary; "
                 "positive = beyond it as seen from x_in",
                 "bin_lo,bin_hi,count"]
        for i, c in enumerate(self.counts):
            lines.append(f"{self.bin_edges[i]!r},{self.bin_edges[i + 1]!r},{int(c)}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def binary_search_distribution(base, cfg: SmoothingConfig, x_in, x_out,
                               trials: int, tol: float = 1e-6,
                               seed: int = 0, bins: int = 20,
                               max_steps: int = 60) -> BinarySearchStats:
    """Repeat a randomized bisection and measure where it lands.

    Each trial runs against a fresh smoothed oracle; a trial whose
    endpoint re-query loses the bracket is retried up to three times
    with fresh noise before the whole run fails.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    x_in = np.asarray(x_in, dtype=np.float64)
    x_out = np.asarray(x_out, dtype=np.float64)
    t_star = _true_crossing_param(base, cfg.sigma, x_in, x_out)
    seg_len = float(np.linalg.norm(x_out - x_in))
    root = Stream.from_seed(seed, "bs-dist")
    offsets = np.empty(trials, dtype=np.float64)
    for trial in range(trials):
        for attempt in range(3):
            oracle = DecisionOracle.from_smoothed(
                base, cfg, root.child(trial, attempt))
            try:
                t_found = _bisect_param(oracle, x_in, x_out, tol, max_steps)
                break
            except BoundaryBracketError:
                if attempt == 2:
                    raise
        offsets[trial] = (t_found - t_star) * seg_len
    counts, edges = np.histogram(offsets, bins=bins)
    return BinarySearchStats(mean=float(offsets.mean()),
                             std=float(offsets.std()),
                             counts=counts, bin_edges=edges,
                             offsets=offsets, crossing_t=t_star,
                             trials=trials)


@dataclass(frozen=True)
class DirectionProfile:
    """Empirical flip probability along a ray from x_o."""

    ts: np.ndarray
    flip_probs: np.ndarray
    sigma: float
    n: int
    label_o: int

    def to_csv(self, path) -> None:
        lines = [f"# sigma={self.sigma!r} n={self.n} label_o={self.label_o}",
                 "t,flip_prob"]
        for t, p in zip(self.ts, self.flip_probs):
            lines.append(f"{t!r},{p!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def direction_profile(base, cfg: SmoothingConfig, x_o, direction,
                      t_grid: Sequence[float], probes_per_point: int,
                      seed: int = 0) -> DirectionProfile:
    """Probability of answering something other than x_o's label at
    each step along a unit direction.

    The reference label is the base classifier's answer at x_o (the
    starting point is assumed correctly classified, where base and
    smoothed labels agree).
    """
    if probes_per_point < 1:
        raise ValueError(f"probes_per_point must be >= 1, got {probes_per_point}")
    x_o = np.asarray(x_o, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-8:
        raise ValueError("direction must be a unit vector")
    label_o = base.decide(x_o)
    root = Stream.from_seed(seed, "profile")
    ts = np.asarray(list(t_grid), dtype=np.float64)
    probs = np.empty_like(ts)
    for i, t in enumerate(ts):
        point = x_o + t * direction
        flips = 0
        for j in range(probes_per_point):
            d = smoothed_decide(base, cfg, point, root.child(i, j))
            flips += d.label != label_o
        probs[i] = flips / probes_per_point
    return DirectionProfile(ts=ts, flip_probs=probs, sigma=cfg.sigma,
                            n=cfg.n, label_o=label_o)


@dataclass(frozen=True)
class SliceMap:
    """Labels on a 2-D affine slice, row i = first direction, col j =
    second direction."""

    center: np.ndarray
    dir1: np.ndarray
    dir2: np.ndarray
    extent: float
    resolution: int
    labels: np.ndarray
    us: np.ndarray
    vs: np.ndarray

    def to_csv(self, path) -> None:
        lines = ["u,v,label"]
        for i, u in enumerate(self.us):
            for j, v in enumerate(self.vs):
                lines.append(f"{u!r},{v!r},{int(self.labels[i, j])}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_svg(self, path, cell_px: int = 8,
               colors: tuple[str, str] = ("#3a6ea5", "#e8b84b")) -> None:
        """Two-color raster; u grows rightward, v grows upward."""
        r = self.resolution
        side = r * cell_px
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
                 f'width="{side}" height="{side}" '
                 f'viewBox="0 0 {side} {side}">']
        for i in range(r):
            for j in range(r):
                color = colors[int(self.labels[i, j])]
                x = i * cell_px
                y = (r - 1 - j) * cell_px
                parts.append(f'<rect x="{x}" y="{y}" width="{cell_px}" '
                             f'height="{cell_px}" fill="{color}"/>')
        parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts) + "\n")


def slice_map(oracle: DecisionOracle, center, dir1, dir2, extent: float,
              resolution: int) -> SliceMap:
    """Query the oracle over a (2*extent)-wide square patch of the plane
    spanned by two directions (orthonormalized here).

    Exactly resolution**2 queries, row-major over (dir1, dir2) steps.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if not (extent >= 0.0):
        raise ValueError(f"extent must be nonnegative, got {extent}")
    center = np.asarray(center, dtype=np.float64)
    d1 = np.asarray(dir1, dtype=np.float64)
    d2 = np.asarray(dir2, dtype=np.float64)
    n1 = float(np.linalg.norm(d1))
    if n1 < 1e-12:
        raise ValueError("dir1 must be nonzero")
    d1 = d1 / n1
    d2 = d2 - float(d2 @ d1) * d1
    n2 = float(np.linalg.norm(d2))
    if n2 < 1e-12:
        raise ValueError("dir2 is parallel to dir1")
    d2 = d2 / n2
    us = np.linspace(-extent, extent, resolution)
    vs = np.linspace(-extent, extent, resolution)
    labels = np.empty((resolution, resolution), dtype=np.int8)
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            labels[i, j] = oracle.query(center + u * d1 + v * d2)
    return SliceMap(center=center, dir1=d1, dir2=d2, extent=extent,
                    resolution=resolution, labels=labels, us=us, vs=vs)


@dataclass(frozen=True)
class NormalEstimate:
    """Boundary-normal estimate from signed noisy probes.

    direction points from the reference-label side toward the flip side
    and is the zero vector when the result is degenerate (all probes
    answered alike, so no direction information exists).
    """

    direction: np.ndarray
    flip_fraction: float
    degenerate: bool


def estimate_normal(oracle: DecisionOracle, x_b, num_probes: int,
                    probe_sigma: float, seed: int = 0,
                    reference_label: Optional[int] = None) -> NormalEstimate:
    """Average of probe perturbations signed by flip outcome, normalized.

    When reference_label is None it costs one extra oracle query at x_b
    itself; pass the label to keep the query count at num_probes.
    """
    if num_probes < 2:
        raise ValueError(f"num_probes must be >= 2, got {num_probes}")
    if not (probe_sigma > 0.0):
        raise ValueError(f"probe_sigma must be positive, got {probe_sigma}")
    x_b = np.asarray(x_b, dtype=np.float64)
    if reference_label is None:
        reference_label = oracle.query(x_b)
    stream = Stream.from_seed(seed, "normal-est")
    z = stream.normals(num_probes, x_b.shape[0])
    acc = np.zeros_like(x_b)
    flips = 0
    for i in range(num_probes):
        step = probe_sigma * z[i]
        if oracle.query(x_b + step) != reference_label:
            acc += step
            flips += 1
        else:
            acc -= step
    if flips == 0 or flips == num_probes:
        return NormalEstimate(direction=np.zeros_like(x_b),
                              flip_fraction=flips / num_probes,
                              degenerate=True)
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        return NormalEstimate(direction=np.zeros_like(x_b),
                              flip_fraction=flips / num_probes,
                              degenerate=True)
    return NormalEstimate(direction=acc / norm,
                          flip_fraction=flips / num_probes,
                          degenerate=False)
