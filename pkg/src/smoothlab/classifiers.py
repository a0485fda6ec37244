"""Synthetic base classifiers, datasets, and MLP training.

Three classifier families over [0,1]^d: an affine halfspace, a ball,
and a small two-hidden-layer MLP.  The first two expose their boundary
geometry in closed form (distance and principal curvatures), which the
certification and probe modules lean on as ground truth; the MLP is
the opaque case and refuses geometry queries.

Everything is deterministic: datasets regenerate bit-for-bit from
(name, size, dimension, seed, params), and training consumes an
explicit random stream with a fixed visit order per epoch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ._kernels_py import mlp_logits
from .errors import TrainingDivergedError, UnsupportedGeometryError
from .rng import Stream

DATASET_NAMES = ("gaussian-blobs", "concentric-spheres", "two-moons-embedded")

_FORMAT = "smoothlab-classifier"
_VERSION = 1


def _as_point(x, dim: int) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise ValueError(f"expected a vector of dimension {dim}, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("point contains non-finite coordinates")
    return arr


@dataclass(frozen=True)
class LinearClassifier:
    """Halfspace classifier: label 1 iff w.x + b > 0."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("weights must be a nonempty vector")
        if not np.isfinite(w).all() or not math.isfinite(self.bias):
            raise ValueError("weights and bias must be finite")
        norm = float(np.sqrt(np.sum(w * w)))
        if norm == 0.0:
            raise ValueError("weight vector must be nonzero")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_norm", norm)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    @property
    def weight_norm(self) -> float:
        return self._norm

    def margin(self, x) -> float:
        """Signed distance numerator w.x + b; positive on the class 1 side."""
        x = _as_point(x, self.dimension)
        return float(np.dot(self.weights, x) + self.bias)

    def decide(self, x) -> int:
        return 1 if self.margin(x) > 0.0 else 0

    def decide_batch(self, points: np.ndarray) -> np.ndarray:
        margins = points @ self.weights + self.bias
        return (margins > 0.0).astype(np.int8)

    def distance_to_boundary(self, x) -> float:
        return abs(self.margin(x)) / self._norm

    def boundary_curvatures(self, x) -> np.ndarray:
        """A hyperplane is flat: d-1 zero principal curvatures."""
        _as_point(x, self.dimension)
        return np.zeros(self.dimension - 1, dtype=np.float64)


@dataclass(frozen=True)
class SphereClassifier:
    """Ball classifier: label 1 strictly inside the sphere."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.ascontiguousarray(self.center, dtype=np.float64)
        if c.ndim != 1 or c.shape[0] < 2:
            raise ValueError("center must be a vector of dimension >= 2")
        if not np.isfinite(c).all():
            raise ValueError("center must be finite")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def center_distance(self, x) -> float:
        x = _as_point(x, self.dimension)
        diff = x - self.center
        return float(np.sqrt(np.sum(diff * diff)))

    def decide(self, x) -> int:
        return 1 if self.center_distance(x) < self.radius else 0

    def decide_batch(self, points: np.ndarray) -> np.ndarray:
        d2 = np.sum((points - self.center) ** 2, axis=1)
        return (d2 < self.radius * self.radius).astype(np.int8)

    def distance_to_boundary(self, x) -> float:
        return abs(self.center_distance(x) - self.radius)

    def boundary_curvatures(self, x) -> np.ndarray:
        """Principal curvatures of the sphere as seen from x.

        Sign convention: positive when the boundary bows away from x,
        i.e. when the opposite-class region is convex.  Outside the
        ball the flip region is the ball itself, so the curvature is
        +1/radius; inside, the boundary wraps around the point and the
        sign flips.  Units are 1/input-length; scale by sigma before
        feeding a noise-standardized approximation.
        """
        inside = self.decide(x) == 1
        sign = -1.0 if inside else 1.0
        return np.full(self.dimension - 1, sign / self.radius, dtype=np.float64)


@dataclass(frozen=True)
class MlpClassifier:
    """Fixed-shape MLP: d -> h -> h -> 2, activation x/sqrt(1+x^2).

    Class 1 wins on a strict logit comparison, so exact ties fall to
    class 0, matching the smoothing tie rule.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arrs = {}
        for name in ("w1", "b1", "w2", "b2", "w3", "b3"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(a).all():
                raise ValueError(f"{name} contains non-finite values")
            arrs[name] = a
        h, d = arrs["w1"].shape
        if arrs["b1"].shape != (h,) or arrs["w2"].shape != (h, h) \
                or arrs["b2"].shape != (h,) or arrs["w3"].shape != (2, h) \
                or arrs["b3"].shape != (2,):
            raise ValueError("inconsistent MLP weight shapes")
        for name, a in arrs.items():
            object.__setattr__(self, name, a)

    @property
    def dimension(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def logits(self, x) -> np.ndarray:
        x = _as_point(x, self.dimension)
        return mlp_logits(x[None, :], self.w1, self.b1, self.w2, self.b2,
                          self.w3, self.b3)[0]

    def decide(self, x) -> int:
        lg = self.logits(x)
        return 1 if lg[1] > lg[0] else 0

    def decide_batch(self, points: np.ndarray) -> np.ndarray:
        lg = mlp_logits(np.ascontiguousarray(points, dtype=np.float64),
                        self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)
        return (lg[:, 1] > lg[:, 0]).astype(np.int8)

    def distance_to_boundary(self, x) -> float:
        raise UnsupportedGeometryError(
            "MLP classifiers expose no closed-form boundary distance")

    def boundary_curvatures(self, x) -> np.ndarray:
        raise UnsupportedGeometryError(
            "MLP classifiers expose no closed-form boundary curvatures")


Classifier = Union[LinearClassifier, SphereClassifier, MlpClassifier]


@dataclass(frozen=True)
class Dataset:
    """Labeled points in [0,1]^d with their generation recipe."""

    name: str
    points: np.ndarray
    labels: np.ndarray
    seed: int
    params: dict

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        """One row per point: coordinates then label."""
        with open(path, "w", encoding="utf-8") as fh:
            cols = [f"x{j}" for j in range(self.dimension)] + ["label"]
            fh.write(",".join(cols) + "\n")
            for i in range(self.size):
                coords = ",".join(repr(float(v)) for v in self.points[i])
                fh.write(f"{coords},{int(self.labels[i])}\n")


def _unit_rows(z: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(z * z, axis=1))
    norms = np.where(norms < 1e-300, 1.0, norms)
    return z / norms[:, None]


def generate_dataset(name: str, size: int, dimension: int, seed: int,
                     params: dict | None = None) -> Dataset:
    """Deterministic synthetic dataset, class balanced, clipped to [0,1]^d.

    Regeneration with identical arguments is bit-exact on every
    platform; the samplers avoid libm transcendentals entirely (circle
    positions come from normalized Gaussian pairs rather than angles).
    """
    if name not in DATASET_NAMES:
        raise ValueError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    if not isinstance(size, int) or size < 2 or size % 2 != 0:
        raise ValueError(f"size must be an even integer >= 2, got {size!r}")
    if not isinstance(dimension, int) or dimension < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dimension!r}")
    params = dict(params or {})
    stream = Stream.from_seed(seed, "dataset", name)
    labels = np.arange(size, dtype=np.int8) % 2

    if name == "gaussian-blobs":
        spread = float(params.setdefault("spread", 0.08))
        separation = float(params.setdefault("separation", 0.35))
        if spread <= 0 or separation <= 0:
            raise ValueError("spread and separation must be positive")
        half = separation / (2.0 * math.sqrt(dimension))
        c0 = np.full(dimension, 0.5 - half)
        c1 = np.full(dimension, 0.5 + half)
        z = stream.child("points").normals(size, dimension)
        pts = np.where(labels[:, None] == 0, c0, c1) + spread * z

    elif name == "concentric-spheres":
        threshold = float(params.setdefault("threshold", 0.25))
        inner_max = float(params.setdefault("inner_max", 0.20))
        outer_min = float(params.setdefault("outer_min", 0.31))
        outer_max = float(params.setdefault("outer_max", 0.46))
        if not 0 < inner_max < threshold < outer_min < outer_max:
            raise ValueError("need 0 < inner_max < threshold < outer_min < outer_max")
        center = np.full(dimension, 0.5)
        dirs = _unit_rows(stream.child("dirs").normals(size, dimension))
        u = stream.child("radii").uniforms(size)
        # class 1 inside, radial-uniform; class 0 in the outer shell
        radii = np.where(labels == 1, u * inner_max,
                         outer_min + u * (outer_max - outer_min))
        pts = center + radii[:, None] * dirs

    else:  # two-moons-embedded
        noise = float(params.setdefault("noise", 0.06))
        jitter = float(params.setdefault("jitter", 0.02))
        # uniform angle on the half circle from a normalized Gaussian
        # pair; avoids cos/sin for cross-platform bit-exactness
        g = _unit_rows(stream.child("arc").normals(size, 2))
        c, s = g[:, 0], np.abs(g[:, 1])
        mx = np.where(labels == 0, c, 1.0 - c)
        my = np.where(labels == 0, s, 0.5 - s)
        z = stream.child("noise").normals(size, dimension)
        mx = mx + noise * z[:, 0]
        my = my + noise * z[:, 1]
        pts = np.empty((size, dimension), dtype=np.float64)
        pts[:, 0] = (mx + 1.2) / 3.4
        pts[:, 1] = (my + 0.8) / 2.6
        if dimension > 2:
            pts[:, 2:] = 0.5 + jitter * z[:, 2:]

    pts = np.clip(pts, 0.0, 1.0)
    if name == "concentric-spheres":
        # labels follow the distance rule on the final coordinates
        center = np.full(dimension, 0.5)
        dist = np.sqrt(np.sum((pts - center) ** 2, axis=1))
        labels = (dist < threshold).astype(np.int8)
    return Dataset(name=name, points=pts, labels=labels, seed=seed, params=params)


def accuracy(classifier: Classifier, dataset: Dataset) -> float:
    if dataset.size == 0:
        raise ValueError("accuracy of an empty dataset is undefined")
    decided = classifier.decide_batch(dataset.points)
    return float(np.mean(decided == dataset.labels.astype(np.int8)))


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 16
    epochs: int = 150
    learning_rate: float = 0.05
    seed: int = 0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 1:
            raise ValueError("hidden and epochs must be positive")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


def _isru(s):
    return s / np.sqrt(1.0 + s * s)


def _isru_grad(s):
    t = 1.0 + s * s
    return 1.0 / (t * np.sqrt(t))


def train_mlp(dataset: Dataset, config: TrainConfig) -> MlpClassifier:
    """Plain per-sample SGD on softmax cross-entropy.

    The visit order each epoch is a seeded permutation; optional
    Gaussian augmentation draws one fresh perturbation per sample per
    epoch from the same stream family.  Raises TrainingDivergedError
    naming the epoch if the loss leaves the finite range.
    """
    d = dataset.dimension
    h = config.hidden
    n = dataset.size
    root = Stream.from_seed(config.seed, "train-mlp")
    init = root.child("init")
    w1 = init.child("w1").normals(h, d) / math.sqrt(d)
    w2 = init.child("w2").normals(h, h) / math.sqrt(h)
    w3 = init.child("w3").normals(2, h) / math.sqrt(h)
    b1 = np.zeros(h)
    b2 = np.zeros(h)
    b3 = np.zeros(2)
    lr = config.learning_rate
    pts = dataset.points
    lbl = dataset.labels
    final_loss = math.inf

    for epoch in range(config.epochs):
        order = root.child("shuffle", epoch).permutation(n)
        if config.noise_sigma > 0.0:
            aug = config.noise_sigma * root.child("augment", epoch).normals(n, d)
        else:
            aug = None
        total = 0.0
        # saturation arithmetic (inf/0 propagation) is the divergence
        # detector; suppress the warnings, keep the values
        with np.errstate(over="ignore", invalid="ignore"):
            for idx in order:
                x = pts[idx] if aug is None else pts[idx] + aug[idx]
                y = int(lbl[idx])
                s1 = w1 @ x + b1
                a1 = _isru(s1)
                s2 = w2 @ a1 + b2
                a2 = _isru(s2)
                logits = w3 @ a2 + b3
                if not np.isfinite(logits).all():
                    raise TrainingDivergedError(epoch, float("inf"))
                m = logits.max()
                ex = np.exp(logits - m)
                probs = ex / ex.sum()
                p_y = probs[y]
                # clip the per-sample CE so one saturated mistake cannot
                # dominate the epoch loss
                total += -math.log(p_y) if p_y > 1e-300 else 690.8
                # backprop
                dlogits = probs.copy()
                dlogits[y] -= 1.0
                da2 = w3.T @ dlogits
                ds2 = da2 * _isru_grad(s2)
                da1 = w2.T @ ds2
                ds1 = da1 * _isru_grad(s1)
                w3 -= lr * np.outer(dlogits, a2)
                b3 -= lr * dlogits
                w2 -= lr * np.outer(ds2, a1)
                b2 -= lr * ds2
                w1 -= lr * np.outer(ds1, x)
                b1 -= lr * ds1
        final_loss = total / n
        # per-sample CE is clipped at ~690.8, so a non-finite mean is
        # impossible in-protocol; a mean beyond any healthy scale means
        # runaway saturation (healthy training starts near ln 2)
        if not math.isfinite(final_loss) or final_loss > 50.0:
            raise TrainingDivergedError(epoch, final_loss)

    meta = {
        "hidden": h, "epochs": config.epochs,
        "learning_rate": config.learning_rate, "seed": config.seed,
        "noise_sigma": config.noise_sigma,
        "final_loss": final_loss,
        "dataset": {"name": dataset.name, "size": n, "dimension": d,
                    "seed": dataset.seed},
    }
    return MlpClassifier(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3, metadata=meta)


def _floats(arr: np.ndarray) -> list:
    """Nested lists of repr strings: decimal, full round-trip precision."""
    if arr.ndim == 1:
        return [repr(float(v)) for v in arr]
    return [_floats(row) for row in arr]


def _parse_floats(data, shape_hint=None) -> np.ndarray:
    return np.array(data, dtype=np.float64)


def save_classifier(classifier: Classifier, path) -> None:
    """Versioned JSON with weights as full-precision decimal strings."""
    if isinstance(classifier, LinearClassifier):
        body = {"type": "linear", "weights": _floats(classifier.weights),
                "bias": repr(classifier.bias)}
    elif isinstance(classifier, SphereClassifier):
        body = {"type": "sphere", "center": _floats(classifier.center),
                "radius": repr(classifier.radius)}
    elif isinstance(classifier, MlpClassifier):
        body = {"type": "mlp",
                "w1": _floats(classifier.w1), "b1": _floats(classifier.b1),
                "w2": _floats(classifier.w2), "b2": _floats(classifier.b2),
                "w3": _floats(classifier.w3), "b3": _floats(classifier.b3),
                "metadata": classifier.metadata}
    else:
        raise TypeError(f"cannot serialize {type(classifier)!r}")
    doc = {"format": _FORMAT, "version": _VERSION, **body}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_classifier(path) -> Classifier:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise ValueError(f"not a classifier document: format={doc.get('format')!r}")
    if doc.get("version") != _VERSION:
        raise ValueError(f"unsupported classifier version {doc.get('version')!r}")
    kind = doc.get("type")
    if kind == "linear":
        return LinearClassifier(
            weights=np.array([float(v) for v in doc["weights"]]),
            bias=float(doc["bias"]))
    if kind == "sphere":
        return SphereClassifier(
            center=np.array([float(v) for v in doc["center"]]),
            radius=float(doc["radius"]))
    if kind == "mlp":
        def grab(name):
            raw = doc[name]
            if raw and isinstance(raw[0], list):
                return np.array([[float(v) for v in row] for row in raw])
            return np.array([float(v) for v in raw])
        return MlpClassifier(w1=grab("w1"), b1=grab("b1"), w2=grab("w2"),
                             b2=grab("b2"), w3=grab("w3"), b3=grab("b3"),
                             metadata=doc.get("metadata", {}))
    raise ValueError(f"unknown classifier type {kind!r}")
