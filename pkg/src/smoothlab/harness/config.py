"""Experiment specs: TOML in, validated plan out, resolved TOML back.

A spec file names one experiment kind and the grids it sweeps. Parsing
resolves every default so the plan that actually ran can be written
back out (spec.resolved.toml) and audited or re-run byte-for-byte.
Validation happens entirely before any computation; error messages name
the offending field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

try:
    import tomllib as _toml  # py311+
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as _toml

KINDS = ("certify", "attack-sweep", "binary-search-dist", "slice",
         "direction-profile", "sorm-check")
ATTACK_NAMES = ("hsja", "surfree", "rays")
CLASSIFIER_KINDS = ("linear", "sphere", "mlp")
DATASET_NAMES = ("gaussian-blobs", "concentric-spheres",
                 "two-moons-embedded")

#: sections each kind requires beyond the top-level fields
_NEEDS = {
    "certify": ("dataset", "classifier", "smoothing"),
    "attack-sweep": ("dataset", "classifier", "smoothing", "attack"),
    "binary-search-dist": ("dataset", "classifier", "smoothing", "probe"),
    "slice": ("dataset", "classifier", "smoothing", "probe"),
    "direction-profile": ("dataset", "classifier", "smoothing", "probe"),
    "sorm-check": ("sorm",),
}


class SpecError(ValueError):
    """An experiment spec failed validation (raised before any work)."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecError(msg)


def _as_int(d: dict, key: str, default=None, minimum=None, section="") -> int:
    where = f"{section}.{key}" if section else key
    value = d.get(key, default)
    _require(value is not None, f"missing required field {where}")
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"{where} must be an integer")
    if minimum is not None:
        _require(value >= minimum, f"{where} must be >= {minimum}")
    return value


def _as_float(d: dict, key: str, default=None, section="") -> float:
    where = f"{section}.{key}" if section else key
    value = d.get(key, default)
    _require(value is not None, f"missing required field {where}")
    _require(isinstance(value, (int, float)) and not isinstance(value, bool)
             and math.isfinite(float(value)), f"{where} must be a finite number")
    return float(value)


def _as_float_list(d: dict, key: str, default=None, section="") -> list:
    where = f"{section}.{key}" if section else key
    value = d.get(key, default)
    _require(value is not None, f"missing required field {where}")
    _require(isinstance(value, (list, tuple)) and len(value) > 0,
             f"{where} must be a nonempty list")
    out = []
    for v in value:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool)
                 and math.isfinite(float(v)),
                 f"{where} entries must be finite numbers")
        out.append(float(v))
    return out


def _unknown_keys(d: dict, allowed, section: str) -> None:
    extra = sorted(set(d) - set(allowed))
    _require(not extra, f"unknown field(s) in [{section}]: {', '.join(extra)}")


def _dataset_section(raw: dict) -> dict:
    _unknown_keys(raw, ("name", "size", "dimension", "seed", "params"),
                  "dataset")
    name = raw.get("name", "gaussian-blobs")
    _require(name in DATASET_NAMES,
             f"dataset.name must be one of {DATASET_NAMES}, got {name!r}")
    out = {
        "name": name,
        "size": _as_int(raw, "size", 200, 2, "dataset"),
        "dimension": _as_int(raw, "dimension", 8, 2, "dataset"),
        "seed": _as_int(raw, "seed", 0, 0, "dataset"),
    }
    params = raw.get("params", {})
    _require(isinstance(params, dict), "dataset.params must be a table")
    if params:
        out["params"] = dict(params)
    return out


def _classifier_section(raw: dict) -> dict:
    kind = raw.get("kind")
    _require(kind in CLASSIFIER_KINDS,
             f"classifier.kind must be one of {CLASSIFIER_KINDS}, got {kind!r}")
    if kind == "linear":
        _unknown_keys(raw, ("kind", "weights", "bias", "fit"), "classifier")
        if "weights" in raw:
            weights = _as_float_list(raw, "weights", section="classifier")
            return {"kind": "linear", "weights": weights,
                    "bias": _as_float(raw, "bias", 0.0, "classifier")}
        fit = raw.get("fit", "centroid")
        _require(fit == "centroid",
                 "classifier.fit supports only 'centroid' "
                 "(or give explicit weights)")
        return {"kind": "linear", "fit": "centroid"}
    if kind == "sphere":
        _unknown_keys(raw, ("kind", "center", "radius"), "classifier")
        center = _as_float_list(raw, "center", section="classifier")
        radius = _as_float(raw, "radius", section="classifier")
        _require(radius > 0.0, "classifier.radius must be positive")
        return {"kind": "sphere", "center": center, "radius": radius}
    _unknown_keys(raw, ("kind", "hidden", "epochs", "learning_rate",
                        "noise_sigma", "train_seed"), "classifier")
    return {
        "kind": "mlp",
        "hidden": _as_int(raw, "hidden", 12, 1, "classifier"),
        "epochs": _as_int(raw, "epochs", 60, 1, "classifier"),
        "learning_rate": _as_float(raw, "learning_rate", 0.05, "classifier"),
        "noise_sigma": _as_float(raw, "noise_sigma", 0.0, "classifier"),
        "train_seed": _as_int(raw, "train_seed", 0, 0, "classifier"),
    }


def _smoothing_section(raw: dict) -> dict:
    _unknown_keys(raw, ("sigmas", "ns", "alpha", "calibrate_drops"),
                  "smoothing")
    out = {}
    if "sigmas" in raw:
        sigmas = _as_float_list(raw, "sigmas", section="smoothing")
        _require(all(s > 0 for s in sigmas),
                 "smoothing.sigmas must all be positive")
        out["sigmas"] = sigmas
    else:
        # no sigmas given: the runner calibrates them from accuracy drops
        out["sigmas"] = []
    if raw.get("calibrate_drops") == [] and out["sigmas"]:
        out["calibrate_drops"] = []  # explicit: sigmas given, no calibration
    elif "calibrate_drops" in raw or not out["sigmas"]:
        drops = _as_float_list(raw, "calibrate_drops", [0.03, 0.12],
                               "smoothing")
        _require(all(0 < v < 1 for v in drops),
                 "smoothing.calibrate_drops must lie in (0, 1)")
        out["calibrate_drops"] = drops
    else:
        out["calibrate_drops"] = []
    ns = raw.get("ns", [10, 50, 200])
    _require(isinstance(ns, list) and len(ns) > 0,
             "smoothing.ns must be a nonempty list")
    for n in ns:
        _require(isinstance(n, int) and not isinstance(n, bool) and n >= 1,
                 "smoothing.ns entries must be integers >= 1")
    out["ns"] = list(ns)
    alpha = _as_float(raw, "alpha", 0.001, "smoothing")
    _require(0.0 < alpha < 1.0, "smoothing.alpha must be in (0, 1)")
    out["alpha"] = alpha
    return out


def _attack_section(raw: dict) -> dict:
    _unknown_keys(raw, ("names", "budget", "pa", "init_cap", "bisect_tol"),
                  "attack")
    names = raw.get("names", list(ATTACK_NAMES))
    _require(isinstance(names, list) and len(names) > 0,
             "attack.names must be a nonempty list")
    for name in names:
        _require(name in ATTACK_NAMES,
                 f"attack.names entries must be from {ATTACK_NAMES}, "
                 f"got {name!r}")
    _require(len(set(names)) == len(names), "attack.names has duplicates")
    pa = _as_float_list(raw, "pa", [0.5, 0.8], "attack")
    _require(all(0.5 <= v < 1.0 for v in pa),
             "attack.pa entries must lie in [0.5, 1)")
    return {
        "names": list(names),
        "budget": _as_int(raw, "budget", 2000, 1, "attack"),
        "pa": pa,
        "init_cap": _as_int(raw, "init_cap", 100, 1, "attack"),
        "bisect_tol": _as_float(raw, "bisect_tol", 1e-3, "attack"),
    }


def _probe_section(raw: dict, kind: str) -> dict:
    if kind == "binary-search-dist":
        _unknown_keys(raw, ("trials", "tol", "x_in", "x_out"), "probe")
        out = {
            "trials": _as_int(raw, "trials", 200, 1, "probe"),
            "tol": _as_float(raw, "tol", 1e-3, "probe"),
        }
        _require(out["tol"] > 0, "probe.tol must be positive")
        has_in, has_out = "x_in" in raw, "x_out" in raw
        _require(has_in == has_out,
                 "probe.x_in and probe.x_out must be given together")
        if has_in:
            out["x_in"] = _as_float_list(raw, "x_in", section="probe")
            out["x_out"] = _as_float_list(raw, "x_out", section="probe")
            _require(len(out["x_in"]) == len(out["x_out"]),
                     "probe.x_in and probe.x_out must have equal length")
        return out
    if kind == "slice":
        _unknown_keys(raw, ("extent", "resolution"), "probe")
        out = {
            "extent": _as_float(raw, "extent", 1.0, "probe"),
            "resolution": _as_int(raw, "resolution", 31, 2, "probe"),
        }
        _require(out["extent"] > 0, "probe.extent must be positive")
        return out
    # direction-profile
    _unknown_keys(raw, ("t_max", "t_steps", "probes"), "probe")
    out = {
        "t_max": _as_float(raw, "t_max", 2.5, "probe"),
        "t_steps": _as_int(raw, "t_steps", 26, 2, "probe"),
        "probes": _as_int(raw, "probes", 200, 1, "probe"),
    }
    _require(out["t_max"] > 0, "probe.t_max must be positive")
    return out


def _sorm_section(raw: dict) -> dict:
    _unknown_keys(raw, ("betas", "beta_kappas", "dimension", "sigma"), "sorm")
    betas = _as_float_list(raw, "betas", [0.5, 1.0, 1.5, 2.0], "sorm")
    _require(all(b > 0 for b in betas), "sorm.betas must be positive")
    kappas = _as_float_list(raw, "beta_kappas",
                            [-0.45, -0.25, -0.1, 0.1, 0.25, 0.45], "sorm")
    _require(all(-1.0 < v < 1.0 and v != 0.0 for v in kappas),
             "sorm.beta_kappas must be nonzero and in (-1, 1)")
    out = {
        "betas": betas,
        "beta_kappas": kappas,
        "dimension": _as_int(raw, "dimension", 3, 2, "sorm"),
        "sigma": _as_float(raw, "sigma", 0.25, "sorm"),
    }
    _require(out["sigma"] > 0, "sorm.sigma must be positive")
    return out


def _certify_section(raw: dict, classifier: Optional[dict]) -> dict:
    _unknown_keys(raw, ("mode",), "certify")
    mode = raw.get("mode", "mc")
    _require(mode in ("mc", "exact"),
             f"certify.mode must be 'mc' or 'exact', got {mode!r}")
    if mode == "exact":
        _require(classifier is not None
                 and classifier["kind"] in ("linear", "sphere"),
                 "certify.mode = 'exact' needs a linear or sphere classifier")
    return {"mode": mode}


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment plan; every field has its final value."""

    kind: str
    seed: int
    out_dir: Optional[str]
    points: int
    dataset: Optional[dict]
    classifier: Optional[dict]
    smoothing: Optional[dict]
    attack: Optional[dict]
    probe: Optional[dict]
    sorm: Optional[dict]
    certify: Optional[dict]

    @classmethod
    def from_dict(cls, raw: dict, kind_override: Optional[str] = None,
                  seed_override: Optional[int] = None,
                  out_override: Optional[str] = None) -> "ExperimentSpec":
        _require(isinstance(raw, dict), "spec must be a table")
        _unknown_keys(raw, ("kind", "seed", "out_dir", "points", "dataset",
                            "classifier", "smoothing", "attack", "probe",
                            "sorm", "certify"), "spec")
        kind = kind_override or raw.get("kind")
        _require(kind is not None, "missing required field kind")
        _require(kind in KINDS, f"kind must be one of {KINDS}, got {kind!r}")
        if kind_override and "kind" in raw:
            _require(raw["kind"] == kind_override,
                     f"config kind {raw['kind']!r} does not match the "
                     f"requested {kind_override!r}")

        if seed_override is not None:
            seed = seed_override
            _require(isinstance(seed, int) and not isinstance(seed, bool)
                     and seed >= 0, "seed must be a nonnegative integer")
        else:
            seed = _as_int(raw, "seed", None, 0)  # no wall-clock fallback

        out_dir = out_override if out_override is not None \
            else raw.get("out_dir")
        if out_dir is not None:
            _require(isinstance(out_dir, str) and out_dir,
                     "out_dir must be a nonempty string")
        points = _as_int(raw, "points", 20, 1)

        needs = _NEEDS[kind]
        sections = {}
        for name in ("dataset", "classifier", "smoothing", "attack",
                     "probe", "sorm", "certify"):
            sec = raw.get(name)
            if sec is not None:
                _require(isinstance(sec, dict), f"[{name}] must be a table")

        if "dataset" in needs or raw.get("dataset") is not None:
            sections["dataset"] = _dataset_section(raw.get("dataset", {}))
        if "classifier" in needs:
            _require(raw.get("classifier") is not None,
                     f"{kind} requires a [classifier] table")
            sections["classifier"] = _classifier_section(raw["classifier"])
        if "smoothing" in needs or raw.get("smoothing") is not None:
            sections["smoothing"] = _smoothing_section(raw.get("smoothing",
                                                               {}))
        if kind == "attack-sweep":
            sections["attack"] = _attack_section(raw.get("attack", {}))
        if "probe" in needs:
            sections["probe"] = _probe_section(raw.get("probe", {}), kind)
        if kind == "sorm-check":
            sections["sorm"] = _sorm_section(raw.get("sorm", {}))
        if kind == "certify":
            sections["certify"] = _certify_section(
                raw.get("certify", {}), sections.get("classifier"))

        if kind == "binary-search-dist":
            _require(sections["classifier"]["kind"] in ("linear", "sphere"),
                     "binary-search-dist needs a linear or sphere classifier "
                     "(the true frontier crossing must have a closed form)")
            if "x_in" not in sections["probe"]:
                _require(sections.get("dataset") is not None,
                         "binary-search-dist needs a [dataset] when "
                         "probe.x_in/x_out are not given")

        if sections.get("dataset") is not None \
                and sections.get("classifier") is not None:
            clf = sections["classifier"]
            dim = sections["dataset"]["dimension"]
            if clf["kind"] == "linear" and "weights" in clf:
                _require(len(clf["weights"]) == dim,
                         "classifier.weights length must equal "
                         "dataset.dimension")
            if clf["kind"] == "sphere":
                _require(len(clf["center"]) == dim,
                         "classifier.center length must equal "
                         "dataset.dimension")
            _require(points <= sections["dataset"]["size"],
                     "points cannot exceed dataset.size")

        return cls(kind=kind, seed=seed, out_dir=out_dir, points=points,
                   dataset=sections.get("dataset"),
                   classifier=sections.get("classifier"),
                   smoothing=sections.get("smoothing"),
                   attack=sections.get("attack"),
                   probe=sections.get("probe"),
                   sorm=sections.get("sorm"),
                   certify=sections.get("certify"))

    @classmethod
    def from_toml(cls, path, **overrides) -> "ExperimentSpec":
        with open(path, "rb") as fh:
            try:
                raw = _toml.load(fh)
            except _toml.TOMLDecodeError as exc:
                raise SpecError(f"invalid TOML in {path}: {exc}") from exc
        return cls.from_dict(raw, **overrides)

    def resolved(self) -> dict:
        """Plain dict of everything that will actually run."""
        out = {"kind": self.kind, "seed": self.seed, "points": self.points}
        if self.out_dir is not None:
            out["out_dir"] = self.out_dir
        for name in ("dataset", "classifier", "smoothing", "attack",
                     "probe", "sorm", "certify"):
            value = getattr(self, name.replace("-", "_"))
            if value is not None:
                out[name] = value
        return out

    def with_sigmas(self, sigmas: list) -> "ExperimentSpec":
        """Copy with calibrated sigma values filled in."""
        smoothing = dict(self.smoothing)
        smoothing["sigmas"] = [float(s) for s in sigmas]
        return ExperimentSpec(
            kind=self.kind, seed=self.seed, out_dir=self.out_dir,
            points=self.points, dataset=self.dataset,
            classifier=self.classifier, smoothing=smoothing,
            attack=self.attack, probe=self.probe, sorm=self.sorm,
            certify=self.certify)


def format_float(value: float) -> str:
    """9 significant digits, with a marker keeping TOML's float type."""
    text = f"{value:.9g}"
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def emit_toml(data: dict) -> str:
    """Deterministic TOML: sorted keys, scalars before tables, 9 sig digits.

    Covers exactly the value shapes resolved specs use (scalars, lists
    of scalars, nested tables); not a general emitter.
    """
    lines = []

    def emit_table(d: dict, prefix: str) -> None:
        scalars = {k: v for k, v in d.items() if not isinstance(v, dict)}
        tables = {k: v for k, v in d.items() if isinstance(v, dict)}
        for key in sorted(scalars):
            lines.append(f"{key} = {_toml_scalar(scalars[key])}")
        for key in sorted(tables):
            name = f"{prefix}.{key}" if prefix else key
            if lines and lines[-1] != "":
                lines.append("")
            lines.append(f"[{name}]")
            emit_table(tables[key], name)

    emit_table(data, "")
    return "\n".join(lines) + "\n"


def parse_resolved(path) -> ExperimentSpec:
    """Reload a spec.resolved.toml written by the runner."""
    return ExperimentSpec.from_toml(path)
