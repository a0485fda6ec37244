"""Experiment execution: grids in, sorted records and summaries out.

Everything downstream of a spec is deterministic. Records are built
from 9-significant-digit rounded values, so the CSV on disk, the
in-memory record list, and any reload of that CSV carry bit-identical
numbers; summaries are computed from the rounded records and can be
recomputed from the CSV alone (the report command does exactly that).

Worker pools only change wall-clock time: every run unit derives its
noise streams from (master seed, unit key), never from execution order,
and records are sorted by key before persisting.
"""
from __future__ import annotations

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..attacks import AttackConfig, attack_hsja, attack_rays, attack_surfree
from ..backend import BACKEND_NAME
from ..classifiers import (Dataset, LinearClassifier, MlpClassifier,
                           SphereClassifier, TrainConfig, generate_dataset,
                           train_mlp)
from ..probes import (DecisionOracle, binary_search_distribution,
                      direction_profile, slice_map)
from ..rng import Stream
from ..smoothing import (CurvatureProfile, PI_CLAMP, SmoothingConfig,
                         certified_radius, exact_pi, smoothed_decide,
                         sorm_pi0, verify_adversarial)
from . import plots
from .config import ExperimentSpec, emit_toml, format_float

_ATTACK_FNS = {"hsja": attack_hsja, "surfree": attack_surfree,
               "rays": attack_rays}

COLUMNS = {
    "certify": ["point_id", "sigma", "n", "mode", "label_true",
                "label_smoothed", "correct", "pi_hat", "pi_lower",
                "radius_lower", "tie"],
    "attack-sweep": ["point_id", "sigma", "n", "attack", "pa", "label_true",
                     "label_o", "distortion", "queries", "reason",
                     "adversarial", "flips", "trials", "radius_lower"],
    "binary-search-dist": ["sigma", "n", "trial", "offset", "crossing_t"],
    "slice": ["slice_id", "kind", "sigma", "n", "u", "v", "label"],
    "direction-profile": ["kind", "sigma", "n", "t", "flip_prob"],
    "sorm-check": ["beta", "beta_kappa", "dimension", "sigma", "sorm_pi0",
                   "exact_pi0", "rel_err", "clamped"],
}

_INT_COLUMNS = {"point_id", "n", "label_true", "label_smoothed", "correct",
                "tie", "queries", "adversarial", "flips", "trials", "trial",
                "label", "dimension", "clamped", "queries_used"}
_STR_COLUMNS = {"mode", "attack", "reason", "slice_id", "kind"}

MILESTONE_COLUMNS = ["point_id", "sigma", "n", "attack", "queries_used",
                     "best_distortion"]


def round9(value: float) -> float:
    """Snap to 9 significant digits, the on-disk precision."""
    return float(f"{float(value):.9g}")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in _STR_COLUMNS:
        return text
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


# ---------------------------------------------------------------- fixtures

def build_dataset(spec: ExperimentSpec) -> Optional[Dataset]:
    if spec.dataset is None:
        return None
    d = spec.dataset
    return generate_dataset(d["name"], d["size"], d["dimension"], d["seed"],
                            d.get("params"))


def build_classifier(spec: ExperimentSpec, dataset: Optional[Dataset]):
    c = spec.classifier
    if c["kind"] == "linear":
        if "weights" in c:
            return LinearClassifier(np.asarray(c["weights"]), c["bias"])
        # centroid fit: the class-mean difference as the normal
        pts, labels = dataset.points, dataset.labels
        mean1 = pts[labels == 1].mean(axis=0)
        mean0 = pts[labels == 0].mean(axis=0)
        w = mean1 - mean0
        b = -float(w @ ((mean1 + mean0) / 2.0))
        return LinearClassifier(w, b)
    if c["kind"] == "sphere":
        return SphereClassifier(np.asarray(c["center"]), c["radius"])
    cfg = TrainConfig(hidden=c["hidden"], epochs=c["epochs"],
                      learning_rate=c["learning_rate"],
                      seed=c["train_seed"], noise_sigma=c["noise_sigma"])
    return train_mlp(dataset, cfg)


def select_points(spec: ExperimentSpec, dataset: Dataset):
    """Seeded sample of dataset rows; ids index the original dataset."""
    perm = Stream.from_seed(spec.seed, "point-order").permutation(
        dataset.size)
    ids = sorted(int(i) for i in perm[: spec.points])
    return ids, dataset.points[ids], dataset.labels[ids]


# ------------------------------------------------------------- calibration

def _smoothed_accuracy(classifier, points, labels, sigma: float,
                       master_seed: int, exact: bool,
                       n_cal: int = 199) -> float:
    hits = 0
    for i, (x, y) in enumerate(zip(points, labels)):
        if exact:
            p1 = exact_pi(classifier, x, sigma)
            label = 1 if p1 > 0.5 else 0
        else:
            cfg = SmoothingConfig(sigma=sigma, n=n_cal, alpha=0.01,
                                  seed=master_seed)
            # noise keyed by point only: every sigma probed during the
            # search sees the same standard normals, so accuracy is a
            # deterministic function of sigma (common random numbers)
            stream = Stream.from_seed(master_seed, "calibrate", i)
            label = smoothed_decide(classifier, cfg, x, stream).label
        hits += int(label == int(y))
    return hits / len(points)


def calibrate_sigmas(classifier, points, labels, drops, master_seed: int):
    """Bisect sigma until smoothed accuracy drops by each target amount.

    Exact smoothed labels are used when the classifier geometry allows;
    otherwise 199-vote Monte Carlo decisions (seeded, deterministic).
    The sweep itself is recorded so the calibration can be audited.
    """
    exact = not isinstance(classifier, MlpClassifier)
    base_acc = float(np.mean(
        [classifier.decide(x) == int(y) for x, y in zip(points, labels)]))
    sigmas, achieved = [], []
    for target in drops:
        lo, hi = 1e-3, 2.0
        drop_hi = base_acc - _smoothed_accuracy(
            classifier, points, labels, hi, master_seed, exact)
        if drop_hi < target:
            sigma = hi  # even huge noise does not drop enough; take the cap
        else:
            for _ in range(24):
                mid = 0.5 * (lo + hi)
                drop = base_acc - _smoothed_accuracy(
                    classifier, points, labels, mid, master_seed, exact)
                if drop < target:
                    lo = mid
                else:
                    hi = mid
            sigma = hi  # smallest probed sigma whose drop reaches the target
        sigma = round9(sigma)
        final_drop = base_acc - _smoothed_accuracy(
            classifier, points, labels, sigma, master_seed, exact)
        sigmas.append(sigma)
        achieved.append(round9(final_drop))
    metadata = {
        "mode": "exact" if exact else "mc-199",
        "targets": [round9(t) for t in drops],
        "base_accuracy": round9(base_acc),
        "sigmas": sigmas,
        "achieved_drops": achieved,
    }
    return sigmas, metadata


# ------------------------------------------------------------ result sets

@dataclass
class ResultSet:
    spec: ExperimentSpec
    columns: list
    records: list
    summary: dict
    extras: dict  # filename -> (columns, records)

    @property
    def kind(self) -> str:
        return self.spec.kind

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "records.csv", self.columns, self.records)
        for name, (cols, rows) in sorted(self.extras.items()):
            _write_csv(out / name, cols, rows)
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(out / "spec.resolved.toml", "w", encoding="utf-8") as fh:
            fh.write(emit_toml(self.spec.resolved()))
        for plot_kind, filename in plots.DEFAULT_PLOTS.get(self.kind, ()):
            plots.emit_plot(self, plot_kind, out / filename)
        return out


def _write_csv(path, columns, records) -> None:
    lines = [",".join(columns)]
    for rec in records:
        lines.append(",".join(_cell(rec[c]) for c in columns))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_records(path, kind: str, columns=None) -> list:
    """Typed reload of a records.csv written by ResultSet.write."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    if columns is None:
        columns = COLUMNS[kind]
    if header != list(columns):
        raise ValueError(f"unexpected columns in {path}: {header}")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        out.append({c: parse_cell(c, text) for c, text in zip(header, cells)})
    return out


# ----------------------------------------------------------- attack sweep

_CTX = None


def _init_worker(ctx) -> None:
    global _CTX
    _CTX = ctx


def _attack_unit(task):
    """One (point, sigma, n, attack) run; returns rows or an error entry."""
    pid, x, y_true, si, ni, attack_name = task
    ctx = _CTX
    master = ctx["seed"]
    sigma = ctx["sigmas"][si]
    n = ctx["ns"][ni]
    clf = ctx["classifier"]
    try:
        scfg = SmoothingConfig(sigma=sigma, n=n, alpha=ctx["alpha"],
                               seed=master)
        decision = smoothed_decide(
            clf, scfg, x, Stream.from_seed(master, "decide", pid, si, ni))
        if decision.label != int(y_true):
            return ("skip", pid, si, ni, attack_name)
        oracle = DecisionOracle.from_smoothed(
            clf, scfg, Stream.from_seed(master, "attack", pid, si, ni,
                                        attack_name))
        acfg = AttackConfig(
            budget=ctx["budget"], init_cap=ctx["init_cap"],
            bisect_tol=ctx["bisect_tol"],
            seed=Stream.from_seed(master, "attack-seed", pid, si, ni,
                                  attack_name).key)
        trace = _ATTACK_FNS[attack_name](oracle, x, decision.label, acfg)

        distortion = None if trace.final_distortion is None \
            else round9(trace.final_distortion)
        rows = []
        for pa_idx, pa in enumerate(ctx["pa"]):
            if trace.final_adversarial is None:
                adv, flips, trials = 0, None, None
            else:
                ev = verify_adversarial(
                    clf, scfg, trace.final_adversarial, decision.label, pa,
                    "repeated-query",
                    Stream.from_seed(master, "verify", pid, si, ni,
                                     attack_name, pa_idx))
                adv, flips, trials = int(ev.adversarial), ev.flips, ev.trials
            rows.append({
                "point_id": pid, "sigma": round9(sigma), "n": n,
                "attack": attack_name, "pa": round9(pa),
                "label_true": int(y_true), "label_o": decision.label,
                "distortion": distortion,
                "queries": oracle.query_count, "reason": trace.reason,
                "adversarial": adv, "flips": flips, "trials": trials,
                "radius_lower": round9(decision.certified_radius_lower),
            })
        milestones = [{
            "point_id": pid, "sigma": round9(sigma), "n": n,
            "attack": attack_name, "queries_used": q,
            "best_distortion": round9(dist),
        } for q, dist in trace.milestones]
        return ("ok", rows, milestones)
    except Exception as exc:  # partial failure: the sweep goes on
        key = f"point {pid}, sigma {sigma:.9g}, n {n}, {attack_name}"
        return ("error", key, f"{type(exc).__name__}: {exc}")


def _run_units(tasks, ctx, jobs: int, unit_fn):
    if jobs <= 1:
        _init_worker(ctx)
        return [unit_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(ctx,)) as pool:
        return list(pool.map(unit_fn, tasks, chunksize=1))


def _run_attack_sweep(spec, classifier, ids, points, labels, jobs):
    sm, atk = spec.smoothing, spec.attack
    ctx = {
        "seed": spec.seed, "classifier": classifier,
        "sigmas": sm["sigmas"], "ns": sm["ns"], "alpha": sm["alpha"],
        "budget": atk["budget"], "init_cap": atk["init_cap"],
        "bisect_tol": atk["bisect_tol"], "pa": atk["pa"],
    }
    tasks = [(pid, x, int(y), si, ni, name)
             for pid, x, y in zip(ids, points, labels)
             for si in range(len(sm["sigmas"]))
             for ni in range(len(sm["ns"]))
             for name in atk["names"]]
    records, milestones, errors, skipped = [], [], [], 0
    for result in _run_units(tasks, ctx, jobs, _attack_unit):
        if result[0] == "ok":
            records.extend(result[1])
            milestones.extend(result[2])
        elif result[0] == "skip":
            skipped += 1
        else:
            errors.append({"unit": result[1], "error": result[2]})
    records.sort(key=lambda r: (r["sigma"], r["n"], r["attack"],
                                r["point_id"], r["pa"]))
    milestones.sort(key=lambda r: (r["sigma"], r["n"], r["attack"],
                                   r["point_id"], r["queries_used"]))
    extras = {"milestones.csv": (MILESTONE_COLUMNS, milestones)}
    metadata = {"errors": sorted(errors, key=lambda e: e["unit"]),
                "skipped_units": skipped}
    return records, extras, metadata


# ---------------------------------------------------------------- certify

def _certify_unit(task):
    pid, x, y_true, si, ni = task
    ctx = _CTX
    sigma = ctx["sigmas"][si]
    clf = ctx["classifier"]
    master = ctx["seed"]
    try:
        if ctx["mode"] == "exact":
            p1 = exact_pi(clf, x, sigma)
            label = 1 if p1 > 0.5 else 0
            pi_win = max(p1, 1.0 - p1)
            clamped = min(max(pi_win, PI_CLAMP), 1.0 - PI_CLAMP)
            radius = certified_radius(clamped, sigma)
            row = {"point_id": pid, "sigma": round9(sigma), "n": 0,
                   "mode": "exact", "label_true": int(y_true),
                   "label_smoothed": label,
                   "correct": int(label == int(y_true)),
                   "pi_hat": round9(pi_win), "pi_lower": round9(pi_win),
                   "radius_lower": round9(radius), "tie": 0}
            return ("ok", [row])
        n = ctx["ns"][ni]
        cfg = SmoothingConfig(sigma=sigma, n=n, alpha=ctx["alpha"],
                              seed=master)
        dec = smoothed_decide(
            clf, cfg, x, Stream.from_seed(master, "certify", pid, si, ni))
        row = {"point_id": pid, "sigma": round9(sigma), "n": n, "mode": "mc",
               "label_true": int(y_true), "label_smoothed": dec.label,
               "correct": int(dec.label == int(y_true)),
               "pi_hat": round9(dec.pi_hat), "pi_lower": round9(dec.pi_lower),
               "radius_lower": round9(dec.certified_radius_lower),
               "tie": int(dec.tie)}
        return ("ok", [row])
    except Exception as exc:
        return ("error", f"point {pid}, sigma {sigma:.9g}",
                f"{type(exc).__name__}: {exc}")


def _run_certify(spec, classifier, ids, points, labels, jobs):
    sm = spec.smoothing
    mode = spec.certify["mode"]
    ctx = {"seed": spec.seed, "classifier": classifier, "mode": mode,
           "sigmas": sm["sigmas"], "ns": sm["ns"], "alpha": sm["alpha"]}
    n_indices = [0] if mode == "exact" else range(len(sm["ns"]))
    tasks = [(pid, x, int(y), si, ni)
             for pid, x, y in zip(ids, points, labels)
             for si in range(len(sm["sigmas"]))
             for ni in n_indices]
    records, errors = [], []
    for result in _run_units(tasks, ctx, jobs, _certify_unit):
        if result[0] == "ok":
            records.extend(result[1])
        else:
            errors.append({"unit": result[1], "error": result[2]})
    records.sort(key=lambda r: (r["sigma"], r["n"], r["point_id"]))
    return records, {}, {"errors": sorted(errors, key=lambda e: e["unit"])}


# ------------------------------------------------------------ probe kinds

def _bs_endpoints(spec, classifier, dataset):
    probe = spec.probe
    if "x_in" in probe:
        return (np.asarray(probe["x_in"], dtype=np.float64),
                np.asarray(probe["x_out"], dtype=np.float64))
    in_idx = out_idx = None
    for i in range(dataset.size):
        label = classifier.decide(dataset.points[i])
        if label == 1 and in_idx is None:
            in_idx = i
        elif label == 0 and out_idx is None:
            out_idx = i
        if in_idx is not None and out_idx is not None:
            return dataset.points[in_idx], dataset.points[out_idx]
    raise ValueError(
        "dataset has no point pair with differing base labels; give "
        "probe.x_in/x_out explicitly")


def _run_binary_search_dist(spec, classifier, dataset):
    sm, probe = spec.smoothing, spec.probe
    x_in, x_out = _bs_endpoints(spec, classifier, dataset)
    records, errors, stats_meta = [], [], []
    for si, sigma in enumerate(sm["sigmas"]):
        for ni, n in enumerate(sm["ns"]):
            cfg = SmoothingConfig(sigma=sigma, n=n, alpha=sm["alpha"],
                                  seed=spec.seed)
            seed = Stream.from_seed(spec.seed, "bs", si, ni).key
            try:
                stats = binary_search_distribution(
                    classifier, cfg, x_in, x_out, trials=probe["trials"],
                    tol=probe["tol"], seed=seed)
            except Exception as exc:
                errors.append({"unit": f"sigma {sigma:.9g}, n {n}",
                               "error": f"{type(exc).__name__}: {exc}"})
                continue
            crossing = round9(stats.crossing_t)
            for trial, offset in enumerate(stats.offsets):
                records.append({"sigma": round9(sigma), "n": n,
                                "trial": trial, "offset": round9(offset),
                                "crossing_t": crossing})
    records.sort(key=lambda r: (r["sigma"], r["n"], r["trial"]))
    metadata = {"errors": errors, "x_in": [round9(v) for v in x_in],
                "x_out": [round9(v) for v in x_out]}
    return records, {}, metadata


def _run_slice(spec, classifier, ids, points):
    sm, probe = spec.smoothing, spec.probe
    center = points[0]
    dirs = Stream.from_seed(spec.seed, "slice-dirs").normals(2,
                                                             center.shape[0])
    records = []

    def add_rows(slice_id, kind, sigma, n, grid):
        for i, u in enumerate(grid.us):
            for j, v in enumerate(grid.vs):
                records.append({"slice_id": slice_id, "kind": kind,
                                "sigma": round9(sigma), "n": n,
                                "u": round9(float(u)), "v": round9(float(v)),
                                "label": int(grid.labels[i, j])})

    base_grid = slice_map(DecisionOracle.from_base(classifier), center,
                          dirs[0], dirs[1], probe["extent"],
                          probe["resolution"])
    add_rows("base", "base", 0.0, 0, base_grid)
    for si, sigma in enumerate(sm["sigmas"]):
        for ni, n in enumerate(sm["ns"]):
            cfg = SmoothingConfig(sigma=sigma, n=n, alpha=sm["alpha"],
                                  seed=spec.seed)
            oracle = DecisionOracle.from_smoothed(
                classifier, cfg, Stream.from_seed(spec.seed, "slice", si, ni))
            grid = slice_map(oracle, center, dirs[0], dirs[1],
                             probe["extent"], probe["resolution"])
            add_rows(f"s{si}n{ni}", "smoothed", sigma, n, grid)
    # row order is already canonical: slices in emission order, row-major
    metadata = {"errors": [], "center_point_id": ids[0],
                "resolution": probe["resolution"],
                "extent": round9(probe["extent"])}
    return records, {}, metadata


def _run_direction_profile(spec, classifier, dataset, ids, points):
    sm, probe = spec.smoothing, spec.probe
    x_o = points[0]
    label_o = classifier.decide(x_o)
    target = None
    for i in range(dataset.size):
        if classifier.decide(dataset.points[i]) != label_o:
            target = dataset.points[i]
            break
    if target is None:
        raise ValueError("dataset has no point with the opposite base label "
                         "to aim the profile at")
    direction = target - x_o
    direction = direction / float(np.linalg.norm(direction))
    t_grid = np.linspace(0.0, probe["t_max"], probe["t_steps"])

    records = []
    for t in t_grid:
        flip = int(classifier.decide(x_o + t * direction) != label_o)
        records.append({"kind": "base", "sigma": 0.0, "n": 0,
                        "t": round9(float(t)), "flip_prob": float(flip)})
    for si, sigma in enumerate(sm["sigmas"]):
        for ni, n in enumerate(sm["ns"]):
            cfg = SmoothingConfig(sigma=sigma, n=n, alpha=sm["alpha"],
                                  seed=spec.seed)
            profile = direction_profile(
                classifier, cfg, x_o, direction, t_grid, probe["probes"],
                seed=Stream.from_seed(spec.seed, "profile", si, ni).key)
            for t, p in zip(profile.ts, profile.flip_probs):
                records.append({"kind": "smoothed", "sigma": round9(sigma),
                                "n": n, "t": round9(float(t)),
                                "flip_prob": round9(float(p))})
    records.sort(key=lambda r: (r["kind"], r["sigma"], r["n"], r["t"]))
    metadata = {"errors": [], "start_point_id": ids[0],
                "direction": [round9(v) for v in direction]}
    return records, {}, metadata


def _run_sorm_check(spec):
    cfg = spec.sorm
    d, sigma = cfg["dimension"], cfg["sigma"]
    records = []
    for beta in cfg["betas"]:
        for bk in cfg["beta_kappas"]:
            kappa_std = bk / beta
            rho = beta * sigma / abs(bk)  # sphere radius in input units
            center = np.zeros(d)
            center[0] = rho - beta * sigma if bk < 0 else rho + beta * sigma
            sphere = SphereClassifier(center, rho)
            x = np.zeros(d)
            p1 = exact_pi(sphere, x, sigma)
            exact_pi0 = (1.0 - p1) if bk < 0 else p1
            est = sorm_pi0(CurvatureProfile(
                beta=beta, curvatures=np.full(d - 1, kappa_std)))
            rel = abs(est.value - exact_pi0) / exact_pi0
            records.append({
                "beta": round9(beta), "beta_kappa": round9(bk),
                "dimension": d, "sigma": round9(sigma),
                "sorm_pi0": round9(est.value),
                "exact_pi0": round9(exact_pi0),
                "rel_err": round9(rel), "clamped": int(est.clamped)})
    records.sort(key=lambda r: (r["beta"], r["beta_kappa"]))
    return records, {}, {"errors": []}


# --------------------------------------------------------------- summaries

def _group(records, keys):
    groups = {}
    for rec in records:
        groups.setdefault(tuple(rec[k] for k in keys), []).append(rec)
    return groups


def _certify_stats(spec_dict, records) -> dict:
    curves = []
    for (sigma, n), group in sorted(_group(records, ("sigma", "n")).items()):
        total = len(group)
        correct = [r for r in group if r["correct"]]
        accuracy = round9(len(correct) / total) if total else 0.0
        radii = sorted({r["radius_lower"] for r in correct})
        curve = [[0.0, accuracy]]
        for radius in radii:
            if radius == 0.0:
                continue
            frac = sum(1 for r in correct if r["radius_lower"] >= radius)
            curve.append([radius, round9(frac / total)])
        mean_radius = round9(
            sum(r["radius_lower"] for r in correct) / len(correct)) \
            if correct else 0.0
        curves.append({"sigma": sigma, "n": n, "accuracy": accuracy,
                       "mean_radius_correct": mean_radius, "curve": curve})
    return {"curves": curves}


def _attack_stats(spec_dict, records) -> dict:
    points_total = spec_dict["points"]
    accuracy = []
    for (sigma, n), group in sorted(_group(records, ("sigma", "n")).items()):
        attacked = len({r["point_id"] for r in group})
        accuracy.append({"sigma": sigma, "n": n,
                         "attacked_points": attacked,
                         "accuracy": round9(attacked / points_total)})
    attack_means = []
    grouped = _group(records, ("sigma", "n", "attack"))
    for (sigma, n, attack), group in sorted(grouped.items()):
        per_point = {}
        for r in group:
            per_point[r["point_id"]] = r
        dists = [r["distortion"] for r in per_point.values()
                 if r["distortion"] is not None]
        ratios = [r["distortion"] / r["radius_lower"]
                  for r in per_point.values()
                  if r["distortion"] is not None and r["radius_lower"] > 0]
        entry = {"sigma": sigma, "n": n, "attack": attack,
                 "points": len(per_point),
                 "found": len(dists),
                 "mean_distortion": round9(statistics.mean(dists))
                 if dists else None,
                 "median_distortion": round9(statistics.median(dists))
                 if dists else None,
                 "median_ratio_to_radius": round9(statistics.median(ratios))
                 if ratios else None,
                 "min_ratio_to_radius": round9(min(ratios))
                 if ratios else None}
        attack_means.append(entry)
    adv = []
    grouped = _group(records, ("sigma", "n", "attack", "pa"))
    for (sigma, n, attack, pa), group in sorted(grouped.items()):
        frac = statistics.mean(r["adversarial"] for r in group)
        adv.append({"sigma": sigma, "n": n, "attack": attack, "pa": pa,
                    "adversarial_fraction": round9(frac)})
    return {"accuracy": accuracy, "attack_means": attack_means,
            "adversarial_fractions": adv}


def _bs_stats(spec_dict, records) -> dict:
    rows = []
    for (sigma, n), group in sorted(_group(records, ("sigma", "n")).items()):
        offsets = [r["offset"] for r in group]
        mean = statistics.mean(offsets)
        var = statistics.mean((o - mean) ** 2 for o in offsets)
        rows.append({"sigma": sigma, "n": n, "trials": len(offsets),
                     "mean_offset": round9(mean),
                     "std_offset": round9(var ** 0.5),
                     "crossing_t": group[0]["crossing_t"]})
    return {"offset_spread": rows}


def _slice_stats(spec_dict, records) -> dict:
    rows = []
    for (slice_id,), group in sorted(_group(records, ("slice_id",)).items()):
        frac = statistics.mean(r["label"] for r in group)
        rows.append({"slice_id": slice_id, "sigma": group[0]["sigma"],
                     "n": group[0]["n"], "cells": len(group),
                     "label1_fraction": round9(frac)})
    return {"slices": rows}


def _profile_stats(spec_dict, records) -> dict:
    rows = []
    grouped = _group(records, ("kind", "sigma", "n"))
    for (kind, sigma, n), group in sorted(grouped.items()):
        group = sorted(group, key=lambda r: r["t"])
        half_t = None
        for r in group:
            if r["flip_prob"] >= 0.5:
                half_t = r["t"]
                break
        rows.append({"kind": kind, "sigma": sigma, "n": n,
                     "first_half_flip_t": half_t,
                     "flip_at_end": group[-1]["flip_prob"]})
    return {"profiles": rows}


def _sorm_stats(spec_dict, records) -> dict:
    worst = max(records, key=lambda r: r["rel_err"])
    rel = [r["rel_err"] for r in records]
    return {"sorm": {
        "cells": len(records),
        "max_rel_err": round9(max(rel)),
        "median_rel_err": round9(statistics.median(rel)),
        "cells_within_15pct": sum(1 for v in rel if v <= 0.15),
        "worst_cell": {"beta": worst["beta"],
                       "beta_kappa": worst["beta_kappa"],
                       "rel_err": worst["rel_err"]},
    }}


_STATS_FNS = {
    "certify": _certify_stats,
    "attack-sweep": _attack_stats,
    "binary-search-dist": _bs_stats,
    "slice": _slice_stats,
    "direction-profile": _profile_stats,
    "sorm-check": _sorm_stats,
}


def summarize(kind: str, spec_dict: dict, records: list) -> dict:
    """Stats recomputable from the records alone (given the spec)."""
    stats = _STATS_FNS[kind](spec_dict, records) if records else {}
    return {"counts": {"records": len(records)}, "stats": stats}


# ------------------------------------------------------------- entry point

def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ResultSet:
    """Execute one spec; returns records, summary and extra tables.

    The returned ResultSet is not yet persisted; call .write(out_dir).
    """
    dataset = build_dataset(spec)
    classifier = build_classifier(spec, dataset) \
        if spec.classifier is not None else None
    metadata = {"backend": BACKEND_NAME}

    if spec.smoothing is not None and not spec.smoothing["sigmas"]:
        ids, points, labels = select_points(spec, dataset)
        sigmas, calibration = calibrate_sigmas(
            classifier, points, labels, spec.smoothing["calibrate_drops"],
            spec.seed)
        spec = spec.with_sigmas(sigmas)
        metadata["calibration"] = calibration

    if spec.dataset is not None:
        ids, points, labels = select_points(spec, dataset)

    kind = spec.kind
    if kind == "attack-sweep":
        records, extras, meta = _run_attack_sweep(
            spec, classifier, ids, points, labels, jobs)
    elif kind == "certify":
        records, extras, meta = _run_certify(
            spec, classifier, ids, points, labels, jobs)
    elif kind == "binary-search-dist":
        records, extras, meta = _run_binary_search_dist(
            spec, classifier, dataset)
    elif kind == "slice":
        records, extras, meta = _run_slice(spec, classifier, ids, points)
    elif kind == "direction-profile":
        records, extras, meta = _run_direction_profile(
            spec, classifier, dataset, ids, points)
    elif kind == "sorm-check":
        records, extras, meta = _run_sorm_check(spec)
    else:  # unreachable; ExperimentSpec validates kind
        raise ValueError(f"unknown experiment kind {kind!r}")

    metadata.update(meta)
    summary = summarize(kind, spec.resolved(), records)
    summary["kind"] = kind
    summary["seed"] = spec.seed
    summary["metadata"] = metadata
    return ResultSet(spec=spec, columns=COLUMNS[kind], records=records,
                     summary=summary, extras=extras)
