"""Default figures for each experiment kind, emitted as plain SVG.

Each builder reads only the public pieces of a result set (columns,
records, summary) and raises ValueError naming whatever field it needs
but cannot find, so a stale or hand-edited result directory fails loudly
instead of plotting nonsense.
"""
from __future__ import annotations

import numpy as np

from .svg import PALETTE, Axes, Canvas

# kind -> ((plot kind, output filename), ...)
DEFAULT_PLOTS = {
    "certify": (("certified-curve", "certified-curve.svg"),),
    "attack-sweep": (("distortion-vs-accuracy",
                      "distortion-vs-accuracy.svg"),),
    "binary-search-dist": (("bs-histogram", "bs-histogram.svg"),),
    "slice": (("slice-raster", "slice-raster.svg"),),
    "direction-profile": (("direction-profile", "direction-profile.svg"),),
}

SLICE_COLORS = ("#3a6ea5", "#e8b84b")  # label 0, label 1
_MARKERS = ("circle", "square", "triangle")
ATTACK_MARKERS = {"hsja": "circle", "surfree": "square", "rays": "triangle"}


def _attack_marker(attack: str, attacks) -> str:
    return ATTACK_MARKERS.get(
        attack, _MARKERS[attacks.index(attack) % len(_MARKERS)])


def _need_columns(results, needed) -> None:
    missing = [c for c in needed if c not in results.columns]
    if missing:
        raise ValueError(
            f"records are missing columns {missing}; have {results.columns}")


def _need_stats(results, key: str):
    stats = results.summary.get("stats", {})
    if key not in stats:
        raise ValueError(f"summary is missing stats.{key}")
    return stats[key]


def _series_label(sigma, n) -> str:
    return f"sigma={sigma:g}, n={n}" if n else f"sigma={sigma:g}"


def _new_canvas(width: int, height: int) -> Canvas:
    canvas = Canvas(width, height)
    canvas.rect(0, 0, width, height, "#ffffff")
    return canvas


def _marker(canvas, shape: str, cx, cy, size, fill) -> None:
    getattr(canvas, shape)(cx, cy, size, fill)


def _certified_curve(results, path) -> None:
    curves = _need_stats(results, "curves")
    if not curves:
        raise ValueError("summary stats.curves is empty")
    x_max = max((pt[0] for entry in curves for pt in entry["curve"]),
                default=0.0)
    x_max = max(x_max * 1.05, 1e-6)
    canvas = _new_canvas(560, 360)
    axes = Axes(canvas, 60, 30, 400, 280, (0.0, x_max), (0.0, 1.0))
    axes.frame("certified radius", "certified accuracy")
    for idx, entry in enumerate(curves):
        color = PALETTE[idx % len(PALETTE)]
        pts = entry["curve"]
        poly = [(axes.x(0.0), axes.y(pts[0][1]))]
        for k in range(1, len(pts)):
            r, acc = pts[k]
            prev_acc = pts[k - 1][1]
            poly.append((axes.x(r), axes.y(prev_acc)))
            poly.append((axes.x(r), axes.y(acc)))
        poly.append((axes.x(x_max), axes.y(pts[-1][1])))
        canvas.polyline(poly, color)
        canvas.text(470, 40 + 16 * idx,
                    _series_label(entry["sigma"], entry["n"]), size=10,
                    fill=color)
    canvas.write(path)


def _distortion_vs_accuracy(results, path) -> None:
    accuracy = _need_stats(results, "accuracy")
    means = _need_stats(results, "attack_means")
    acc_by_cfg = {(a["sigma"], a["n"]): a["accuracy"] for a in accuracy}
    if not acc_by_cfg:
        raise ValueError("summary stats.accuracy is empty")
    attacks = sorted({m["attack"] for m in means})
    configs = sorted(acc_by_cfg)
    dists = [m["mean_distortion"] for m in means
             if m["mean_distortion"] is not None]
    y_max = max(dists) * 1.15 if dists else 1.0
    canvas = _new_canvas(560, 380)
    axes = Axes(canvas, 60, 30, 380, 280, (0.0, 1.0), (0.0, y_max))
    axes.frame("clean smoothed accuracy", "mean distortion")
    for m in means:
        if m["mean_distortion"] is None:
            continue
        cfg = (m["sigma"], m["n"])
        color = PALETTE[configs.index(cfg) % len(PALETTE)]
        shape = _attack_marker(m["attack"], attacks)
        _marker(canvas, shape, axes.x(acc_by_cfg[cfg]),
                axes.y(m["mean_distortion"]), 4.5, color)
    for i, attack in enumerate(attacks):
        y = 40 + 16 * i
        _marker(canvas, _attack_marker(attack, attacks), 460, y - 3, 4.5,
                "#2c2c2c")
        canvas.text(470, y, attack, size=10)
    for j, cfg in enumerate(configs):
        y = 40 + 16 * (len(attacks) + j)
        color = PALETTE[j % len(PALETTE)]
        canvas.rect(455, y - 8, 10, 10, color)
        canvas.text(470, y, _series_label(*cfg), size=10, fill=color)
    canvas.write(path)


def _bs_histogram(results, path) -> None:
    _need_columns(results, ("sigma", "n", "offset"))
    groups: dict[tuple, list] = {}
    for rec in results.records:
        groups.setdefault((rec["sigma"], rec["n"]), []).append(rec["offset"])
    if not groups:
        raise ValueError("no offset records to plot")
    keys = sorted(groups)
    panel_w, panel_h, pad = 240, 200, 50
    canvas = _new_canvas(pad + len(keys) * (panel_w + pad),
                         panel_h + 2 * pad)
    for p, key in enumerate(keys):
        offsets = groups[key]
        counts, edges = np.histogram(offsets, bins=20)
        x0 = pad + p * (panel_w + pad)
        axes = Axes(canvas, x0, pad, panel_w, panel_h,
                    (float(edges[0]), float(edges[-1])),
                    (0.0, float(counts.max()) * 1.1))
        axes.frame("offset", "count" if p == 0 else "", ticks=3)
        color = PALETTE[p % len(PALETTE)]
        for k, count in enumerate(counts):
            if count == 0:
                continue
            x_left = axes.x(float(edges[k]))
            x_right = axes.x(float(edges[k + 1]))
            y_top = axes.y(float(count))
            axes_bottom = axes.y(0.0)
            canvas.rect(x_left, y_top, x_right - x_left,
                        axes_bottom - y_top, color)
        canvas.text(x0, pad - 10, _series_label(*key), size=11)
    canvas.write(path)


def _slice_raster(results, path) -> None:
    _need_columns(results, ("slice_id", "u", "v", "label"))
    slices: dict[str, dict] = {}
    order: dict[str, tuple] = {}
    for rec in results.records:
        sid = rec["slice_id"]
        slices.setdefault(sid, {})[(rec["u"], rec["v"])] = rec["label"]
        order[sid] = (rec["kind"] != "base", rec["sigma"], rec["n"])
    if not slices:
        raise ValueError("no slice records to plot")
    keys = sorted(slices, key=lambda sid: order[sid])
    cell, pad = 6, 40
    resolution = int(round(len(next(iter(slices.values()))) ** 0.5))
    side = resolution * cell
    canvas = _new_canvas(pad + len(keys) * (side + pad), side + 2 * pad)
    for p, sid in enumerate(keys):
        grid = slices[sid]
        us = sorted({u for u, _ in grid})
        vs = sorted({v for _, v in grid})
        x0 = pad + p * (side + pad)
        for i, u in enumerate(us):
            for j, v in enumerate(vs):
                color = SLICE_COLORS[int(grid[(u, v)])]
                # u rightward, v upward
                canvas.rect(x0 + i * cell, pad + (len(vs) - 1 - j) * cell,
                            cell, cell, color)
        canvas.text(x0, pad - 8, sid, size=11)
    canvas.write(path)


def _direction_profile(results, path) -> None:
    _need_columns(results, ("kind", "sigma", "n", "t", "flip_prob"))
    groups: dict[tuple, list] = {}
    for rec in results.records:
        key = (rec["kind"], rec["sigma"], rec["n"])
        groups.setdefault(key, []).append((rec["t"], rec["flip_prob"]))
    if not groups:
        raise ValueError("no profile records to plot")
    t_max = max(t for pts in groups.values() for t, _ in pts)
    canvas = _new_canvas(560, 360)
    axes = Axes(canvas, 60, 30, 400, 280, (0.0, max(t_max, 1e-9)),
                (0.0, 1.0))
    axes.frame("distance along direction", "flip probability")
    canvas.line(axes.x(0.0), axes.y(0.5), axes.x(t_max), axes.y(0.5),
                "#bbbbbb", width=0.7)
    idx = 0
    for key in sorted(groups, key=lambda k: (k[0] != "base", k[1], k[2])):
        pts = sorted(groups[key])
        if key[0] == "base":
            color, label = "#2c2c2c", "base"
        else:
            color = PALETTE[idx % len(PALETTE)]
            label = _series_label(key[1], key[2])
            idx += 1
        canvas.polyline([(axes.x(t), axes.y(p)) for t, p in pts], color)
        canvas.text(470, 40 + 16 * (0 if key[0] == "base" else idx),
                    label, size=10, fill=color)
    canvas.write(path)


_PLOTTERS = {
    "certified-curve": _certified_curve,
    "distortion-vs-accuracy": _distortion_vs_accuracy,
    "bs-histogram": _bs_histogram,
    "slice-raster": _slice_raster,
    "direction-profile": _direction_profile,
}


def emit_plot(results, kind: str, path) -> None:
    """Render one figure kind for a result set to an SVG file."""
    if kind not in _PLOTTERS:
        raise ValueError(f"unknown plot kind {kind!r}; known: "
                         f"{sorted(_PLOTTERS)}")
    _PLOTTERS[kind](results, path)
