"""Experiment harness: spec validation, per-kind runs, summaries that
survive a round trip through the CSV, deterministic outputs, figures."""
import json
import re

import numpy as np
import pytest

from smoothlab.classifiers import generate_dataset
from smoothlab.harness import (COLUMNS, ExperimentSpec, SpecError, emit_plot,
                               emit_toml, format_float, read_records,
                               run_experiment, summarize)
from smoothlab.harness import runner as runner_mod
from smoothlab.harness.cli import main as cli_main

BASE = """
seed = 7
points = 4

[dataset]
name = "gaussian-blobs"
size = 30
dimension = 5
seed = 3

[classifier]
kind = "linear"
fit = "centroid"

[smoothing]
sigmas = [0.5]
ns = [11]
"""


def _write_spec(tmp_path, kind, extra, base=BASE, name="spec.toml"):
    path = tmp_path / name
    path.write_text(f'kind = "{kind}"\n' + base + extra)
    return path


@pytest.fixture(scope="module")
def attack_results(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("attack")
    path = _write_spec(tmp, "attack-sweep", """
[attack]
names = ["hsja", "rays"]
budget = 400
pa = [0.5, 0.8]
""")
    spec = ExperimentSpec.from_toml(path)
    results = run_experiment(spec)
    out = results.write(tmp / "out")
    return spec, results, out


@pytest.fixture(scope="module")
def certify_exact_results(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("certify")
    path = _write_spec(tmp, "certify", '\n[certify]\nmode = "exact"\n')
    spec = ExperimentSpec.from_toml(path)
    results = run_experiment(spec)
    out = results.write(tmp / "out")
    return spec, results, out


class TestSpecValidation:
    def test_missing_kind(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text("seed = 1\n")
        with pytest.raises(SpecError, match="kind"):
            ExperimentSpec.from_toml(p)

    def test_missing_seed_named(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text('kind = "sorm-check"\n[sorm]\n')
        with pytest.raises(SpecError, match="seed"):
            ExperimentSpec.from_toml(p)

    def test_kind_override_conflict(self, tmp_path):
        p = _write_spec(tmp_path, "certify", '[certify]\nmode = "exact"\n')
        with pytest.raises(SpecError, match="kind"):
            ExperimentSpec.from_toml(p, kind_override="slice")

    @pytest.mark.parametrize("old,new,field", [
        ("points = 4", "points = 0", "points"),
        ("sigmas = [0.5]", "sigmas = [-0.5]", "sigmas"),
        ("ns = [11]", "ns = [11]\nalpha = 1.5", "alpha"),
        ('names = ["hsja", "rays"]', 'names = ["hsja", "hsja"]', "names"),
        ("pa = [0.5, 0.8]", "pa = [0.3]", "pa"),
        ('name = "gaussian-blobs"', 'name = "unknown-set"', "dataset.name"),
        ('kind = "linear"', 'kind = "forest"', "classifier.kind"),
        ("seed = 7", "seed = 7\ntypo_key = 1", "typo_key"),
    ])
    def test_bad_field_named_before_compute(self, tmp_path, old, new, field):
        # invalid specs fail at parse time, naming the offending field
        body = ('kind = "attack-sweep"\n' + BASE +
                '[attack]\nnames = ["hsja", "rays"]\npa = [0.5, 0.8]\n')
        p = tmp_path / "bad.toml"
        p.write_text(body.replace(old, new))
        with pytest.raises(SpecError, match=re.escape(field.split(".")[-1])):
            ExperimentSpec.from_toml(p)

    def test_attack_sweep_accepts_even_votes(self, tmp_path):
        # even vote counts are legal: exact ties resolve to class 0
        p = _write_spec(tmp_path, "attack-sweep",
                        '[attack]\nnames = ["rays"]\nbudget = 50\n',
                        base=BASE.replace("ns = [11]", "ns = [10]"))
        spec = ExperimentSpec.from_toml(p)
        assert spec.smoothing["ns"] == [10]
        results = run_experiment(spec)
        assert all(r["n"] == 10 for r in results.records)

    def test_weight_dimension_mismatch(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text("""
kind = "certify"
seed = 1

[dataset]
name = "gaussian-blobs"
size = 10
dimension = 4
seed = 0

[classifier]
kind = "linear"
weights = [1.0, 2.0]
bias = 0.0

[smoothing]
sigmas = [0.5]

[certify]
mode = "exact"
""")
        with pytest.raises(SpecError, match="weights"):
            ExperimentSpec.from_toml(p)

    def test_defaults_filled(self, tmp_path):
        p = _write_spec(tmp_path, "attack-sweep",
                        '[attack]\nnames = ["rays"]\n')
        spec = ExperimentSpec.from_toml(p)
        assert spec.attack["budget"] == 2000
        assert spec.attack["pa"] == [0.5, 0.8]
        assert spec.smoothing["alpha"] == 0.001
        assert spec.points == 4

    def test_resolved_toml_round_trip(self, tmp_path):
        p = _write_spec(tmp_path, "attack-sweep",
                        '[attack]\nnames = ["hsja"]\nbudget = 99\n')
        spec = ExperimentSpec.from_toml(p)
        q = tmp_path / "resolved.toml"
        q.write_text(emit_toml(spec.resolved()))
        assert ExperimentSpec.from_toml(q).resolved() == spec.resolved()

    def test_format_float_keeps_toml_float_type(self):
        assert format_float(2.0) == "2.0"
        assert format_float(0.528551701) == "0.528551701"
        assert format_float(1e-12) == "1e-12"


class TestCertifyExact:
    def test_curve_drops_to_zero_at_max_analytic_margin(
            self, certify_exact_results):
        # independent oracle: point-to-hyperplane distances computed here
        spec, results, _ = certify_exact_results
        ds = generate_dataset("gaussian-blobs", 30, 5, 3, None)
        m1 = ds.points[ds.labels == 1].mean(axis=0)
        m0 = ds.points[ds.labels == 0].mean(axis=0)
        w = m1 - m0
        b = -float(w @ ((m1 + m0) / 2))
        ids = sorted({r["point_id"] for r in results.records})
        margins = []
        for pid in ids:
            x = ds.points[pid]
            value = float(w @ x + b)
            label = 1 if value > 0 else 0
            if label == int(ds.labels[pid]):
                margins.append(abs(value) / float(np.linalg.norm(w)))
        expected_max = runner_mod.round9(max(margins))

        curve = results.summary["stats"]["curves"][0]["curve"]
        radii = [pt[0] for pt in curve]
        accs = [pt[1] for pt in curve]
        assert accs[-1] > 0.0
        assert radii[-1] == pytest.approx(expected_max, abs=1e-8)
        assert max(r["radius_lower"] for r in results.records
                   if r["correct"]) == pytest.approx(expected_max, abs=1e-8)

    def test_curve_monotone_nonincreasing(self, certify_exact_results):
        _, results, _ = certify_exact_results
        for entry in results.summary["stats"]["curves"]:
            accs = [pt[1] for pt in entry["curve"]]
            radii = [pt[0] for pt in entry["curve"]]
            assert accs == sorted(accs, reverse=True)
            assert radii == sorted(radii)

    def test_exact_rows_have_matching_bounds(self, certify_exact_results):
        _, results, _ = certify_exact_results
        for r in results.records:
            assert r["mode"] == "exact"
            assert r["n"] == 0
            assert r["pi_hat"] == r["pi_lower"]


class TestDeterminismAndReload:
    def test_rerun_byte_identical(self, attack_results, tmp_path):
        spec, _, out = attack_results
        rerun = run_experiment(spec)
        out2 = rerun.write(tmp_path / "again")
        for name in ("records.csv", "summary.json", "spec.resolved.toml",
                     "milestones.csv"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes()

    def test_jobs_do_not_change_bytes(self, attack_results, tmp_path):
        spec, _, out = attack_results
        parallel = run_experiment(spec, jobs=2)
        out2 = parallel.write(tmp_path / "par")
        assert (out / "records.csv").read_bytes() == \
            (out2 / "records.csv").read_bytes()
        assert (out / "summary.json").read_bytes() == \
            (out2 / "summary.json").read_bytes()

    def test_summary_recomputable_from_csv(self, attack_results):
        spec, results, out = attack_results
        reloaded = read_records(out / "records.csv", "attack-sweep")
        fresh = summarize("attack-sweep", spec.resolved(), reloaded)
        assert fresh["stats"] == results.summary["stats"]
        assert fresh["counts"] == results.summary["counts"]

    def test_reload_types(self, attack_results):
        _, results, out = attack_results
        reloaded = read_records(out / "records.csv", "attack-sweep")
        assert reloaded == results.records
        row = reloaded[0]
        assert isinstance(row["point_id"], int)
        assert isinstance(row["sigma"], float)
        assert isinstance(row["reason"], str)

    def test_every_figure_number_exists_in_csv(self, attack_results):
        # the figure is drawn from summary stats, which the CSV reproduces
        spec, results, out = attack_results
        assert (out / "distortion-vs-accuracy.svg").exists()
        reloaded = read_records(out / "records.csv", "attack-sweep")
        fresh = summarize("attack-sweep", spec.resolved(), reloaded)
        assert fresh["stats"]["attack_means"] == \
            results.summary["stats"]["attack_means"]


class TestAttackSweepRecords:
    def test_rows_per_pa_and_key_order(self, attack_results):
        spec, results, _ = attack_results
        keys = [(r["sigma"], r["n"], r["attack"], r["point_id"], r["pa"])
                for r in results.records]
        assert keys == sorted(keys)
        by_run = {}
        for r in results.records:
            by_run.setdefault(
                (r["point_id"], r["sigma"], r["n"], r["attack"]), []).append(r)
        for rows in by_run.values():
            assert [r["pa"] for r in rows] == [0.5, 0.8]
            assert len({r["distortion"] for r in rows}) == 1

    def test_milestones_match_traces(self, attack_results):
        _, results, out = attack_results
        cols, rows = results.extras["milestones.csv"]
        assert cols[-2:] == ["queries_used", "best_distortion"]
        for key, group in _group_by(rows, ("point_id", "sigma", "n",
                                           "attack")).items():
            qs = [r["queries_used"] for r in group]
            ds = [r["best_distortion"] for r in group]
            assert qs == sorted(qs)
            assert ds == sorted(ds, reverse=True)

    def test_partial_failure_recorded(self, tmp_path, monkeypatch):
        path = _write_spec(tmp_path, "attack-sweep", """
[attack]
names = ["hsja", "rays"]
budget = 200
pa = [0.5]
""")
        spec = ExperimentSpec.from_toml(path)
        real = runner_mod._ATTACK_FNS["hsja"]
        calls = {"n": 0}

        def flaky(oracle, x_o, label_o, cfg):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("injected fault")
            return real(oracle, x_o, label_o, cfg)

        monkeypatch.setitem(runner_mod._ATTACK_FNS, "hsja", flaky)
        results = run_experiment(spec)
        errors = results.summary["metadata"]["errors"]
        assert len(errors) == 1
        assert "injected fault" in errors[0]["error"]
        # the failed unit is absent; every other unit still produced rows
        rays_rows = [r for r in results.records if r["attack"] == "rays"]
        hsja_rows = [r for r in results.records if r["attack"] == "hsja"]
        assert len(rays_rows) > len(hsja_rows)


def _group_by(rows, keys):
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    return groups


class TestOtherKinds:
    def test_binary_search_dist(self, tmp_path):
        path = _write_spec(tmp_path, "binary-search-dist",
                           "[probe]\ntrials = 20\ntol = 1e-3\n")
        results = run_experiment(ExperimentSpec.from_toml(path))
        assert len(results.records) == 20
        stats = results.summary["stats"]["offset_spread"][0]
        assert stats["trials"] == 20
        assert stats["std_offset"] >= 0.0
        offsets = [r["offset"] for r in results.records]
        assert stats["mean_offset"] == runner_mod.round9(
            sum(offsets) / len(offsets))

    def test_slice(self, tmp_path):
        path = _write_spec(tmp_path, "slice",
                           "[probe]\nextent = 1.5\nresolution = 7\n")
        results = run_experiment(ExperimentSpec.from_toml(path))
        groups = _group_by(results.records, ("slice_id",))
        assert set(groups) == {("base",), ("s0n0",)}
        for rows in groups.values():
            assert len(rows) == 49
            assert {r["label"] for r in rows} <= {0, 1}
        base = groups[("base",)][0]
        assert base["sigma"] == 0.0 and base["n"] == 0

    def test_direction_profile(self, tmp_path):
        path = _write_spec(
            tmp_path, "direction-profile",
            "[probe]\nt_max = 2.0\nt_steps = 9\nprobes = 30\n")
        results = run_experiment(ExperimentSpec.from_toml(path))
        base = [r for r in results.records if r["kind"] == "base"]
        assert len(base) == 9
        assert base[0]["t"] == 0.0 and base[0]["flip_prob"] == 0.0
        assert all(r["flip_prob"] in (0.0, 1.0) for r in base)
        smoothed = [r for r in results.records if r["kind"] == "smoothed"]
        assert len(smoothed) == 9
        assert all(0.0 <= r["flip_prob"] <= 1.0 for r in smoothed)

    def test_sorm_check(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text("""
kind = "sorm-check"
seed = 0

[sorm]
betas = [0.5, 1.0]
beta_kappas = [-0.25, 0.25]
dimension = 3
sigma = 0.25
""")
        results = run_experiment(ExperimentSpec.from_toml(p))
        assert len(results.records) == 4
        assert all(r["rel_err"] >= 0.0 for r in results.records)
        stats = results.summary["stats"]["sorm"]
        assert stats["cells"] == 4
        assert stats["max_rel_err"] == max(
            r["rel_err"] for r in results.records)


class TestCalibration:
    def test_linear_exact_calibration_caps_and_records(self, tmp_path):
        # an exactly smoothed linear boundary never moves, so no sigma can
        # drop accuracy: calibration caps out and says so in metadata
        path = _write_spec(tmp_path, "certify", '\n[certify]\nmode = "exact"\n',
                           base=BASE.replace("sigmas = [0.5]",
                                             "calibrate_drops = [0.05]"))
        spec = ExperimentSpec.from_toml(path)
        assert spec.smoothing["sigmas"] == []
        results = run_experiment(spec)
        cal = results.summary["metadata"]["calibration"]
        assert cal["mode"] == "exact"
        assert cal["sigmas"] == [2.0]
        assert cal["achieved_drops"] == [0.0]
        assert results.spec.smoothing["sigmas"] == [2.0]

    def test_mlp_calibration_reaches_target(self, tmp_path):
        p = tmp_path / "s.toml"
        p.write_text("""
kind = "certify"
seed = 9
points = 10

[dataset]
name = "two-moons-embedded"
size = 60
dimension = 4
seed = 1

[classifier]
kind = "mlp"
hidden = 8
epochs = 40

[smoothing]
ns = [11]
calibrate_drops = [0.1]

[certify]
mode = "mc"
""")
        spec = ExperimentSpec.from_toml(p)
        results = run_experiment(spec)
        cal = results.summary["metadata"]["calibration"]
        assert cal["mode"] == "mc-199"
        sigma = cal["sigmas"][0]
        assert 0.0 < sigma <= 2.0
        if sigma < 2.0:  # not capped: the measured drop reached the target
            assert cal["achieved_drops"][0] >= 0.1
        # resolved spec carries the calibrated value and reruns identically
        out = results.write(tmp_path / "out")
        spec2 = ExperimentSpec.from_toml(out / "spec.resolved.toml")
        assert spec2.smoothing["sigmas"] == [sigma]
        assert run_experiment(spec2).records == results.records


class TestPlots:
    def test_certified_curve_monotone_polyline(self, certify_exact_results,
                                               tmp_path):
        _, results, _ = certify_exact_results
        path = tmp_path / "curve.svg"
        emit_plot(results, "certified-curve", path)
        text = path.read_text()
        polylines = re.findall(r'<polyline points="([^"]+)"', text)
        assert polylines
        for poly in polylines:
            pts = [tuple(map(float, pair.split(",")))
                   for pair in poly.split()]
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            assert xs == sorted(xs)
            assert ys == sorted(ys)  # SVG y grows downward: nonincreasing

    def test_bs_histogram_bins_sum_to_trials(self, tmp_path):
        path = _write_spec(tmp_path, "binary-search-dist",
                           "[probe]\ntrials = 25\ntol = 1e-3\n")
        results = run_experiment(ExperimentSpec.from_toml(path))
        svg = tmp_path / "h.svg"
        emit_plot(results, "bs-histogram", svg)
        offsets = [r["offset"] for r in results.records]
        counts, _ = np.histogram(offsets, bins=20)
        assert counts.sum() == 25
        # one bar rect per nonzero bin, in the panel color
        bars = re.findall(r'<rect [^>]*fill="#3a6ea5"', svg.read_text())
        assert len(bars) == int((counts > 0).sum())

    def test_distortion_plot_marker_count_matches_grid(self, attack_results,
                                                       tmp_path):
        _, results, _ = attack_results
        svg = tmp_path / "d.svg"
        emit_plot(results, "distortion-vs-accuracy", svg)
        text = svg.read_text()
        means = results.summary["stats"]["attack_means"]
        hsja_cells = sum(1 for m in means if m["attack"] == "hsja"
                         and m["mean_distortion"] is not None)
        rays_cells = sum(1 for m in means if m["attack"] == "rays"
                         and m["mean_distortion"] is not None)
        # one marker per (sigma, n, attack) cell plus one legend marker
        assert len(re.findall(r"<circle ", text)) == hsja_cells + 1
        assert len(re.findall(r"<polygon ", text)) == rays_cells + 1

    def test_missing_fields_named(self, attack_results):
        _, results, _ = attack_results

        class Hollow:
            columns = ["sigma", "n"]
            records = []
            summary = {"stats": {}}

        with pytest.raises(ValueError, match="offset"):
            emit_plot(Hollow(), "bs-histogram", "/dev/null")
        with pytest.raises(ValueError, match="stats.curves"):
            emit_plot(Hollow(), "certified-curve", "/dev/null")
        with pytest.raises(ValueError, match="unknown plot kind"):
            emit_plot(results, "no-such-kind", "/dev/null")

    def test_no_timestamps_and_deterministic(self, certify_exact_results,
                                             tmp_path):
        _, results, _ = certify_exact_results
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        emit_plot(results, "certified-curve", a)
        emit_plot(results, "certified-curve", b)
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_end_to_end_and_report(self, tmp_path):
        cfg = _write_spec(tmp_path, "certify", '\n[certify]\nmode = "exact"\n')
        out = tmp_path / "run"
        assert cli_main(["certify", "--config", str(cfg),
                         "--out", str(out)]) == 0
        names = {p.name for p in out.iterdir()}
        assert {"records.csv", "summary.json", "spec.resolved.toml",
                "certified-curve.svg"} <= names
        assert cli_main(["report", str(out)]) == 0

    def test_subcommand_supplies_kind(self, tmp_path):
        # config without a kind: the subcommand decides
        cfg = tmp_path / "spec.toml"
        cfg.write_text(BASE + '\n[certify]\nmode = "exact"\n')
        out = tmp_path / "run"
        assert cli_main(["certify", "--config", str(cfg),
                         "--out", str(out)]) == 0

    def test_subcommand_kind_conflict(self, tmp_path, capsys):
        cfg = _write_spec(tmp_path, "certify", '\n[certify]\nmode = "exact"\n')
        rc = cli_main(["slice", "--config", str(cfg),
                       "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "kind" in capsys.readouterr().err

    def test_seed_override_changes_output(self, tmp_path):
        cfg = _write_spec(tmp_path, "certify", '\n[certify]\nmode = "mc"\n')
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli_main(["certify", "--config", str(cfg), "--out",
                         str(out1)]) == 0
        assert cli_main(["certify", "--config", str(cfg), "--seed", "123",
                         "--out", str(out2)]) == 0
        assert (out1 / "records.csv").read_bytes() != \
            (out2 / "records.csv").read_bytes()

    def test_report_detects_corruption(self, attack_results, tmp_path,
                                       capsys):
        _, _, out = attack_results
        copy = tmp_path / "copy"
        copy.mkdir()
        for name in ("records.csv", "summary.json", "spec.resolved.toml"):
            (copy / name).write_bytes((out / name).read_bytes())
        lines = (copy / "records.csv").read_text().splitlines()
        header = lines[0].split(",")
        cell = header.index("adversarial")
        parts = lines[-1].split(",")
        parts[cell] = "0" if parts[cell] == "1" else "1"
        lines[-1] = ",".join(parts)
        (copy / "records.csv").write_text("\n".join(lines) + "\n")
        assert cli_main(["report", str(copy)]) == 1
        assert "MISMATCH" in capsys.readouterr().out
