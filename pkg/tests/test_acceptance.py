"""Acceptance gate: one test per release criterion.

Each criterion is a single test whose pass/fail line in ``pytest -v``
is the acceptance record. Measured quantities that the criteria ask to
be *reported* (not asserted) are printed; run with ``-s`` to see them.

The slow criteria (09-11) share module-scoped experiment fixtures
defined in this file; everything is seeded, so every run measures the
same numbers.
"""
import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    binomial_tail_by_enumeration,
    inv_beta_by_bisection,
    majority_flip_by_enumeration,
    phi_by_integration,
    quantile_by_bisection,
    reg_inc_beta_integer,
)
from smoothlab.attacks import AttackConfig, attack_hsja, attack_rays, attack_surfree
from smoothlab.classifiers import LinearClassifier, SphereClassifier
from smoothlab.harness import ExperimentSpec, run_experiment
from smoothlab.numerics import (
    binomial_tail_geq,
    reg_inc_beta,
    inv_reg_inc_beta,
    std_normal_cdf,
    std_normal_quantile,
)
from smoothlab.probes import DecisionOracle, binary_search_distribution
from smoothlab.rng import Stream
from smoothlab.smoothing import (
    CurvatureProfile,
    SmoothingConfig,
    adversarial_distance_bound,
    certified_radius,
    exact_pi,
    pa_vote_threshold,
    smoothed_decide,
    sorm_pi0,
)

ATTACKS = {"hsja": attack_hsja, "surfree": attack_surfree, "rays": attack_rays}


# ---------------------------------------------------------------------------
# criterion 1: special functions vs independent brute-force oracles


def test_criterion_01_special_function_oracles():
    t0 = time.time()
    # normal CDF vs composite-Simpson integration of the density
    for z in np.linspace(-8.0, 8.0, 161):
        assert abs(std_normal_cdf(float(z)) - phi_by_integration(float(z))) <= 1e-8
    # normal quantile vs bisection of the (integration-verified) CDF
    for p in [1e-6, 1e-4, 0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99,
              0.999, 0.9999, 1.0 - 1e-6]:
        assert abs(std_normal_quantile(p)
                   - quantile_by_bisection(p, std_normal_cdf)) <= 1e-8
    # regularized incomplete beta vs the exact integer-parameter polynomial
    for a in range(1, 9):
        for b in range(1, 9):
            for x in np.linspace(0.05, 0.95, 19):
                assert abs(reg_inc_beta(float(x), a, b)
                           - reg_inc_beta_integer(float(x), a, b)) <= 1e-8
    # inverse beta vs bisection of the exact polynomial
    for m in range(1, 9):
        for p in [0.51, 0.6, 0.75, 0.9, 0.99]:
            assert abs(inv_reg_inc_beta(p, m, m)
                       - inv_beta_by_bisection(p, m, m)) <= 1e-8
    # binomial upper tail vs full 2^n enumeration, n <= 15
    for n in [1, 3, 5, 10, 15]:
        for q in [0.1, 0.3, 0.5, 0.7, 0.9]:
            for k in range(n + 1):
                assert abs(binomial_tail_geq(n, k, q)
                           - binomial_tail_by_enumeration(n, k, q)) <= 1e-8
    assert time.time() - t0 < 10.0


# ---------------------------------------------------------------------------
# criterion 2: linear-classifier identity, certified radius == distance


def test_criterion_02_linear_radius_identity():
    t0 = time.time()
    st = Stream.from_seed(20, "radius-identity")
    checked = 0
    k = 0
    while checked < 1000:
        sub = st.child(k)
        k += 1
        d = int(2 + sub.integers(1, 30)[0])
        w = sub.child("w").normals(1, d)[0]
        if not np.linalg.norm(w):
            continue
        x = sub.child("x").uniforms(d)
        b = float(sub.child("b").normals(1, 1)[0][0])
        sigma = 0.1 + 1.9 * float(sub.child("s").uniforms(1)[0])
        clf = LinearClassifier(weights=w, bias=b)
        dist = clf.distance_to_boundary(x)
        # stay where the normal quantile keeps full double precision
        if not (0.05 <= dist / sigma <= 4.0):
            continue
        p1 = exact_pi(clf, x, sigma)
        pi_win = max(p1, 1.0 - p1)
        assert abs(certified_radius(pi_win, sigma) - dist) <= 1e-9
        checked += 1
    assert time.time() - t0 < 5.0


# ---------------------------------------------------------------------------
# criterion 3: vote threshold equals exhaustive vote enumeration


def test_criterion_03_vote_threshold_equivalence():
    t0 = time.time()
    for n in range(1, 16, 2):
        for pa in (0.55, 0.8, 0.95):
            tau = pa_vote_threshold(n, pa)
            for pi0 in np.linspace(0.005, 0.995, 100):
                flip = majority_flip_by_enumeration(n, 1.0 - float(pi0))
                if abs(flip - pa) <= 1e-9:
                    continue  # grid point sits on the decision boundary
                assert (flip >= pa) == (float(pi0) <= tau), (
                    f"n={n} pa={pa} pi0={pi0}: enumeration says "
                    f"{flip:.6f}, threshold {tau:.6f}")
    assert time.time() - t0 < 30.0


# ---------------------------------------------------------------------------
# criterion 4: distance bound boundary case and monotonicity


def test_criterion_04_distance_bound_boundary_case():
    t0 = time.time()
    for radius in (0.0, 0.037, 0.5, 1.25):
        for sigma in (0.05, 0.25, 1.0):
            for n in (1, 5, 11, 101):
                assert adversarial_distance_bound(radius, sigma, n, 0.5) == radius
                grid = [adversarial_distance_bound(radius, sigma, n, pa)
                        for pa in np.arange(0.5, 0.96, 0.05)]
                assert all(lo < hi for lo, hi in zip(grid, grid[1:])), (
                    f"bound not strictly increasing in pa at R={radius}, "
                    f"sigma={sigma}, n={n}: {grid}")
    assert time.time() - t0 < 1.0


# ---------------------------------------------------------------------------
# criterion 5: Monte Carlo votes track the exact smoothed probability


def test_criterion_05_monte_carlo_consistency():
    t0 = time.time()
    d, n = 6, 10_000
    clf = LinearClassifier(weights=np.ones(d), bias=-3.0)
    st = Stream.from_seed(21, "mc-consistency")
    within = 0
    for i in range(1000):
        sub = st.child(i)
        x = 0.2 + 0.6 * sub.child("x").uniforms(d)
        sigma = 0.1 + 0.5 * float(sub.child("s").uniforms(1)[0])
        p1 = exact_pi(clf, x, sigma)
        dec = smoothed_decide(clf, SmoothingConfig(sigma=sigma, n=n), x,
                              stream=sub.child("noise"))
        k1 = dec.votes if dec.label == 1 else n - dec.votes
        bound = 3.0 * math.sqrt(max(p1 * (1.0 - p1), 1e-300) / n)
        if abs(k1 / n - p1) <= max(bound, 1.0 / n):
            within += 1
    assert within >= 990, f"only {within}/1000 inside the 3-sigma band"
    assert time.time() - t0 < 60.0


# ---------------------------------------------------------------------------
# criterion 6: curvature-corrected probability vs exact quadrature


def test_criterion_06_sorm_flat_and_sphere():
    t0 = time.time()
    # flat case is exact: zero curvatures reduce to Phi(-beta)
    for beta in (0.5, 1.0, 2.0):
        est = sorm_pi0(CurvatureProfile(beta=beta, curvatures=np.zeros(2)))
        assert est.value == std_normal_cdf(-beta)
        assert not est.clamped
    # sphere in d = 3: compare against exact quadrature over the stated
    # rectangle beta in [0.5, 2], beta*kappa in (-0.5, 0.5)
    sigma = 0.1
    failures = []
    for beta in (0.5, 1.0, 2.0):
        for bk in (-0.4, -0.25, -0.1, 0.1, 0.25, 0.4):
            rho = beta * sigma / abs(bk)
            clf = SphereClassifier(center=np.zeros(3), radius=rho)
            if bk < 0:
                # x inside the ball (boundary convex toward x)
                x = np.array([rho - beta * sigma, 0.0, 0.0])
                exact = 1.0 - exact_pi(clf, x, sigma)
            else:
                x = np.array([rho + beta * sigma, 0.0, 0.0])
                exact = exact_pi(clf, x, sigma)
            est = sorm_pi0(CurvatureProfile(
                beta=beta, curvatures=np.full(2, bk / beta)))
            rel = abs(est.value - exact) / exact
            if rel > 0.15:
                failures.append(f"beta={beta} beta*kappa={bk}: "
                                f"approx={est.value:.6f} exact={exact:.6f} "
                                f"rel_err={rel:.1%}")
    assert time.time() - t0 < 30.0
    assert not failures, (
        "curvature correction misses 15% at: " + "; ".join(failures))


# ---------------------------------------------------------------------------
# criterion 7: boundary bisection spread shrinks as votes increase


def test_criterion_07_bisection_spread_monotone():
    t0 = time.time()
    d = 6
    clf = LinearClassifier(weights=np.ones(d), bias=-3.0)
    x_in = np.full(d, 0.65)
    x_out = np.full(d, 0.35)
    stds = []
    for n in (10, 50, 200, 1000):
        stats = binary_search_distribution(
            clf, SmoothingConfig(sigma=0.3, n=n), x_in, x_out,
            trials=200, tol=1e-4, seed=0)
        stds.append(stats.std)
    print(f"\n  [criterion 7] offset stds over n=(10,50,200,1000): "
          f"{[round(s, 5) for s in stds]}")
    assert all(hi >= lo for hi, lo in zip(stds, stds[1:])), stds
    assert stds[0] > stds[-1], "spread did not shrink at all"
    assert time.time() - t0 < 120.0


# ---------------------------------------------------------------------------
# criterion 8: attacks land near the true optimum on analytic classifiers


def _linear_fixture():
    d = 16
    clf = LinearClassifier(weights=np.ones(d), bias=-7.0)
    st = Stream.from_seed(99, "lin-points")
    points, dists = [], []
    k = 0
    while len(points) < 20:
        x = 0.35 + 0.30 * st.child(k).uniforms(d)
        k += 1
        m = clf.margin(x)
        if not (0.4 <= m <= 4.0):
            continue
        points.append(x)
        dists.append(m / 4.0)
    return clf, points, dists


def _sphere_fixture():
    d = 8
    clf = SphereClassifier(center=np.full(d, 0.5), radius=0.7)
    st = Stream.from_seed(99, "sph-points")
    points, dists = [], []
    k = 0
    while len(points) < 20:
        e = st.child(k).normals(1, d)[0]
        k += 1
        e = e / np.linalg.norm(e)
        if np.abs(e).max() > 0.65:
            continue  # keep the radial exit inside the unit box
        points.append(0.5 + 0.2 * e)
        dists.append(0.5)
    return clf, points, dists


def test_criterion_08_attack_optimality_analytic():
    t0 = time.time()
    worst = {}
    for cname, (clf, points, dists) in (("linear", _linear_fixture()),
                                        ("sphere", _sphere_fixture())):
        for aname, fn in ATTACKS.items():
            ratios = []
            for i, (x, d_true) in enumerate(zip(points, dists)):
                oracle = DecisionOracle.from_base(clf, budget=2000)
                cfg = AttackConfig(
                    budget=2000, seed=Stream.from_seed(99, cname, aname, i).key)
                trace = fn(oracle, x, clf.decide(x), cfg)
                found = trace.final_distortion
                assert found is not None, (
                    f"{aname} found nothing on {cname} point {i}")
                # nothing may beat the true minimum (oracle sanity)
                assert found >= d_true * (1.0 - 1e-9)
                ratios.append(found / d_true)
            worst[(cname, aname)] = max(ratios)
            assert max(ratios) <= 1.25, (
                f"{aname} on {cname}: worst ratio {max(ratios):.4f} > 1.25")
    print("\n  [criterion 8] worst found/true ratios: "
          + ", ".join(f"{c}/{a}={r:.3f}" for (c, a), r in sorted(worst.items())))
    assert time.time() - t0 < 600.0


# ---------------------------------------------------------------------------
# criteria 9-11 share two seeded experiment runs on the same MLP fixture:
# a two-moons training set embedded in d = 6, a small trained network, and
# 50 attacked points under a fixed master seed.

_MLP_BODY = """
seed = 0
points = 50

[dataset]
name = "two-moons-embedded"
size = 120
dimension = 6
seed = 1

[classifier]
kind = "mlp"
hidden = 16
epochs = 150
learning_rate = 0.05
train_seed = 0
"""

_ATTACK_TAIL = """
[attack]
names = ["hsja", "surfree", "rays"]
budget = 2000
pa = [0.5]
"""


def _run_spec(tmp, name, text):
    path = tmp / name
    path.write_text(text)
    res = run_experiment(ExperimentSpec.from_toml(path))
    out = tmp / (name.replace(".toml", "-out"))
    res.write(out)
    return res, out


@pytest.fixture(scope="module")
def calibrated_sweep(tmp_path_factory):
    """Attack sweep at noise scales calibrated for 3% / 12% accuracy drops."""
    tmp = tmp_path_factory.mktemp("calibrated-sweep")
    return _run_spec(tmp, "sweep.toml", 'kind = "attack-sweep"\n' + _MLP_BODY + """
[smoothing]
ns = [10, 200]
calibrate_drops = [0.03, 0.12]
""" + _ATTACK_TAIL)


@pytest.fixture(scope="module")
def calibrated_curves(tmp_path_factory):
    """Monte Carlo certification curves at the same calibrated noise scales."""
    tmp = tmp_path_factory.mktemp("calibrated-certify")
    return _run_spec(tmp, "certify.toml", 'kind = "certify"\n' + _MLP_BODY + """
[smoothing]
ns = [200]
calibrate_drops = [0.03, 0.12]

[certify]
mode = "mc"
""")


@pytest.fixture(scope="module")
def fixed_sigma_sweep(tmp_path_factory):
    """Attack sweep at fixed noise scales 0.05 / 0.15, votes 10 vs 200."""
    tmp = tmp_path_factory.mktemp("fixed-sweep")
    return _run_spec(tmp, "sweep.toml", 'kind = "attack-sweep"\n' + _MLP_BODY + """
[smoothing]
sigmas = [0.05, 0.15]
ns = [10, 200]
""" + _ATTACK_TAIL)


def _replay_attack_unit(spec, row):
    """Re-run one sweep unit deterministically and return its trace.

    Mirrors the runner's stream recipe: every stream is keyed by content
    (master seed, unit labels, grid indices), so the replay reproduces
    the recorded run bit for bit.
    """
    from smoothlab.harness import runner as runner_mod

    dataset = runner_mod.build_dataset(spec)
    clf = runner_mod.build_classifier(spec, dataset)
    ids, points, labels = runner_mod.select_points(spec, dataset)
    x = points[ids.index(row["point_id"])]
    si = spec.smoothing["sigmas"].index(row["sigma"])
    ni = spec.smoothing["ns"].index(row["n"])
    scfg = SmoothingConfig(sigma=spec.smoothing["sigmas"][si], n=row["n"],
                           alpha=spec.smoothing["alpha"], seed=spec.seed)
    oracle = DecisionOracle.from_smoothed(
        clf, scfg, Stream.from_seed(spec.seed, "attack", row["point_id"],
                                    si, ni, row["attack"]))
    acfg = AttackConfig(
        budget=spec.attack["budget"], init_cap=spec.attack["init_cap"],
        bisect_tol=spec.attack["bisect_tol"],
        seed=Stream.from_seed(spec.seed, "attack-seed", row["point_id"],
                              si, ni, row["attack"]).key)
    trace = ATTACKS[row["attack"]](oracle, x, row["label_o"], acfg)
    return clf, scfg, trace


def _measured_flip_prob(clf, scfg, x, label, stream, trials=20000):
    flips = 0
    for i in range(trials):
        if smoothed_decide(clf, scfg, x, stream.child(i)).label != label:
            flips += 1
    return flips / trials


def test_criterion_09_certified_bound_vs_found_distortion(calibrated_sweep):
    """Certified lower bounds never beat a genuine attack.

    Every row where the attack produced a perturbation must land strictly
    beyond the certified radius. The rare rows at or under the bound must
    be vote-noise mirages: the found point's true flip probability stays
    below 1/2, so the exact smoothed classifier keeps its label and the
    certificate stands. Each such row is replayed and measured.
    """
    t0 = time.time()
    res, out = calibrated_sweep
    rows = res.records
    assert rows, "sweep produced no records"
    assert not res.summary["metadata"]["errors"]

    certified = [r for r in rows if r["radius_lower"] > 0]
    assert certified, "no rows carry a positive certificate"
    suspect = [r for r in certified
               if r["distortion"] is not None
               and r["distortion"] <= r["radius_lower"]]
    dominant = [r for r in certified
                if r["distortion"] is not None
                and r["distortion"] > r["radius_lower"]]
    print(f"\n  [criterion 9] rows={len(rows)} certified={len(certified)} "
          f"dominant={len(dominant)} at-or-under-bound={len(suspect)}")

    # rows at or under the bound: prove each is a realized-vote mirage
    for r in suspect:
        clf, scfg, trace = _replay_attack_unit(res.spec, r)
        from smoothlab.harness import round9
        replayed = 0.0 if trace.final_distortion is None \
            else round9(trace.final_distortion)
        assert replayed == r["distortion"], (
            f"replay of {r['point_id']}/{r['attack']} diverged: "
            f"{replayed} != {r['distortion']}")
        assert trace.final_adversarial is not None
        flip = _measured_flip_prob(
            clf, scfg, trace.final_adversarial, r["label_o"],
            Stream.from_seed(991, "flip-check", r["point_id"],
                             str(r["sigma"]), r["n"], r["attack"]))
        se = math.sqrt(max(flip * (1 - flip), 1e-12) / 20000)
        print(f"    under-bound row point={r['point_id']} n={r['n']} "
              f"sigma={r['sigma']:.4g} {r['attack']}: measured flip "
              f"probability {flip:.4f} (+3se {flip + 3 * se:.4f})")
        assert flip + 3 * se < 0.5, (
            f"point {r['point_id']} {r['attack']} (sigma {r['sigma']}, "
            f"n {r['n']}): found point flips with probability {flip:.4f}"
            f" >= 1/2 — the certificate is genuinely violated")

    # every genuine attack product lies strictly beyond the bound
    assert len(dominant) + len(suspect) == len(
        [r for r in certified if r["distortion"] is not None])
    ratios = sorted(r["distortion"] / r["radius_lower"] for r in dominant)
    print(f"  [criterion 9] distortion/bound over {len(ratios)} dominant "
          f"rows: min={ratios[0]:.2f} median={ratios[len(ratios) // 2]:.2f} "
          f"max={ratios[-1]:.0f}")
    assert ratios[0] > 1.0
    assert time.time() - t0 < 600.0


def test_criterion_10_fewer_votes_vs_mean_distortion(fixed_sigma_sweep):
    """Mean found distortion at 10 votes vs 200 votes, per noise scale.

    The full-scale finding is that fewer votes make the boundary noisier
    and defeat the geometric attacks (RayS excepted). At this desk scale
    the recorded minimum rides single realized flips: a 10-vote oracle
    hands out spuriously small flips near the frontier faster than it
    degrades the search, so the ordering inverts. The assertion states
    the full-scale direction and the failure documents the inversion;
    the mechanism notes live in the repository's decision ledger.
    """
    res, _ = fixed_sigma_sweep
    cells = {}
    for r in res.records:
        if r["distortion"] is not None:
            cells.setdefault((r["sigma"], r["n"], r["attack"]),
                             []).append(r["distortion"])
    means = {k: sum(v) / len(v) for k, v in cells.items()}
    print("\n  [criterion 10] mean found distortion per cell:")
    for (s, n, a) in sorted(means):
        print(f"    sigma={s:<5} n={n:<4} {a:<8} "
              f"mean={means[(s, n, a)]:.4f} rows={len(cells[(s, n, a)])}")
    failures = []
    for sigma in (0.05, 0.15):
        for attack in ("hsja", "surfree"):
            lo, hi = means[(sigma, 10, attack)], means[(sigma, 200, attack)]
            if not lo >= hi:
                failures.append(f"{attack} at sigma={sigma}: "
                                f"mean(n=10)={lo:.4f} < mean(n=200)={hi:.4f}")
    assert not failures, (
        "10-vote oracles yielded smaller mean distortion than 200-vote "
        "ones (inverted vs the full-scale finding): " + "; ".join(failures))


def test_criterion_11_noise_scale_tradeoff(calibrated_curves,
                                           calibrated_sweep):
    """Larger noise certifies farther; its practical gain is only reported.

    The certified-accuracy curve at the larger calibrated noise scale must
    extend strictly beyond the smaller one, win the area under the curve,
    and dominate the tail before the smaller curve dies. The attack-side
    distortion change is printed with no asserted direction and both runs
    emit their figures.
    """
    res, out = calibrated_curves
    curves = {c["sigma"]: c["curve"] for c in res.summary["stats"]["curves"]}
    assert len(curves) == 2
    sig_lo, sig_hi = sorted(curves)
    lo, hi = curves[sig_lo], curves[sig_hi]

    def auc(curve):
        return sum((curve[i + 1][0] - curve[i][0]) * curve[i][1]
                   for i in range(len(curve) - 1))

    def acc_at(curve, r):
        level = 0.0
        for x, y in curve:
            if x <= r:
                level = y
            else:
                break
        return level

    max_lo, max_hi = lo[-1][0], hi[-1][0]
    print(f"\n  [criterion 11] certified curves: sigma={sig_lo:.4g} "
          f"acc@0={lo[0][1]:.2f} max_radius={max_lo:.4f} auc={auc(lo):.4f}"
          f" | sigma={sig_hi:.4g} acc@0={hi[0][1]:.2f} "
          f"max_radius={max_hi:.4f} auc={auc(hi):.4f}")
    assert max_hi > max_lo, "larger noise did not extend the certified reach"
    assert auc(hi) > auc(lo), "larger noise did not win the curve area"
    grid = sorted({x for x, _ in lo} | {x for x, _ in hi})
    crossover = 0.0
    for r in grid:
        if acc_at(hi, r) < acc_at(lo, r):
            crossover = r
    assert crossover < max_lo, (
        f"larger noise never dominates before the smaller curve ends "
        f"(last crossing at {crossover:.4f}, smaller reach {max_lo:.4f})")
    print(f"  [criterion 11] larger-noise curve dominates for radius >= "
          f"{crossover:.4f} (smaller curve ends at {max_lo:.4f})")

    sweep_res, sweep_out = calibrated_sweep
    per = {}
    for r in sweep_res.records:
        if r["n"] == 200 and r["distortion"] is not None:
            per.setdefault((r["sigma"], r["attack"]), []).append(r["distortion"])
    print("  [criterion 11] attack distortion at n=200, smaller -> larger "
          "noise (reported, no asserted direction):")
    for attack in ("hsja", "surfree", "rays"):
        m_lo = sum(per[(sig_lo, attack)]) / len(per[(sig_lo, attack)])
        m_hi = sum(per[(sig_hi, attack)]) / len(per[(sig_hi, attack)])
        print(f"    {attack:<8} {m_lo:.4f} -> {m_hi:.4f}  (x{m_hi / m_lo:.3f})")

    assert (out / "certified-curve.svg").exists()
    assert (sweep_out / "distortion-vs-accuracy.svg").exists()


# ---------------------------------------------------------------------------
# criterion 12: reruns are byte-identical, every experiment kind


_DATASET = """
[dataset]
name = "gaussian-blobs"
size = 30
dimension = 5
seed = 3

[classifier]
kind = "linear"
fit = "centroid"
"""

_KIND_SPECS = {
    "certify": """
kind = "certify"
seed = 7
points = 4
""" + _DATASET + """

[smoothing]
sigmas = [0.5]
ns = [11]

[certify]
mode = "mc"
""",
    "attack-sweep": """
kind = "attack-sweep"
seed = 7
points = 3
""" + _DATASET + """

[smoothing]
sigmas = [0.5]
ns = [11]

[attack]
names = ["hsja", "rays"]
budget = 300
pa = [0.5]
""",
    "binary-search-dist": """
kind = "binary-search-dist"
seed = 7
points = 2
""" + _DATASET + """

[smoothing]
sigmas = [0.5]
ns = [11]

[probe]
trials = 20
tol = 1e-3
""",
    "slice": """
kind = "slice"
seed = 7
points = 1
""" + _DATASET + """

[smoothing]
sigmas = [0.5]
ns = [11]

[probe]
extent = 1.0
resolution = 7
""",
    "direction-profile": """
kind = "direction-profile"
seed = 7
points = 2
""" + _DATASET + """

[smoothing]
sigmas = [0.5]
ns = [11]

[probe]
t_max = 1.5
t_steps = 12
probes = 30
""",
    "sorm-check": """
kind = "sorm-check"
seed = 7

[sorm]
betas = [0.5, 2.0]
beta_kappas = [-0.25, 0.25]
dimension = 3
sigma = 0.1
""",
}


@pytest.mark.parametrize("kind", sorted(_KIND_SPECS))
def test_criterion_12_rerun_byte_identical(kind, tmp_path):
    spec_path = tmp_path / "spec.toml"
    spec_path.write_text(_KIND_SPECS[kind])
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        res = run_experiment(ExperimentSpec.from_toml(spec_path))
        res.write(out)
        blobs.append((out / "records.csv").read_bytes())
    assert blobs[0] == blobs[1], f"{kind}: rerun changed records.csv"
