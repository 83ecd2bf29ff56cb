"""Acceptance suite: one test per criterion, each leaving a PASS/FAIL line
in the terminal summary.  Tolerances and budgets are the required ones."""

import csv
import io
import json
import math
import time

import numpy as np
import pytest

from toruslab import cli
from toruslab import correspondence as co
from toruslab import equidist as ed
from toruslab import local_building as lb
from toruslab import order_core as oc
from toruslab import zeta_lfn as zl

import oracles


def poly(text):
    return oc.MonicIntPoly.parse(text)


def note(record_property, text):
    record_property("detail", text)


# 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1, "class census against matrix conjugacy")
def test_census(record_property):
    t0 = time.time()
    bad, total = [], 0
    for n, bound in ((2, 400), (3, 200)):
        for P in co.desk_corpus(n, bound):
            row = co.census_check(P)
            total += 1
            if not row.ok:
                bad.append(str(P))
    took = time.time() - t0
    note(record_property, f"{total} polynomials, {len(bad)} mismatches, {took:.0f}s (budget 600s)")
    assert not bad, bad[:10]
    assert took <= 600


# 2 ---------------------------------------------------------------------------

QUADRATIC_UNITS = [f"x^2 - {d}" for d in (2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15, 17, 18, 19, 20, 21, 22, 23)] \
    + ["x^2 - x - 1"]
CUBIC_UNITS = ["x^3 - 3x - 1", "x^3 + x^2 - 2x - 1", "x^3 - 4x - 1", "x^3 - x^2 - 3x + 1", "x^3 - 5x - 1"]


@pytest.mark.criterion(2, "regulators against brute-force unit search")
def test_units(record_property):
    t0 = time.time()
    worst = 0.0
    for text in QUADRATIC_UNITS:
        P = poly(text)
        reg = oc.unit_group(oc.order_from_poly(P)).regulator
        worst = max(worst, abs(reg - oracles.quadratic_regulator(P.coeffs[1], P.coeffs[0])) / reg)
    for text in CUBIC_UNITS:
        P = poly(text)
        reg = oc.unit_group(oc.order_from_poly(P)).regulator
        worst = max(worst, abs(reg - oracles.cubic_units_regulator(list(P.coeffs), 8)) / reg)
    took = time.time() - t0
    note(record_property, f"{len(QUADRATIC_UNITS)}+{len(CUBIC_UNITS)} orders, worst relerr {worst:.1e}, {took:.0f}s")
    assert worst <= 1e-9
    assert took <= 120


# 3 ---------------------------------------------------------------------------


@pytest.mark.criterion(3, "class number formula")
def test_class_number_formula(record_property):
    t0 = time.time()
    r5 = zl.cnf_check(oc.order_from_poly(poly("x^2 - x - 1")), 10 ** 6)
    ri = zl.cnf_check(oc.order_from_poly(poly("x^2 + 1")), 10 ** 6)
    r3 = zl.cnf_check(oc.order_from_poly(poly("x^3 - x - 1")), 10 ** 5)
    took = time.time() - t0
    note(record_property, f"Q(sqrt5) {r5.relerr:.1e}, Q(i) {ri.relerr:.1e}, X^3-X-1 {r3.relerr:.1e}, {took:.0f}s")
    assert r5.relerr <= 0.02 and ri.relerr <= 0.02
    assert r3.relerr <= 0.05
    assert took <= 300


# 4 ---------------------------------------------------------------------------


def classes_of(texts, count):
    out = []
    for text in texts:
        for pk in co.enumerate_coarse_classes(poly(text)):
            out.extend(pk.classes)
    return out[:count]


@pytest.mark.criterion(4, "orbit averages against the unfolded sum")
def test_hecke(record_property):
    t0 = time.time()
    quad = classes_of(["x^2 - 2", "x^2 - 3", "x^2 - 10", "x^2 - 15", "x^2 - 79", "x^2 - x - 13"], 10)
    cub = classes_of(["x^3 - 3x - 1", "x^3 - 2", "x^3 - x - 1", "x^3 - 4x - 1", "x^3 - 5x - 1"], 5)
    wq = max(ed.hecke_unfolding_check(C).relerr for C in quad)
    wc = max(ed.hecke_unfolding_check(C).relerr for C in cub)
    took = time.time() - t0
    note(record_property, f"{len(quad)} quadratic worst {wq:.1e}, {len(cub)} cubic worst {wc:.1e}, {took:.0f}s")
    assert len(quad) == 10 and len(cub) == 5
    assert wq <= 1e-6 and wc <= 1e-4
    assert took <= 300


# 5 ---------------------------------------------------------------------------


def weyl_rows(family, kmin, kmax, count, scheme, step, samples):
    rows = []
    for P in ed.family_polys(family, kmin, kmax, count):
        r = cli._weyl_row((str(P), scheme, step, samples, 0))
        rows.append(ed.WeylRow(r["disc"], r["volume"], np.array(r["means"]), np.array(r["rhs"]),
                               np.array(r["stderr"]), r["samples"], r["classes"]))
    return rows


@pytest.mark.criterion(5, "Weyl averages approach the Siegel integral")
def test_weyl_trend(record_property, capsys):
    t0 = time.time()
    rows = weyl_rows("quadratic", 25, 249_999, 30, "grid", 0.05, 0)
    discs = [r.disc for r in rows]
    first, last = ed.decile_drop(rows)
    drop = 1 - last / first
    cubic = weyl_rows("cubic", 3, 200, 8, "monte_carlo", 0.0, 4096)
    cf, cl = ed.decile_drop(cubic)
    took = time.time() - t0
    with capsys.disabled():
        print(f"\ncubic x^3-kx-1, k<=200 (reported only): first {cf:.3f} last {cl:.3f}")
    note(record_property, f"quadratic disc {min(discs)}..{max(discs)}: {first:.3f} -> {last:.3f} "
                          f"(drop {drop:.0%}); cubic {cf:.3f} -> {cl:.3f} (report); {took:.0f}s")
    assert min(discs) >= 100 and max(discs) <= 10 ** 6
    assert drop >= 0.5
    assert took <= 1800


# 6 ---------------------------------------------------------------------------

CUSP_R = [1.5, 2.0, 2.5, 3.0, 4.0]
BALL_EPS = [0.3, 0.4, 0.5, 0.6]


@pytest.mark.criterion(6, "cusp and ball mass exponents")
def test_cusp_ball(record_property):
    t0 = time.time()
    P = poly("x^3 - 200x - 1")
    pk = ed.invertible_packet(P)
    pts = ed.packet_samples(pk, "monte_carlo", m=100_000 // pk.size + 1, seed=1)
    cusp = ed.fit_exponent(ed.cusp_heights(pts), CUSP_R, "cusp")
    ball = ed.fit_exponent(ed.lattice_distances(pts, np.eye(3)), BALL_EPS, "ball")
    took = time.time() - t0
    note(record_property, f"disc {pk.discriminant}, {len(pts)} samples: cusp slope {cusp.slope:.2f} "
                          f"[{cusp.lo:.2f}, {cusp.hi:.2f}], ball slope {ball.slope:.2f} "
                          f"[{ball.lo:.2f}, {ball.hi:.2f}], {took:.0f}s")
    assert len(pts) >= 10 ** 5
    assert cusp.contains(-3.0)
    assert ball.contains(3.0) and not ball.contains(2.0)
    assert took <= 1200


# 7 ---------------------------------------------------------------------------


@pytest.mark.criterion(7, "local building inequalities")
def test_building_lemmas(record_property):
    t0 = time.time()
    rng = np.random.default_rng(2024)
    primes = [5, 7, 11, 13]
    fails = {"dual volume": 0, "unit density": 0, "extreme": 0, "delta": 0}
    for i in range(100):
        p = primes[i % 4]
        n = 2 if i % 2 == 0 else 3
        d = lb.random_split_data(p, n, rng, max_exp=2)
        if lb.dual_volume_ratio(d) != lb.disc_D(d):
            fails["dual volume"] += 1
        if float(lb.unit_density(d)) < lb.unit_density_bound(d):
            fails["unit density"] += 1
        if lb.delta_distance(d)[0] < lb.delta_lower_bound(d):
            fails["delta"] += 1
        for _ in range(5):
            s = [int(x) for x in rng.integers(-6, 7, size=n)]
            units = [int(u) for u in rng.integers(1, p, size=n)]
            g = lb._random_p_matrix(p, n, rng, 0)
            dist, half = lb.extreme_check(p, s, units, g)
            if dist < half:
                fails["extreme"] += 1
    took = time.time() - t0
    note(record_property, f"100 data per inequality, failures {fails}, {took:.0f}s")
    assert not any(fails.values())
    assert took <= 300


# 8 ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "local integral decays along apartment rays")
def test_integral_decay(record_property):
    t0 = time.time()
    p = 7
    slopes = {}
    for n in (2, 3):
        prof = lb.decay_profile(n, p, 20)
        r = np.array([x for x, _ in prof if x >= 2], dtype=float)
        logI = np.log([v for x, v in prof if x >= 2])
        slopes[n] = float(np.polyfit(r, logI, 1)[0]) / math.log(p)
        assert np.all(np.diff(logI) < 0)
    exact = lb.PadicLocalIntegral(lb.ray_lattice(3, p, 3), p)
    gap = abs(exact.closed_form() - exact.truncated(40)) / exact.closed_form()
    took = time.time() - t0
    note(record_property, f"slopes / log p: n=2 {slopes[2]:.3f}, n=3 {slopes[3]:.3f}; "
                          f"closed form vs truncated {gap:.1e}; {took:.0f}s")
    assert all(s <= -0.05 for s in slopes.values())
    assert gap <= 1e-12
    assert took <= 60


# 9 ---------------------------------------------------------------------------


@pytest.mark.criterion(9, "local functional equation")
def test_tate(record_property):
    t0 = time.time()
    grid = [2, 3, 0.25, 1.5 + 2j, 0.5 + 7j, -1.25, 0.8 - 3j, 2.5 + 0.5j, -0.5 + 1j, 4 - 4j]
    worst_err = worst_eps = 0.0
    for p in (5, 7, 11):
        for t in [(0, 0), (1, 0), (0, 2, -1), (3, 1, 1)]:
            err, eps = lb.tate_local_check(p, t, grid)
            worst_err, worst_eps = max(worst_err, err), max(worst_eps, eps)
    took = time.time() - t0
    note(record_property, f"10-point grid, worst relerr {worst_err:.1e}, max ||eps|-1| {worst_eps:.1e}")
    assert worst_err <= 1e-12 and worst_eps <= 1e-12
    assert took <= 60


# 10 --------------------------------------------------------------------------


@pytest.mark.criterion(10, "class character sums (report)")
def test_character_sum_report(record_property, tmp_path, capsys):
    args = ["--out", str(tmp_path), "zeta", "--charsum", "quadratic", "--kmin", "25", "--kmax", "25000",
            "--count", "10"]
    assert cli.run(args) == 0
    text = next(tmp_path.rglob("charsum.csv")).read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    vals = [float(r["abs_character_sum"]) for r in rows]
    half = len(vals) // 2
    trend = "decreasing" if vals and np.mean(vals[half:]) < np.mean(vals[:half]) else "not decreasing"
    with capsys.disabled():
        print("\n" + text.replace("\r\n", "\n"))
    note(record_property, f"{len(rows)} orders with h >= 2, mean |sum| first half "
                          f"{np.mean(vals[:half]):.3f}, second half {np.mean(vals[half:]):.3f} ({trend})")
    assert len(rows) >= 2
    assert all(int(r["h"]) >= 2 for r in rows)


# 11 --------------------------------------------------------------------------


@pytest.mark.criterion(11, "packet volume against discriminant")
def test_volume_trend(record_property):
    t0 = time.time()
    q = zl.volume_disc_trend([zl.packet_volume(O) for O in zl.quadratic_family()])
    c = zl.volume_disc_trend([zl.packet_volume(O) for O in zl.cubic_family()])
    took = time.time() - t0
    note(record_property, f"quadratic {q.slope:.3f} [{q.lo:.3f}, {q.hi:.3f}], "
                          f"cubic {c.slope:.3f} [{c.lo:.3f}, {c.hi:.3f}], {took:.0f}s")
    assert q.within(0.35, 0.65)
    assert c.within(0.3, 0.7)
    assert took <= 600


# 12 --------------------------------------------------------------------------


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.criterion(12, "byte-identical artifacts")
def test_determinism(record_property, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nseed = 7\n[equidist]\nfamily = cubic\nkmin = 3\nkmax = 30\ncount = 3\n"
                   "scheme = monte_carlo\nsamples = 256\n[zeta]\nB = 20000\n")
    commands = [["equidist"], ["zeta", "--poly", "x^2 - x - 1"], ["zeta", "--trend", "quadratic"],
                ["building", "--prime", "11", "--poly", "x^2 - x - 1", "--conjugate", "1,0;0,11"],
                ["classes", "--poly", "x^3 - 12"]]
    trees = []
    for out, workers in (("a", "1"), ("b", "2"), ("c", "1")):
        for cmd in commands:
            assert cli.run(["--config", str(cfg), "--out", str(tmp_path / out), "--workers", workers,
                            "--no-cache", *cmd]) == 0
        trees.append(tree(tmp_path / out))
    same = trees[0] == trees[1] == trees[2]
    note(record_property, f"{len(trees[0])} files, identical across reruns and worker counts: {same}")
    assert same
