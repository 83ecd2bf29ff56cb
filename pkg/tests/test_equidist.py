import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from toruslab import correspondence as co
from toruslab import equidist as ed
from toruslab import order_core as oc
from toruslab.errors import InputError

import oracles


def P(text):
    return oc.MonicIntPoly.parse(text)


def unimodular(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    return B / abs(np.linalg.det(B)) ** (1 / n)


def sorted_rows(v):
    v = np.round(np.asarray(v), 9)
    return v[np.lexsort(v.T[::-1])]


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]), st.floats(0.5, 2.0))
def test_vectors_in_ball_matches_scan(seed, n, R):
    B = ed.canonical_basis(unimodular(seed, n))
    got = ed.vectors_in_ball(B, R)
    want = oracles.brute_vectors(B, R, box=8)
    assert np.array_equal(sorted_rows(got), sorted_rows(want))


def test_gaussian_on_square_lattice():
    th = oracles.theta_one()
    for n in (2, 3):
        val = ed.siegel_transform(np.eye(n), ed.TestFunction.gaussian(n))
        assert abs(val - (th ** n - 1)) < 1e-13


def test_bump_on_square_lattice():
    f = ed.TestFunction.bump((0.9, 0.2), 0.25)
    g = np.array(np.meshgrid(range(-3, 4), range(-3, 4))).reshape(2, -1).T
    g = g[np.any(g != 0, axis=1)]
    assert abs(ed.siegel_transform(np.eye(2), f) - f(g).sum()) < 1e-13


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("eps", [0.1, 0.25])
def test_bump_integral(n, eps):
    f = ed.TestFunction.bump((0.0,) * n, eps)
    area = n * math.pi ** (n / 2) / math.gamma(n / 2 + 1)  # surface of the unit sphere
    radial, _ = integrate.quad(lambda r: f(np.array([[r] + [0.0] * (n - 1)]))[0] * area * r ** (n - 1),
                               0, 2 * eps, points=[eps], epsabs=0, epsrel=1e-12)
    assert abs(ed.siegel_rhs(f) - radial) < 1e-10 * radial


def test_gaussian_integral():
    assert ed.siegel_rhs(ed.TestFunction.gaussian(3, 1.25)) == pytest.approx(1.25 ** 3, rel=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]))
def test_cusp_height_bounds(seed, n):
    B = unimodular(seed, n)
    h = ed.cusp_height(B)
    assert h >= ed.hermite_bound(n) - 1e-12
    short = min(np.linalg.norm(oracles.brute_vectors(ed.canonical_basis(B), 3.0, box=6), axis=1))
    assert abs(h - 1 / short) < 1e-9


def test_lattice_distance_invariant():
    B = unimodular(4, 3)
    U = np.array([[1, 2, 0], [0, 1, 0], [1, 1, 1]], dtype=float)
    assert ed.lattice_distance(U @ B, B) < 1e-9
    assert ed.lattice_distances([U @ B, B], B).max() < 1e-9
    assert ed.lattice_distance(np.eye(3), B) > 0


def test_masses_monotone():
    rng = np.random.default_rng(1)
    vals = rng.random(1000)
    cusp = [ed.empirical_mass(vals, t, "cusp") for t in np.linspace(0, 1, 11)]
    ball = [ed.empirical_mass(vals, t, "ball") for t in np.linspace(0, 1, 11)]
    assert cusp == sorted(cusp, reverse=True) and ball == sorted(ball)
    assert cusp[0] == 1.0 and ball[-1] == 1.0
    with pytest.raises(InputError):
        ed.empirical_mass(vals, 0.5, "shell")


def test_fit_exponent_known_power():
    # mass(eps) = eps^3 for u^(1/3), u uniform
    vals = np.random.default_rng(2).random(200_000) ** (1 / 3)
    fit = ed.fit_exponent(vals, [0.2, 0.3, 0.45, 0.6, 0.8], "ball", boots=100)
    assert fit.contains(3.0) and abs(fit.slope - 3) < 0.05


@pytest.mark.parametrize("text", ["x^2 - 2", "x^2 - 10", "x^3 - 3x - 1", "x^3 - 2"])
def test_hecke_unfolding(text):
    for pk in co.enumerate_coarse_classes(P(text))[:1]:
        res = ed.hecke_unfolding_check(pk.classes[-1])
        assert res.relerr < 1e-9
        assert res.tail_change < 1e-12


@pytest.mark.parametrize("text", ["x^2 + 14", "x^2 + 23", "x^2 - 79"])
def test_character_sums(text):
    O = oc.maximal_order(P(text))
    pic = oc.picard_group(O)
    assert ed.class_character_sum(O, 0) == pytest.approx(1.0)
    chars = pic.characters()
    for i, c in enumerate(chars):
        conj = [(-e) % 1 for e in c]
        a = ed.class_character_sum(O, i, delta=2.0)
        b = ed.class_character_sum(O, conj, delta=2.0)
        assert abs(a - b.conjugate()) < 1e-12
        assert abs(a) <= 1 + 1e-12


def test_weyl_row_reproducible_and_csv():
    pk = ed.invertible_packet(P("x^2 - x - 29"))
    suite = ed.default_suite(2)
    a = ed.weyl_average(pk, suite, step=0.2)
    b = ed.weyl_average(pk, suite, step=0.2)
    assert np.array_equal(a.means, b.means)
    text = ed.weyl_csv([a], suite)
    assert text.endswith("\r\n") and text.count("\r\n") == 2
    mc = ed.weyl_average(pk, suite, scheme="monte_carlo", m=64, seed=3)
    assert mc.samples == 64 * pk.size


def test_family_polys():
    ps = ed.family_polys("quadratic", 10, 10_000, 12)
    assert len(ps) == 12 and all(p.n == 2 for p in ps)
    ds = [abs(p.disc) for p in ps]
    assert ds == sorted(ds)
    with pytest.raises(InputError):
        ed.family_polys("quartic", 1, 2, 1)
