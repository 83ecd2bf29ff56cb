import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from toruslab import local_building as lb
from toruslab.errors import InputError

import oracles

PRIMES = [5, 7, 11, 13]


def golden_conjugated(p):
    return lb.LocalTorusData.conjugated(p, lb.companion_matrix([-1, -1]), [[1, 0], [0, p]])


# -- apartments ------------------------------------------------------------


def test_apartment_examples():
    u = lb.ApartmentPoint((0, 0, 0), 7)
    v = lb.ApartmentPoint((1, 0, 0), 7)
    assert lb.apartment_class_distance(u, v) == pytest.approx(0.5 * math.log(7))
    assert u.is_vertex and not lb.ApartmentPoint((Fraction(1, 2), 0, 0), 7).is_vertex
    with pytest.raises(InputError):
        lb.apartment_class_distance(u, lb.ApartmentPoint((0, 0, 0), 5))


ratio = st.fractions(min_value=-20, max_value=20, max_denominator=6)


@settings(max_examples=1000)
@given(st.lists(st.tuples(ratio, ratio, ratio), min_size=3, max_size=3), ratio)
def test_apartment_metric(pts, c):
    a, b, d = (lb.ApartmentPoint(t, None) for t in pts)
    dist = lb.apartment_class_distance
    assert dist(a, d) <= dist(a, b) + dist(b, d) + 1e-12
    shifted = lb.ApartmentPoint(tuple(x + c for x in pts[0]), None)
    assert dist(shifted, b) == pytest.approx(dist(a, b), abs=1e-12)
    assert dist(a, b) == dist(b, a)


def test_vertex_distance_examples():
    assert lb.vertex_distance([[1, 0], [0, 1]], 5) == 0
    assert lb.vertex_distance([[1, 0], [0, 5]], 5) == pytest.approx(0.5 * math.log(5))


@settings(max_examples=60)
@given(st.sampled_from(PRIMES), st.lists(st.integers(-60, 60), min_size=9, max_size=9),
       st.integers(1, 50))
def test_vertex_distance_matches_smith(p, entries, den):
    g = [[Fraction(entries[3 * i + j], den) for j in range(3)] for i in range(3)]
    if oracles.int_det([[int(x * den) for x in r] for r in g]) == 0:
        return
    e = oracles.sympy_smith_exponents(g, p)
    assert lb.vertex_exponents(g, p) == e
    assert lb.vertex_distance_units(g, p) == Fraction(e[-1] - e[0], 2)
    # agreement with the apartment formula for the diagonalized lattice
    a = lb.ApartmentPoint(tuple(e), p)
    o = lb.ApartmentPoint((0, 0, 0), p)
    assert lb.apartment_class_distance(a, o) == pytest.approx(lb.vertex_distance(g, p))


# -- orders and discriminants ----------------------------------------------


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_disc_examples(p):
    assert lb.disc_D(lb.LocalTorusData(p, lb.companion_matrix([0, -1]))) == 1
    if p != 5:
        assert lb.disc_D(golden_conjugated(p)) == p ** 2
        assert lb.algebra_disc(golden_conjugated(p)) == 1
    if p > 2:
        ram = lb.LocalTorusData(p, lb.companion_matrix([-p, 0]))
        assert lb.disc_D(ram) == p
        assert lb.algebra_disc(ram) == p


def test_algebra_disc_product_rule():
    # (X^2 - 7)(X - 1) splits as a ramified quadratic plus Q_7
    p = 7
    A1 = lb.LocalTorusData(p, lb.companion_matrix([-p, 0]))
    A3 = lb.LocalTorusData(p, lb.companion_matrix([p, -p, -1]))
    assert lb.algebra_disc(A3) == lb.algebra_disc(A1) * 1


def test_lambda_is_order_of_matrices():
    d = golden_conjugated(7)
    basis, disc = lb.lambda_order(d)
    alg = d.algebra
    for f in basis:
        X = alg.matrix(f)
        assert all(Fraction(x).denominator % 7 != 0 for r in X for x in r)
    assert disc == 49


def test_canonical_norm_split():
    d = lb.LocalTorusData(5, lb.companion_matrix([0, -1]))
    cn = lb.canonical_norm(d)
    assert cn.split
    # x = a + b M has eigenvalues a and a + b
    for a, b in itertools.product(range(-30, 31, 7), range(-30, 31, 4)):
        if a == 0 and b == 0:
            continue
        want = min(oracles.padic_val(a, 5), oracles.padic_val(a + b, 5))
        assert cn.valuation([a, b]) == want


def test_canonical_norm_unramified():
    d = lb.LocalTorusData(7, lb.companion_matrix([-1, -1]))
    cn = lb.canonical_norm(d)
    assert cn.unramified and not cn.split and cn.factors == [(1, 2)]
    for a, b in [(7, 14), (1, 7), (49, 0), (0, 343)]:
        assert cn.valuation([a, b]) == min(oracles.padic_val(x, 7) for x in (a, b) if x)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_canonical_norm_ramified(p):
    cn = lb.canonical_norm(lb.LocalTorusData(p, lb.companion_matrix([-p, 0])))
    assert cn.factors == [(2, 1)]
    assert cn.valuation([0, 1]) == Fraction(1, 2)
    assert cn.valuation([0, p]) == Fraction(3, 2)
    assert cn([p, 0]) == Fraction(1, p)


# -- unit density ----------------------------------------------------------


def residue_unit_fraction(alg, basis, p, depth=2):
    """Fraction of units among sum c_i f_i with c in (Z/p^depth)^n."""
    n = alg.n
    good = 0
    for c in itertools.product(range(p ** depth), repeat=n):
        x = [sum(ci * Fraction(f[k]) for ci, f in zip(c, basis)) for k in range(n)]
        if alg.det(x) != 0 and oracles.padic_val(alg.det(x), p) == 0:
            good += 1
    return Fraction(good, p ** (depth * n))


@pytest.mark.parametrize("p", [3, 5, 7])
def test_unit_density_residue_count(p):
    d = golden_conjugated(p)
    alg = d.algebra
    lam_b = [list(r) for r in lb.lambda_basis(d)]
    full_b = [list(r) for r in lb.maximal_order_basis(d)]
    lam = residue_unit_fraction(alg, lam_b, p)
    full = residue_unit_fraction(alg, full_b, p)
    # unit fractions are relative to each lattice; rescale by the covolume ratio
    index = abs(Fraction(sympy.Matrix(lam_b).det()) / Fraction(sympy.Matrix(full_b).det()))
    assert lb.unit_density(d) == lam / full / index
    assert float(lb.unit_density(d)) >= lb.unit_density_bound(d)
    assert float(lb.unit_density(d)) >= max(1 - 2 / p, p ** -2) / p


def test_unit_density_closed_forms():
    # index-p order Z_p + p O_A: 1/(p-1) when split, 1/(p+1) when inert
    assert lb.unit_density(golden_conjugated(11)) == Fraction(1, 10)
    assert lb.unit_density(golden_conjugated(7)) == Fraction(1, 8)
    assert lb.unit_density(lb.LocalTorusData(7, lb.companion_matrix([0, -1]))) == 1


# -- distances to the canonical norm ----------------------------------------


def test_delta_examples():
    assert lb.delta_distance(lb.LocalTorusData(7, lb.companion_matrix([0, -1])))[0] == 0
    d = golden_conjugated(11)
    assert lb.delta_distance(d)[0] == Fraction(1, 2)
    assert lb.delta_lower_bound(d) == Fraction(1, 4)
    with pytest.raises(InputError):
        lb.delta_distance(golden_conjugated(7))


@settings(max_examples=15)
@given(st.sampled_from([5, 7, 11]), st.integers(0, 10 ** 6))
def test_delta_conjugation_invariant(p, seed):
    rng = np.random.default_rng(seed)
    d = lb.random_split_data(p, 2, rng, max_exp=2)
    g = [[1, int(rng.integers(-5, 6))], [0, 1]]
    if rng.integers(2):
        g = [[g[1][0] + 1, g[1][1]], g[0]]
    if oracles.padic_val(oracles.int_det(g), p) != 0:
        return
    d2 = lb.LocalTorusData.conjugated(p, d.M, g)
    assert lb.delta_distance(d2)[0] == lb.delta_distance(d)[0]
    assert lb.delta_distance(d)[0] >= lb.delta_lower_bound(d)
    assert lb.dual_volume_ratio(d) == lb.disc_D(d)


@settings(max_examples=100)
@given(st.sampled_from(PRIMES), st.lists(st.integers(-4, 4), min_size=3, max_size=3),
       st.lists(st.integers(1, 12), min_size=3, max_size=3), st.integers(0, 10 ** 6))
def test_extreme_inequality(p, s, units, seed):
    units = [u for u in units]
    if any(u % p == 0 for u in units):
        return
    rng = np.random.default_rng(seed)
    g = lb._random_p_matrix(p, 3, rng, 0)
    dist, half = lb.extreme_check(p, s, units, g)
    assert dist >= half


def test_spread_counts_formula():
    for n in (2, 3, 4):
        for D in range(1, 8):
            assert lb._spread_exact(n, D) == (D + 1) ** n - 2 * D ** n + (D - 1) ** n


# -- local integrals --------------------------------------------------------


@pytest.mark.parametrize("p,n", [(5, 2), (7, 2), (7, 3)])
def test_split_constant(p, n):
    eye = [[int(i == j) for j in range(n)] for i in range(n)]
    val = lb.local_integral_padic(eye, p)
    hand = ((1 - 1 / p) / (1 - p ** -0.5)) ** n
    assert val == pytest.approx(hand, rel=1e-13)
    assert lb.local_integral_split_constant(p, n) == pytest.approx(hand, rel=1e-15)


@pytest.mark.parametrize("r", [0, 1, 3])
def test_closed_form_vs_truncated_n2(r):
    p = 7
    I = lb.PadicLocalIntegral(lb.ray_lattice(2, p, r), p)
    assert abs(I.closed_form() - I.truncated(60)) < 1e-12 * I.closed_form()


def test_integral_scale_invariant():
    p = 5
    L = lb.ray_lattice(3, p, 2)
    pL = [[p * x for x in r] for r in L]
    assert lb.local_integral_padic(pL, p) == pytest.approx(lb.local_integral_padic(L, p), rel=1e-13)


def test_real_integral_sphere():
    res = lb.local_integral_real(np.eye(3), samples=100_000)
    exact = lb.real_integral_sphere_exact(3)
    assert abs(res.value - exact) < 0.01 * exact


def test_real_integral_dilation_invariant():
    Q = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.5]])
    D = np.diag([0.5, 2.0, 1.3])
    a = lb.local_integral_real(Q, samples=100_000)
    b = lb.local_integral_real(D @ Q @ D, samples=100_000, seed=1)
    assert abs(a.value - b.value) < 4 * math.hypot(a.stderr, b.stderr) + 0.01 * a.value
    with pytest.raises(InputError):
        lb.local_integral_real(-np.eye(2))


@pytest.mark.parametrize("t", [(0, 0), (1, 0), (2, -1, 0), (0, 3, 1)])
def test_tate(t):
    err, eps = lb.tate_local_check(5, t, [2, 0.5 + 3j, 1.7 - 2j, -0.3])
    assert err < 1e-12 and eps < 1e-12
