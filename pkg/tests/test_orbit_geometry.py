import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruslab import order_core as oc
from toruslab import orbit_geometry as og
from toruslab import correspondence as co
from toruslab import equidist as ed

POLYS = ["x^2 - 2", "x^2 + 5", "x^2 - x - 11", "x^3 - 2", "x^3 - x - 1", "x^3 - 3x - 1", "x^3 + x^2 - 2x - 1"]


def P(text):
    return oc.MonicIntPoly.parse(text)


def same_lattice(A, B, tol=1e-7):
    U = A @ np.linalg.inv(B)
    R = np.rint(U)
    return np.max(np.abs(U - R)) < tol and abs(abs(np.linalg.det(R)) - 1) < 1e-9


def spectrum(B, R=2.5):
    v = ed.vectors_in_ball(B, R)
    return np.sort(np.linalg.norm(v, axis=1))


@pytest.mark.parametrize("text", POLYS)
def test_roots(text):
    p = P(text)
    th = og.real_embedding(p)
    assert th.signature == p.signature
    assert list(th.real_roots) == sorted(th.real_roots)
    for z in th.roots:
        assert abs(p.eval(z)) < 1e-9
    assert all(z.imag > 0 for z in th.complex_roots)


@pytest.mark.parametrize("text", POLYS)
def test_embedding_covolume(text):
    p = P(text)
    for pk in co.enumerate_coarse_classes(p):
        for C in pk.classes:
            B = og.unnormalized_basis(C)
            N = float(C.representative.norm)
            assert abs(abs(np.linalg.det(B)) - abs(p.disc) ** 0.5 * N) < 1e-9 * abs(p.disc) ** 0.5 * N
            E = og.embed_class(C)
            assert abs(abs(E.det) - 1) < 1e-12


@pytest.mark.parametrize("text", POLYS)
def test_volume_is_regulator(text):
    O = oc.order_from_poly(P(text))
    orb = og.orbit_of(O)
    assert orb.rank == sum(P(text).signature) - 1
    if orb.rank:
        assert abs(orb.volume - oc.unit_group(O).regulator) < 1e-9 * orb.volume


@pytest.mark.parametrize("text", POLYS)
def test_archimedean_factor_depends_only_on_degree(text):
    p = P(text)
    fac = og.archimedean_factor(og.real_embedding(p))
    assert abs(fac - (2 * p.n) ** (1 - p.n)) < 1e-12
    _, f2 = og.orbit_discriminant(oc.order_from_poly(p), reference=fac)
    assert f2 == fac


@pytest.mark.parametrize("text", ["x^2 - 2", "x^3 - 2", "x^3 - 3x - 1"])
def test_base_point_and_stabilizer(text):
    orb = og.orbit_of(oc.order_from_poly(P(text)))
    grid = og.sample_orbit(orb, "grid", k=1)
    assert len(grid) == 1
    assert same_lattice(grid[0].basis, orb.base.basis)
    s = og.OrbitSampler(orb)
    t = s.log_vector(np.full(orb.rank, 0.37))
    # a unit moves the point by signs and rotations only, so compare length spectra
    for row in orb.unit_logs:
        assert np.allclose(spectrum(s.point(t + row)), spectrum(s.point(t)), atol=1e-7)


@pytest.mark.parametrize("text", ["x^2 - 2", "x^3 - 2", "x^3 - 3x - 1"])
def test_small_flow_matches_diagonal_action(text):
    orb = og.orbit_of(oc.order_from_poly(P(text)))
    s = og.OrbitSampler(orb)
    t = s.log_vector(np.full(orb.rank, 0.2))
    direct = orb.base.basis * s.inf.coord_scale(t)
    assert same_lattice(np.abs(s.point(t)), np.abs(direct), tol=1e-6) or same_lattice(s.point(t), direct, tol=1e-6)


@settings(max_examples=30)
@given(st.sampled_from(POLYS), st.integers(0, 2 ** 31), st.integers(0, 3))
def test_samples_unimodular_and_reproducible(text, seed, stream):
    orb = og.orbit_of(oc.order_from_poly(P(text)))
    a = og.sample_orbit(orb, "monte_carlo", m=5, seed=seed, stream=stream)
    b = og.sample_orbit(orb, "monte_carlo", m=5, seed=seed, stream=stream)
    for x, y in zip(a, b):
        assert np.array_equal(x.basis, y.basis)
        assert abs(abs(x.det) - 1) < 1e-9


def test_sample_prefix_stable():
    orb = og.orbit_of(oc.order_from_poly(P("x^3 - 3x - 1")))
    short = og.sample_params(orb, "monte_carlo", m=10, seed=5)
    long = og.sample_params(orb, "monte_carlo", m=3000, seed=5)
    assert np.array_equal(short, long[:10])


def test_samples_roundtrip(tmp_path):
    orb = og.orbit_of(oc.order_from_poly(P("x^3 - 2")))
    pts = og.sample_orbit(orb, "grid", k=4)
    og.write_samples(tmp_path / "s.bin", pts, {"poly": "x^3 - 2"})
    arr, side = og.read_samples(tmp_path / "s.bin")
    assert side["count"] == 4 and side["poly"] == "x^3 - 2"
    assert np.array_equal(arr, np.array([p.basis for p in pts]))


def test_unknown_scheme():
    from toruslab.errors import InputError

    orb = og.orbit_of(oc.order_from_poly(P("x^2 - 2")))
    with pytest.raises(InputError):
        og.sample_params(orb, "sobol")
