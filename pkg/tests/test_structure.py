import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtorsion import scenarios
from gtorsion.diffgeo import fd_gradient, frame_from_projector
from gtorsion.errors import NotInG, NotInM, NotSkew, RankDeficient
from gtorsion.gstructure import bracket, intrinsic_torsion_direct, killing, split_skew, so_basis
from gtorsion.transfer import difference_tensor_oracle

from .conftest import at

skew_mats = st.integers(0, 2**32 - 1).map(
    lambda s: (lambda A: A - A.transpose(0, 2, 1))(np.random.default_rng(s).standard_normal((3, 5, 5)))
)


@settings(max_examples=40, deadline=None)
@given(skew_mats)
def test_killing_form_is_ad_invariant_and_positive(mats):
    A, C, D = mats
    assert killing(bracket(A, C), D) == pytest.approx(killing(A, bracket(C, D)), abs=1e-10)
    assert killing(A, C) == pytest.approx(killing(C, A), abs=1e-12)
    assert killing(A, A) > 0.0


@settings(max_examples=30, deadline=None)
@given(skew_mats)
def test_split_is_orthogonal_and_complete(mats):
    A = mats[0]
    p = np.diag([1.0, 1.0, 0.0, 0.0, 0.0])
    a_g, a_m = split_skew(A, p, np.eye(5))
    assert np.allclose(a_g + a_m, A)
    assert abs(killing(a_g, a_m)) <= 1e-12


def test_split_rejects_non_skew():
    with pytest.raises(NotSkew):
        split_skew(np.ones((3, 3)), np.diag([1.0, 0.0, 0.0]), np.eye(3))


def test_so_basis_is_b_orthonormal(rng):
    g = np.diag([2.0, 1.0, 3.0, 0.5])
    frame = frame_from_projector(g, np.diag([1.0, 1.0, 0.0, 0.0]), 2).vectors
    G, M = so_basis(frame, g, 2)
    assert (len(G), len(M)) == (2, 4)
    allb = np.concatenate([G, M])
    gram = killing(allb[:, None], allb[None, :])
    assert np.allclose(gram, np.eye(6), atol=1e-12)


def test_rank_mismatch_is_reported():
    with pytest.raises(RankDeficient):
        frame_from_projector(np.eye(3), np.diag([1.0, 0.0, 0.0]), 2)


@pytest.mark.parametrize("sid", ["flat4-const", "product-s2xr"])
def test_integrable_totally_geodesic_cases_have_no_torsion(sid):
    _, _, geo = at(sid)
    assert np.max(np.abs(geo.xi)) <= 1e-12
    assert np.allclose(geo.L, np.eye(geo.n))
    assert np.max(np.abs(geo.S)) <= 1e-12


def test_product_frame_at_the_origin_of_the_sphere():
    sc = scenarios.get("product-s2xr")
    geo = sc.structure().at(sc.chart.point([0.0, 0.0, 0.7]))
    expected = np.array([[0.0, 0.5, 0.0], [0.0, 0.0, 0.5], [1.0, 0.0, 0.0]])
    assert np.allclose(np.abs(geo.frame.vectors), expected, atol=1e-12)


@pytest.mark.parametrize("sid", ["s3-reeb", "s7-hopf"])
def test_pushforward_matches_ambient_fields(sid):
    """Stereographic pushforward of the ambient fields against differences of the chart map."""
    sc = scenarios.get(sid)
    for pt in scenarios.sample(sc, 3, 1):
        u = pt.coords
        x = scenarios.inverse_stereographic(u)
        g = scenarios.sphere_metric(u)
        p = sc.projector.eval(u)
        for w in sc.ambient(x):
            v = scenarios.stereographic_pushforward(x, w)
            # chart map of the great circle t -> cos(t) x + sin(t) w / |w|
            wn = w / np.linalg.norm(w)
            curve = lambda t: (lambda y: y[:-1] / (1.0 - y[-1]))(np.cos(t[0]) * x + np.sin(t[0]) * wn)
            dv = fd_gradient(curve, np.zeros(1), 1e-3)[:, 0] * np.linalg.norm(w)
            assert np.max(np.abs(v - dv)) <= 1e-9
            assert float(v @ g @ v) == pytest.approx(float(w @ w), abs=1e-12)
            assert np.allclose(p @ v, v, atol=1e-12)


def test_reeb_fibres_are_geodesics():
    st_, pt, geo = at("s3-reeb")
    e = geo.frame.vectors[:, 0]
    assert np.max(np.abs(geo.xi_of(e) @ e)) <= 1e-12


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_torsion_tensor_matches_projected_field_formula(sid):
    structure, pt, geo = at(sid)
    assert np.max(np.abs(intrinsic_torsion_direct(structure, pt).components - geo.xi)) <= 1e-8


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_difference_tensor_matches_levi_civita_of_tilde_metric(sid):
    structure, pt, geo = at(sid)
    assert np.max(np.abs(difference_tensor_oracle(structure, pt).S - geo.S)) <= 1e-5


def test_s3_transfer_tensor_is_stretched_along_e():
    _, _, geo = at("s3-reeb")
    evals = np.sort(np.linalg.eigvals(geo.L).real)
    assert evals[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(evals >= 1.0 - 1e-10)


def test_type_guards(rng):
    _, _, geo = at("s3-reeb")
    g_elem, m_elem = geo.gbasis[0], geo.mbasis[0]
    with pytest.raises(NotInM):
        geo.xi_dot(g_elem)
    with pytest.raises(NotInG):
        geo.q_op(m_elem, np.ones(3))
    geo.xi_dot(m_elem)
    geo.q_op(g_elem, np.ones(3))
