import numpy as np
import pytest

from gtorsion import scenarios

from .conftest import at


def _vertical(geo, a, b):
    """E_ab / sqrt 2 in the adapted frame, 1-based indices."""
    n = geo.n
    K = np.zeros((n, n))
    K[a - 1, b - 1], K[b - 1, a - 1] = -1.0, 1.0
    F = geo.frame.vectors
    return F @ (K / np.sqrt(2.0)) @ F.T @ geo.g


def test_flat4_vertical_sectional_curvature_is_one_eighth():
    _, _, geo = at("flat4-const")
    zero = np.zeros(geo.n)
    u, v = (zero, _vertical(geo, 2, 3)), (zero, _vertical(geo, 2, 4))
    assert geo.sectional_P(u, v) == pytest.approx(0.125, abs=1e-10)
    assert geo.sectional_P_direct(u, v) == pytest.approx(0.125, abs=1e-10)


def test_flat4_scalar_curvature_is_that_of_so3():
    _, _, geo = at("flat4-const")
    assert geo.scalar_P() == pytest.approx(0.75, abs=1e-12)


def test_product_horizontal_sectional_curvature():
    _, _, geo = at("product-s2xr")
    X, Y, _ = geo.gt_basis[[1, 2, 0]] if abs(geo.gt_basis[0][2]) > 0.5 else geo.gt_basis
    zero = np.zeros((geo.n, geo.n))
    assert geo.kappa_tilde(X, Y) == pytest.approx(1.0, abs=1e-10)
    assert geo.sectional_P((X, zero), (Y, zero)) == pytest.approx(-0.5, abs=1e-10)


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_block_tensor_matches_pointwise_curvature(sid):
    _, _, geo = at(sid)
    assert np.max(np.abs(geo.rp_tensor - geo.rp_tensor_pointwise())) <= 1e-10


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_second_fundamental_form_matches_ambient_connection(sid):
    _, _, geo = at(sid)
    sff = geo.second_fundamental_form
    assert np.max(np.abs(sff.table - geo.second_fundamental_form_oracle().table)) <= 1e-8
    assert sff.vertical_block_max() == 0.0
    assert sff.symmetry_residual() <= 1e-12


def test_s3_minimal_but_not_totally_geodesic():
    _, _, geo = at("s3-reeb")
    assert geo.minimality_residual() <= 1e-10
    assert geo.second_fundamental_form.max_abs() > 0.1


def test_torus_skew_residuals_are_consistent():
    _, _, geo = at("torus-skew")
    h1, h2 = geo.harmonicity_residuals()
    assert geo.minimality_residual() > 1e-3
    assert max(h1, h2) > 1e-3


def test_primed_round_trip(rng):
    _, _, geo = at("s7-hopf")
    Y = rng.standard_normal(geo.n)
    beta = np.einsum("A,Aab->ab", rng.standard_normal(len(geo.gbasis)), geo.gbasis)
    v = geo.from_primed(Y, beta)
    Y2, beta2 = geo.to_primed(v)
    assert np.allclose(Y, Y2) and np.allclose(beta, beta2)
