import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtorsion import _kernels, scenarios
from gtorsion.diffgeo import (
    Backend,
    fd_gradient,
    frame_from_projector,
    gram_schmidt,
    metric_point,
    check_metric_jet,
)
from gtorsion.errors import ConfigError, OutOfDomain, StencilOutOfDomain


def _spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_numba_and_numpy_kernels_agree(n, seed):
    rng = np.random.default_rng(seed)
    ginv = np.linalg.inv(_spd(rng, n))
    dg = rng.standard_normal((n, n, n))
    dg = dg + dg.transpose(1, 0, 2)
    d2g = rng.standard_normal((n, n, n, n))
    d2g = d2g + d2g.transpose(1, 0, 2, 3)
    d2g = d2g + d2g.transpose(0, 1, 3, 2)
    G = _kernels.christoffel_numpy(ginv, dg)
    assert np.allclose(G, _kernels.christoffel_numba(ginv, dg), atol=1e-12)
    dG = _kernels.christoffel_derivative_numpy(ginv, dg, d2g)
    assert np.allclose(dG, _kernels.christoffel_derivative_numba(ginv, dg, d2g), atol=1e-11)
    assert np.allclose(_kernels.riemann_numpy(G, dG), _kernels.riemann_numba(G, dG), atol=1e-10)


def test_round_sphere_has_curvature_one():
    sc = scenarios.get("product-s2xr")
    geo = metric_point(sc.chart.point([0.4, -0.7, 0.1]))
    g = geo.g
    X = np.array([1.0, 0.0, 0.0]) / np.sqrt(g[0, 0])
    Y = np.array([0.0, 1.0, 0.0]) / np.sqrt(g[1, 1])
    k = float(X @ g @ geo.curvature(X, Y) @ Y)
    assert k == pytest.approx(1.0, abs=1e-12)


def test_three_sphere_is_einstein():
    sc = scenarios.get("s3-reeb")
    geo = metric_point(sc.chart.point([0.2, -0.5, 1.1]))
    ricci = np.einsum("lkli->ki", geo.riem)
    assert np.allclose(ricci, 2.0 * geo.g, atol=1e-10)


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_metric_jets_agree_with_differences(sid):
    sc = scenarios.get(sid)
    for pt in scenarios.sample(sc, 3, 7):
        assert check_metric_jet(sc.chart, pt.coords) <= 1e-6


def test_fd_backend_matches_analytic_christoffel():
    sc = scenarios.get("s3-reeb")
    pt = sc.chart.point([0.3, 0.2, -0.4])
    exact = metric_point(pt).gamma
    for kind in ("fd", "fd-richardson"):
        approx = metric_point(pt, Backend(kind)).gamma
        assert np.max(np.abs(approx - exact)) <= 1e-7


def test_fd_gradient_is_accurate():
    fn = lambda x: np.array([np.sin(x[0]) * x[1], np.exp(x[1] - x[0])])
    x = np.array([0.3, 0.7])
    exact = np.array([[np.cos(0.3) * 0.7, np.sin(0.3)], [-np.exp(0.4), np.exp(0.4)]])
    assert np.allclose(fd_gradient(fn, x, 1e-3), exact, atol=1e-10)


def test_domain_guards():
    sc = scenarios.get("s3-reeb")
    with pytest.raises(OutOfDomain):
        sc.chart.point([5.0, 0.0, 0.0])
    with pytest.raises(StencilOutOfDomain):
        fd_gradient(lambda x: x, np.array([3.999, 0.0, 0.0]), 1e-2, sc.chart)
    with pytest.raises(ConfigError):
        Backend("fd", step=0.5)
    with pytest.raises(ConfigError):
        Backend("spectral")


def test_gram_schmidt_and_adapted_frame(rng):
    n, m = 5, 2
    g = _spd(rng, n)
    V = rng.standard_normal((n, m))
    p = V @ np.linalg.solve(V.T @ g @ V, V.T @ g)
    frame = frame_from_projector(g, p, m)
    F = frame.vectors
    assert np.allclose(F.T @ g @ F, np.eye(n), atol=1e-10)
    assert np.allclose(p @ F[:, :m], F[:, :m], atol=1e-10)
    assert np.allclose(p @ F[:, m:], 0.0, atol=1e-10)
    dependent = np.column_stack([V[:, 0], 2.0 * V[:, 0], V[:, 1]])
    assert gram_schmidt(dependent, g).shape[1] == 2
