import numpy as np
import pytest

from gtorsion import scenarios
from gtorsion.errors import ConfigError, EmptyDomain


def test_catalogue_ids():
    assert scenarios.scenario_ids() == ["flat4-const", "product-s2xr", "s3-reeb", "s7-hopf", "torus-skew"]
    with pytest.raises(ConfigError):
        scenarios.get("s5-hopf")


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_sampling_is_deterministic_and_inside_the_box(sid):
    sc = scenarios.get(sid)
    a = np.array([p.coords for p in scenarios.sample(sc, 50, 3)])
    b = np.array([p.coords for p in scenarios.sample(sc, 50, 3)])
    c = np.array([p.coords for p in scenarios.sample(sc, 50, 4)])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(a > sc.sample_domain[:, 0] + 1e-3) and np.all(a < sc.sample_domain[:, 1] - 1e-3)


def test_prefix_stability():
    sc = scenarios.get("s3-reeb")
    short = [p.coords for p in scenarios.sample(sc, 5, 0)]
    long = [p.coords for p in scenarios.sample(sc, 20, 0)]
    assert all(np.array_equal(s, l) for s, l in zip(short, long))


def test_s3_samples_stay_away_from_the_pole():
    sc = scenarios.get("s3-reeb")
    for pt in scenarios.sample(sc, 500, 0):
        x = scenarios.inverse_stereographic(pt.coords)
        assert abs(np.linalg.norm(x) - 1.0) < 1e-12
        assert 1.0 - x[-1] >= 0.05


def test_empty_domain_and_bad_counts():
    sc = scenarios.get("flat4-const")
    with pytest.raises(EmptyDomain):
        scenarios.sample(sc, 3, 0, margin=4.0)
    with pytest.raises(ConfigError):
        scenarios.sample(sc, 0, 0)


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_projectors_are_valid(sid):
    sc = scenarios.get(sid)
    for pt in scenarios.sample(sc, 5, 0):
        g = sc.chart.metric_fn(pt.coords)
        assert max(sc.projector.residuals(pt.coords, g).values()) <= 1e-10


def test_expectations_and_tolerances():
    assert scenarios.get("torus-skew").expectations == {"non_minimal"}
    assert scenarios.get("s7-hopf").tolerance("minimality") == 1e-4
    assert scenarios.get("s3-reeb").tolerance("minimality") == 1e-6
    assert scenarios.get("s3-reeb").tolerance("minimality", "fd") == 1e-4
