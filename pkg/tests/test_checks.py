import numpy as np
import pytest

from gtorsion import checks, scenarios
from gtorsion.checks import Check

from .conftest import at


def test_check_relations():
    assert Check("a", 1e-7, 1e-6).passed
    assert not Check("a", 1e-5, 1e-6).passed
    assert Check("b", 1.0, 1e-3, relation=">").passed
    assert not Check("b", 1e-4, 1e-3, relation=">").passed
    assert Check("c", 123.0, None, gated=False, relation="info").passed
    assert not Check("d", float("nan"), 1.0).passed
    assert Check("d", float("nan"), 1.0).as_dict()["value"] is None


def test_every_check_has_a_description():
    names = set()
    for sid in scenarios.scenario_ids():
        structure, pt, _ = at(sid, count=1)
        rng = np.random.default_rng(0)
        found = checks.identity_suite(structure, pt, rng, probes=5)
        found += checks.curvature_suite(structure, pt, rng, deep=True)
        found += checks.minimality_suite(structure, pt, scenarios.get(sid).expectations)
        names |= {c.name for c in found}
    names |= {c.name for c in checks.non_minimal_aggregate([{"min_residual": 1, "h1_residual": 1, "h2_residual": 1}])}
    assert names <= set(checks.DESCRIPTIONS)


@pytest.mark.parametrize("sid", scenarios.scenario_ids())
def test_deep_connection_checks(sid):
    structure, pt, _ = at(sid, count=1)
    found = {c.name: c for c in checks.curvature_suite(structure, pt, np.random.default_rng(1), deep=True)}
    for name in ("connection_metric_compatibility", "connection_torsion_free", "curvature_from_connection"):
        assert found[name].passed, (name, found[name].value)


def test_non_minimal_aggregate_counts_points_below_floor():
    pts = [
        {"min_residual": 0.2, "h1_residual": 0.1, "h2_residual": 0.05},
        {"min_residual": 2e-6, "h1_residual": 1e-6, "h2_residual": 3e-6},
    ]
    out = {c.name: c for c in checks.non_minimal_aggregate(pts)}
    assert out["non_minimal_min_residual"].passed
    assert out["non_minimal_harmonic_residual"].value == pytest.approx(0.1)
    assert out["points_below_floor"].value == 1.0


def test_minimality_checks_are_info_only_when_not_expected():
    structure, pt, _ = at("torus-skew", count=1)
    found = {c.name: c for c in checks.minimality_suite(structure, pt, {"non_minimal"})}
    assert found["min_residual"].relation == "info" and not found["min_residual"].gated
    assert found["minimal_iff_harmonic"].passed
