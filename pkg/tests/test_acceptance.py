"""Acceptance criteria, one test each, evaluated at the stated tolerances.

Every test appends a PASS/FAIL line to the terminal summary, whatever its outcome.
"""

import time

import numpy as np
import pytest

from gtorsion import checks, report, scenarios

from .conftest import ACCEPTANCE_LINES, at

IDENTITY_CHECKS = None  # names produced by the identity suite, filled lazily


def _identity_names():
    global IDENTITY_CHECKS
    if IDENTITY_CHECKS is None:
        structure, pt, _ = at("s3-reeb", count=1)
        found = checks.identity_suite(structure, pt, np.random.default_rng(0), probes=2)
        IDENTITY_CHECKS = [c.name for c in found if c.name != "difference_tensor_oracle"]
    return IDENTITY_CHECKS


def _record(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  [{number}] {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


@pytest.fixture(scope="module")
def full_run():
    """Every scenario at its default size with the analytic backend, timed per scenario."""
    config = report.RunConfig()
    config.validate()
    entries, timings = {}, {}
    for sid in config.scenarios:
        started = time.perf_counter()
        entries[sid] = report.run_scenario(scenarios.get(sid), config)
        timings[sid] = time.perf_counter() - started
    return entries, timings


def _agg(entry, name):
    return entry["aggregates"][name]["max"]


def test_criterion_1_integrable_cases_are_totally_geodesic(full_run):
    entries, timings = full_run
    parts, ok = [], True
    for sid in ("flat4-const", "product-s2xr"):
        e = entries[sid]
        xi, sff, n, t = _agg(e, "xi_norm"), _agg(e, "sff_max"), len(e["points"]), timings[sid]
        ok &= xi <= 1e-9 and sff <= 1e-8 and n >= 100 and t < 10.0
        parts.append(f"{sid} |xi|={xi:.1e} max|Pi|={sff:.1e} points={n} {t:.1f}s")
    _record(1, "xi = 0 and Pi^P = 0", ok, "; ".join(parts))


def test_criterion_2_reeb_field_is_minimal_and_harmonic(full_run):
    entries, timings = full_run
    e, t = entries["s3-reeb"], timings["s3-reeb"]
    vals = {k: _agg(e, k) for k in ("min_residual", "h1_residual", "h2_residual")}
    n = len(e["points"])
    ok = all(v <= 1e-6 for v in vals.values()) and n >= 100 and t < 60.0
    detail = " ".join(f"{k}={v:.1e}" for k, v in vals.items()) + f" points={n} {t:.1f}s"
    _record(2, "s3-reeb minimal and harmonic", ok, detail)


def test_criterion_3_quaternionic_hopf_is_minimal(full_run):
    entries, timings = full_run
    e, t = entries["s7-hopf"], timings["s7-hopf"]
    v, n = _agg(e, "min_residual"), len(e["points"])
    ok = v <= 1e-4 and n >= 20 and t < 600.0
    _record(3, "s7-hopf minimal", ok, f"min_residual={v:.1e} points={n} {t:.1f}s")


def test_criterion_4_minimal_iff_harmonic(full_run):
    entries, _ = full_run
    ok, disagreements = True, 0
    for e in entries.values():
        for p in e["points"]:
            c = {x["name"]: x for x in p["checks"]}
            tol = e["tolerances"]["minimality"]
            pm = c["min_residual"]["value"] <= tol
            ph = c["h1_residual"]["value"] <= tol and c["h2_residual"]["value"] <= tol
            if pm != ph:
                disagreements += 1
    ok &= disagreements == 0
    torus = entries["torus-skew"]
    both_false = all(
        {x["name"]: x for x in p["checks"]}["min_residual"]["value"] > torus["tolerances"]["minimality"]
        and max({x["name"]: x for x in p["checks"]}[k]["value"] for k in ("h1_residual", "h2_residual"))
        > torus["tolerances"]["minimality"]
        for p in torus["points"]
    )
    sc = {c["name"]: c for c in torus["scenario_checks"]}
    big = sc["non_minimal_min_residual"]["value"] > 1e-3 and sc["non_minimal_harmonic_residual"]["value"] > 1e-3
    ok &= both_false and big
    detail = (
        f"disagreements={disagreements}; torus-skew both false at every point={both_false}, "
        f"max min_residual={sc['non_minimal_min_residual']['value']:.2e}, "
        f"max harmonic={sc['non_minimal_harmonic_residual']['value']:.2e}, "
        f"points below 1e-3: {int(sc['points_below_floor']['value'])}/{len(torus['points'])}"
    )
    _record(4, "pass(min) == pass(h1) and pass(h2)", ok, detail)


@pytest.fixture(scope="module")
def fd_identity_run():
    out = {}
    for sid in scenarios.scenario_ids():
        points = 4 if sid == "s7-hopf" else 10
        config = report.RunConfig(scenarios=[sid], points=points, backend="fd", suites=("identity",))
        out[sid] = report.run(config)["scenarios"][0]
    return out


def test_criterion_5_identity_suite(full_run, fd_identity_run):
    entries, _ = full_run
    names = _identity_names()
    worst_a = max(_agg(entries[sid], k) for sid in entries for k in names)
    worst_f = max(_agg(fd_identity_run[sid], k) for sid in fd_identity_run for k in names)
    probes = report.RunConfig().probes
    ok = worst_a <= 1e-6 and worst_f <= 1e-4 and probes >= 100
    arg_a = max(((_agg(entries[s], k), s, k) for s in entries for k in names))
    arg_f = max(((_agg(fd_identity_run[s], k), s, k) for s in fd_identity_run for k in names))
    detail = (
        f"analytic max {worst_a:.1e} ({arg_a[1]}/{arg_a[2]}), fd max {worst_f:.1e} ({arg_f[1]}/{arg_f[2]}), "
        f"{probes} probes per point, {len(names)} checks"
    )
    _record(5, "identity suite", ok, detail)


def test_criterion_6_difference_tensor_oracle(full_run):
    entries, _ = full_run
    vals = {sid: _agg(e, "difference_tensor_oracle") for sid, e in entries.items()}
    ok = all(v <= 1e-5 for v in vals.values())
    _record(6, "S closed form vs Levi-Civita of g~", ok, " ".join(f"{k}={v:.1e}" for k, v in vals.items()))


def test_criterion_7_curvature_coherence(full_run):
    entries, _ = full_run
    names = ("rp_symmetries", "ricci_closed_form", "scalar_closed_form", "sectional_closed_form")
    worst = max(_agg(e, k) for e in entries.values() for k in names)
    _, _, geo = at("flat4-const")
    n = geo.n
    F = geo.frame.vectors

    def vert(a, b):
        K = np.zeros((n, n))
        K[a - 1, b - 1], K[b - 1, a - 1] = -1.0, 1.0
        return np.zeros(n), F @ (K / np.sqrt(2.0)) @ F.T @ geo.g

    kappa = geo.sectional_P(vert(2, 3), vert(2, 4))
    kappa_direct = geo.sectional_P_direct(vert(2, 3), vert(2, 4))
    err = max(abs(kappa - 0.125), abs(kappa_direct - 0.125))
    ok = worst <= 1e-4 and err <= 1e-10
    _record(7, "curvature coherence", ok, f"max residual {worst:.1e}; kappa^P = {kappa:.12f} (|err| {err:.1e})")


def test_criterion_8_reports_are_reproducible(monkeypatch):
    config = dict(points=5, probes=20)
    first = report.dumps(report.strip_timestamp(report.run(report.RunConfig(**config))))
    second = report.dumps(report.strip_timestamp(report.run(report.RunConfig(**config))))
    monkeypatch.setenv("GTORSION_THREADS", "4")
    threaded = report.dumps(report.strip_timestamp(report.run(report.RunConfig(**config))))
    ok = first == second == threaded
    _record(8, "byte-identical reports", ok, f"{len(first)} bytes, sequential x2 and 4 threads identical={ok}")
