"""Run configuration, suite execution and the JSON report."""

import datetime as _dt
import json
import logging
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__, _kernels, checks, scenarios
from .diffgeo import Backend
from .errors import ConfigError

SCHEMA_VERSION = 1
log = logging.getLogger("gtorsion")

TOL_GROUPS = {"identity", "minimality", "curvature", "s_oracle"}


@dataclass
class RunConfig:
    scenarios: list = field(default_factory=scenarios.scenario_ids)
    points: Optional[int] = None
    seed: int = 0
    backend: Optional[str] = None
    fd_step: Optional[float] = None
    tol_overrides: dict = field(default_factory=dict)
    out: Optional[str] = None
    suites: tuple = checks.SUITES
    probes: int = 100
    deep_points: int = 2
    tensoriality_points: int = 5
    per_scenario: dict = field(default_factory=dict)  # id -> {points, seed, backend, tolerances}

    def validate(self):
        if not self.scenarios:
            raise ConfigError("no scenarios selected")
        for sid in self.scenarios:
            scenarios.get(sid)
        for sid, opts in self.per_scenario.items():
            scenarios.get(sid)
            if opts.get("backend") not in (None, "analytic", "fd", "fd-richardson"):
                raise ConfigError(f"config for {sid}: unknown backend {opts['backend']!r}")
            if "points" in opts and not (isinstance(opts["points"], int) and opts["points"] >= 1):
                raise ConfigError(f"config for {sid}: points must be a positive integer")
            for key, val in opts.get("tolerances", {}).items():
                if key not in TOL_GROUPS and key not in checks.DESCRIPTIONS:
                    raise ConfigError(f"config for {sid}: unknown tolerance key {key!r}")
                if not isinstance(val, (int, float)) or val < 0:
                    raise ConfigError(f"config for {sid}: tolerance for {key!r} must be a non-negative number")
        if self.points is not None and self.points < 1:
            raise ConfigError("--points must be >= 1")
        if self.fd_step is not None and not (0.0 < self.fd_step <= 1e-2):
            raise ConfigError(f"--fd-step must lie in (0, 1e-2], got {self.fd_step}")
        if self.backend is not None and self.backend not in ("analytic", "fd", "fd-richardson"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        bad = [s for s in self.suites if s not in checks.SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s) {bad}; expected a subset of {checks.SUITES}")
        if self.probes < 1:
            raise ConfigError("probe count must be >= 1")
        for key, val in self.tol_overrides.items():
            if key not in TOL_GROUPS and key not in checks.DESCRIPTIONS:
                raise ConfigError(f"unknown tolerance key {key!r}; use a group ({', '.join(sorted(TOL_GROUPS))}) or a check name")
            if not (isinstance(val, float) and val >= 0.0):
                raise ConfigError(f"tolerance for {key!r} must be a non-negative number")
        return self

    def as_dict(self):
        return {
            "scenarios": list(self.scenarios),
            "points": self.points,
            "seed": self.seed,
            "backend": self.backend,
            "fd_step": self.fd_step,
            "tol_overrides": dict(sorted(self.tol_overrides.items())),
            "suites": list(self.suites),
            "probes": self.probes,
            "deep_points": self.deep_points,
            "tensoriality_points": self.tensoriality_points,
            "per_scenario": {k: self.per_scenario[k] for k in sorted(self.per_scenario)},
        }


def load_config_file(path):
    """Scenario overrides from a JSON file: {"scenarios": {id: {...}}}."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    per = data.get("scenarios", {})
    allowed = {"points", "seed", "backend", "tolerances"}
    for sid, opts in per.items():
        extra = set(opts) - allowed
        if extra:
            raise ConfigError(f"config for {sid}: unsupported keys {sorted(extra)}")
    return per


def _threads():
    raw = os.environ.get("GTORSION_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"GTORSION_THREADS must be an integer, got {raw!r}") from exc


def _tolerances(sc, kind, config):
    opts = config.per_scenario.get(sc.id, {})
    tol = {g: sc.tolerance(g, kind) for g in TOL_GROUPS}
    tol.update({k: float(v) for k, v in opts.get("tolerances", {}).items() if k in TOL_GROUPS})
    tol.update({k: v for k, v in config.tol_overrides.items() if k in TOL_GROUPS})
    return tol


def _check_overrides(sc, config):
    overrides = {k: float(v) for k, v in config.per_scenario.get(sc.id, {}).get("tolerances", {}).items()}
    overrides.update(config.tol_overrides)
    return overrides


def _apply_check_overrides(check_list, overrides):
    for c in check_list:
        if c.name in overrides:
            c.tol = overrides[c.name]
    return check_list


def _point_seed(seed, sid, index):
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(sid.encode()), index]


def evaluate_point(sc, structure, pt, index, seed, tol, config):
    rng = np.random.default_rng(_point_seed(seed, sc.id, index))
    found = []
    if "identity" in config.suites:
        found += checks.identity_suite(structure, pt, rng, config.probes, tol["identity"], tol["s_oracle"])
    if "curvature" in config.suites:
        found += checks.curvature_suite(
            structure, pt, rng, tol["curvature"],
            deep=index < config.deep_points, tensoriality=index < config.tensoriality_points,
        )
    if "minimality" in config.suites:
        found += checks.minimality_suite(structure, pt, sc.expectations, tol["minimality"], tol["identity"])
    return _apply_check_overrides(found, _check_overrides(sc, config))


def run_scenario(sc, config):
    opts = config.per_scenario.get(sc.id, {})
    kind = opts.get("backend") or config.backend or sc.backend
    backend = Backend(kind, step=config.fd_step or 1e-5)
    count = config.points or opts.get("points") or sc.default_points
    seed = opts.get("seed", config.seed)
    tol = _tolerances(sc, kind, config)
    structure = sc.structure(backend)
    pts = scenarios.sample(sc, count, seed)

    started = time.perf_counter()
    work = lambda item: evaluate_point(sc, structure, item[1], item[0], seed, tol, config)
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, enumerate(pts)))
    else:
        results = [work(item) for item in enumerate(pts)]
    log.info("%s: %d points in %.2fs", sc.id, count, time.perf_counter() - started)

    points = []
    for i, (pt, found) in enumerate(zip(pts, results)):
        points.append({
            "index": i,
            "coords": [float(c) for c in pt.coords],
            "checks": [c.as_dict() for c in found],
        })

    aggregates = {}
    for entry in points:
        for c in entry["checks"]:
            agg = aggregates.setdefault(c["name"], {
                "max": None, "tol": c["tol"], "relation": c["relation"], "gated": c["gated"], "pass": True,
            })
            v = c["value"]
            if v is not None:
                agg["max"] = v if agg["max"] is None else max(agg["max"], v)
            agg["pass"] = agg["pass"] and c["pass"]

    scenario_checks = []
    if "non_minimal" in sc.expectations and "minimality" in config.suites:
        per_point = [{c["name"]: c["value"] for c in e["checks"]} for e in points]
        found = _apply_check_overrides(checks.non_minimal_aggregate(per_point), _check_overrides(sc, config))
        scenario_checks = [c.as_dict() for c in found]

    gated_ok = all(a["pass"] for a in aggregates.values() if a["gated"])
    gated_ok = gated_ok and all(c["pass"] for c in scenario_checks if c["gated"])
    return {
        "id": sc.id,
        "backend": kind,
        "fd_step": backend.step if kind != "analytic" else None,
        "seed": seed,
        "expectations": sorted(sc.expectations),
        "tolerances": dict(sorted(tol.items())),
        "points": points,
        "aggregates": dict(sorted(aggregates.items())),
        "scenario_checks": scenario_checks,
        "pass": bool(gated_ok),
    }


def run(config: RunConfig):
    config.validate()
    entries = [run_scenario(scenarios.get(sid), config) for sid in config.scenarios]
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "gtorsion",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "environment": {"kernels": "numba" if _kernels.USE_NUMBA else "numpy", "numpy": np.__version__},
        "config": config.as_dict(),
        "scenarios": entries,
        "pass": all(e["pass"] for e in entries),
    }


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=1, allow_nan=False) + "\n"


def strip_timestamp(report):
    return {k: v for k, v in report.items() if k != "timestamp"}


def failures(report):
    """(scenario, check) pairs whose gated aggregate failed."""
    bad = []
    for entry in report["scenarios"]:
        for name, agg in entry["aggregates"].items():
            if agg["gated"] and not agg["pass"]:
                bad.append((entry["id"], name))
        for c in entry["scenario_checks"]:
            if c["gated"] and not c["pass"]:
                bad.append((entry["id"], c["name"]))
    return bad
