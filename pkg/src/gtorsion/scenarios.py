"""Built-in catalogue of charts, metrics and distributions.

Every metric and projector closure is written against :mod:`gtorsion.jets`, so
the same code yields plain values or exact second-order jets.
"""

import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets
from .diffgeo import Backend, Chart, jet_closure
from .errors import ConfigError, EmptyDomain
from .gstructure import AlmostProductStructure, ProjectorField

EXPECTATION_FLAGS = ("xi_zero", "minimal", "non_minimal", "totally_geodesic")

# gates shared by every scenario unless overridden
DEFAULT_TOLERANCES = {
    "analytic": {"identity": 1e-6, "minimality": 1e-6, "curvature": 1e-4, "s_oracle": 1e-5},
    # R^P and D_X Q involve third derivatives: one order looser under differences
    "fd": {"identity": 1e-4, "minimality": 1e-4, "curvature": 1e-3, "s_oracle": 1e-5},
}
XI_ZERO_TOL = 1e-9
SFF_ZERO_TOL = 1e-8
NON_MINIMAL_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    chart: Chart
    projector: ProjectorField
    sample_domain: np.ndarray
    backend: str
    expectations: frozenset
    default_points: int = 100
    tolerances: dict = field(default_factory=dict)
    description: str = ""
    ambient: Callable = None  # ambient-field oracle data, when the chart comes from an embedding

    @property
    def m(self):
        return self.projector.rank

    def tolerance(self, check_group, backend_kind=None):
        kind = "analytic" if (backend_kind or self.backend) == "analytic" else "fd"
        return self.tolerances.get(check_group, DEFAULT_TOLERANCES[kind][check_group])

    def structure(self, backend=None):
        return AlmostProductStructure(self.chart, self.projector, backend or Backend(self.backend))


# ---------------------------------------------------------------- helpers


def _const(mat, x):
    mat = np.asarray(mat, dtype=float)
    if jets.is_jet(x):
        return jets.Jet.constant(mat, x.nvars)
    return mat


def _diag(entries, x):
    n = len(entries)
    rows = []
    for i in range(n):
        row = [0.0] * n
        row[i] = entries[i]
        rows.append(jets.stack(row) if any(jets.is_jet(e) for e in row) else np.asarray(row, dtype=float))
    return jets.stack(rows)


def _span_projector(V, G):
    """g-orthogonal projector onto the column span of ``V``: V (V^T G V)^-1 V^T G."""
    VtG = jets.matmul(V.T, G)
    return jets.matmul(jets.matmul(V, jets.inv(jets.matmul(VtG, V))), VtG)


def _projector_field(fn, rank):
    return ProjectorField(eval=fn, rank=rank, jet=jet_closure(fn))


def _chart(name, domain, metric):
    domain = np.asarray(domain, dtype=float)
    return Chart(name, domain.shape[0], domain, metric, jet_closure(metric))


# ---------------------------------------------------------------- stereographic spheres


def inverse_stereographic(u):
    """Embedding u -> x in S^n with the pole at the last coordinate."""
    r2 = jets.dot(u, u)
    s = 1.0 / (1.0 + r2)
    head = [2.0 * u[i] * s for i in range(u.shape[0])]
    return jets.stack(head + [(r2 - 1.0) * s])


def stereographic_pushforward(x, w):
    """Differential of x -> x_head / (1 - x_last) applied to an ambient vector ``w``."""
    n = x.shape[0] - 1
    t = 1.0 / (1.0 - x[n])
    return jets.stack([w[i] * t + x[i] * w[n] * t * t for i in range(n)])


def sphere_metric(u):
    n = u.shape[0]
    phi = 4.0 * (1.0 + jets.dot(u, u)) ** -2
    return phi * _const(np.eye(n), u) if jets.is_jet(phi) else phi * np.eye(n)


def hopf_field_s3(x):
    return jets.stack([-x[1], x[0], -x[3], x[2]])


def quaternion_fields(x):
    """Left multiplication by i, j, k on each quaternion block of R^{4k}."""
    out = {"i": [], "j": [], "k": []}
    for blk in range(x.shape[0] // 4):
        a, b, c, d = (x[4 * blk + r] for r in range(4))
        out["i"] += [-b, a, -d, c]
        out["j"] += [-c, d, a, -b]
        out["k"] += [-d, -c, b, a]
    return [jets.stack(out[key]) for key in ("i", "j", "k")]


def _sphere_projector(ambient_fields):
    def proj(u):
        x = inverse_stereographic(u)
        cols = [stereographic_pushforward(x, w) for w in ambient_fields(x)]
        V = jets.stack(cols, axis=1)
        return _span_projector(V, sphere_metric(u))

    return proj


# ---------------------------------------------------------------- catalogue entries


def _flat4():
    two_pi = 2.0 * np.pi
    chart = _chart("flat4", [(-1.0, two_pi + 1.0)] * 4, lambda x: _const(np.eye(4), x))
    proj = _projector_field(lambda x: _const(np.diag([1.0, 0.0, 0.0, 0.0]), x), 1)
    return Scenario(
        "flat4-const", chart, proj, np.array([(0.0, two_pi)] * 4), "analytic",
        frozenset({"xi_zero", "minimal", "totally_geodesic"}),
        description="flat R^4 (periodic box), E = span{d1}",
    )


def _product_s2xr():
    def metric(x):
        phi = 4.0 * (1.0 + x[0] * x[0] + x[1] * x[1]) ** -2
        return _diag([phi, phi, 1.0], x)

    chart = _chart("s2xr", [(-3.0, 3.0), (-3.0, 3.0), (-5.0, 5.0)], metric)
    proj = _projector_field(lambda x: _const(np.diag([0.0, 0.0, 1.0]), x), 1)
    return Scenario(
        "product-s2xr", chart, proj, np.array([(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)]), "analytic",
        frozenset({"xi_zero", "minimal", "totally_geodesic"}),
        description="round S^2 (stereographic) times R, E = span{d_t}",
    )


def _s3_reeb():
    chart = _chart("s3-stereo", [(-4.0, 4.0)] * 3, sphere_metric)
    proj = _projector_field(_sphere_projector(lambda x: [hopf_field_s3(x)]), 1)
    return Scenario(
        "s3-reeb", chart, proj, np.array([(-1.5, 1.5)] * 3), "analytic",
        frozenset({"minimal"}),
        description="round S^3 (stereographic), E spanned by the Hopf/Reeb field",
        ambient=lambda x: [hopf_field_s3(x)],
    )


def _s7_hopf():
    chart = _chart("s7-stereo", [(-3.0, 3.0)] * 7, sphere_metric)
    proj = _projector_field(_sphere_projector(quaternion_fields), 3)
    return Scenario(
        "s7-hopf", chart, proj, np.array([(-1.0, 1.0)] * 7), "analytic",
        frozenset({"minimal"}), default_points=20,
        tolerances={"minimality": 1e-4},
        description="round S^7 (stereographic), E spanned by the quaternionic Hopf fields",
        ambient=quaternion_fields,
    )


def _torus_skew():
    two_pi = 2.0 * np.pi

    def metric(x):
        s = jets.sin(x[0])
        return _diag([1.0, 1.0 + 0.5 * s * s, 1.0], x)

    def proj(x):
        V = jets.stack([jets.cos(x[2]), jets.sin(x[2]), 0.0 * x[2]]).reshape(3, 1)
        return _span_projector(V, metric(x))

    chart = _chart("t3", [(-1.0, two_pi + 1.0)] * 3, metric)
    return Scenario(
        "torus-skew", chart, _projector_field(proj, 1), np.array([(0.0, two_pi)] * 3), "analytic",
        frozenset({"non_minimal"}),
        description="T^3 with g = diag(1, 1 + sin^2(x1)/2, 1), E = span{cos x3 d1 + sin x3 d2}",
    )


_BUILDERS = {
    "flat4-const": _flat4,
    "product-s2xr": _product_s2xr,
    "s3-reeb": _s3_reeb,
    "s7-hopf": _s7_hopf,
    "torus-skew": _torus_skew,
}
_CACHE = {}


def catalogue():
    return [get(sid) for sid in _BUILDERS]


def scenario_ids():
    return list(_BUILDERS)


def get(sid):
    if sid not in _BUILDERS:
        raise ConfigError(f"unknown scenario {sid!r}; known: {', '.join(_BUILDERS)}")
    if sid not in _CACHE:
        _CACHE[sid] = _BUILDERS[sid]()
    return _CACHE[sid]


def sample(sc, count, seed, margin=None):
    """Seeded uniform points strictly inside the sample box (deterministic)."""
    if count < 1:
        raise ConfigError("point count must be >= 1")
    margin = 1e-3 if margin is None else margin
    lo = sc.sample_domain[:, 0] + margin
    hi = sc.sample_domain[:, 1] - margin
    if np.any(lo >= hi):
        raise EmptyDomain(f"margin {margin} exhausts the sample box of {sc.id}")
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(sc.id.encode())])
    coords = lo + (hi - lo) * rng.random((count, lo.shape[0]))
    return [sc.chart.point(c) for c in coords]
