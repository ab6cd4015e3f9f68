"""Chart-based Riemannian calculus.

Everything here is pointwise in a single chart: metric components and their
first two coordinate derivatives, Levi-Civita coefficients, the Riemann tensor,
covariant derivatives of coordinate tensor fields and adapted orthonormal
frames. Derivatives come from one of three interchangeable backends (see
:class:`Backend`).

Curvature convention: ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
nabla_[X,Y] Z`` and sectional curvature ``K(X, Y) = g(R(X, Y)Y, X)`` for a
g-orthonormal pair.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import _kernels, jets
from .errors import (
    ConfigError,
    OutOfDomain,
    RankDeficient,
    SingularMetric,
    StencilOutOfDomain,
)

BACKENDS = ("analytic", "fd", "fd-richardson")

TOL_DIFF = {"analytic": 1e-7, "fd": 1e-5, "fd-richardson": 1e-5}
TOL_FRAME = 1e-10
COND_LIMIT = 1e12


def tol_curv(kind):
    return 10.0 * TOL_DIFF[kind]


@dataclass(frozen=True)
class Backend:
    """Differentiation strategy.

    ``analytic`` uses scenario-supplied jets (exact first and second
    derivatives), ``fd`` central differences with ``step`` for first
    derivatives, ``fd-richardson`` the same with one Richardson extrapolation
    level. Second differences lose about eps / h^2 to rounding, so they use a
    larger step: ``30 * step`` (``1000 * step`` with Richardson), capped at 1e-2. ``outer_step`` is the step used when
    differentiating already-derived pointwise fields (third-order quantities and
    the brute-force oracles); those always use one Richardson level.
    """

    kind: str = "analytic"
    step: float = 1e-5
    outer_step: Optional[float] = None

    def __post_init__(self):
        if self.kind not in BACKENDS:
            raise ConfigError(f"unknown backend {self.kind!r}; expected one of {BACKENDS}")
        if not (0.0 < self.step <= 1e-2):
            raise ConfigError(f"fd step must lie in (0, 1e-2], got {self.step}")

    @property
    def second_step(self):
        factor = 1000.0 if self.kind == "fd-richardson" else 30.0
        return min(1e-2, factor * self.step)

    @property
    def field_step(self):
        if self.outer_step is not None:
            return self.outer_step
        return 1e-3 if self.kind == "analytic" else 2e-3

    @property
    def tol_diff(self):
        return TOL_DIFF[self.kind]


@dataclass(frozen=True, eq=False)
class Chart:
    """A single coordinate chart carrying a Riemannian metric.

    ``metric_fn`` maps coordinates to the symmetric matrix ``g_ij``.
    ``metric_jet`` (optional) returns ``(g, dg, d2g)`` with ``dg[a, b, k] =
    d_k g_ab``; it is used by the analytic backend.
    """

    name: str
    dim: int
    domain: np.ndarray
    metric_fn: Callable
    metric_jet: Optional[Callable] = None
    margin: float = 1e-6

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=float)
        if dom.shape != (self.dim, 2) or np.any(dom[:, 0] >= dom[:, 1]):
            raise ValueError(f"chart {self.name}: domain must be {self.dim} increasing intervals")
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "_inner", (dom[:, 0] + self.margin, dom[:, 1] - self.margin))

    def contains(self, x, margin=None):
        x = np.asarray(x, dtype=float)
        if margin is None:
            lo, hi = self._inner
        else:
            lo, hi = self.domain[:, 0] + margin, self.domain[:, 1] - margin
        return bool((x > lo).all() and (x < hi).all())

    def point(self, coords):
        return ChartPoint(self, coords)


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart: Chart
    coords: np.ndarray

    def __post_init__(self):
        x = np.array(self.coords, dtype=float).reshape(-1)
        if x.shape != (self.chart.dim,):
            raise ValueError(f"expected {self.chart.dim} coordinates, got {x.shape}")
        if not self.chart.contains(x):
            raise OutOfDomain(f"{tuple(x)} is not inside chart {self.chart.name} (margin {self.chart.margin})")
        x.setflags(write=False)
        object.__setattr__(self, "coords", x)

    @property
    def key(self):
        return self.coords.tobytes()

    def __repr__(self):
        return f"ChartPoint({self.chart.name}, {np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True)
class TensorField:
    """Coordinate tensor field of valence (r, s): first r axes up, then s down."""

    valence: tuple
    eval: Callable
    jet: Optional[Callable] = None

    @property
    def rank(self):
        return self.valence[0] + self.valence[1]


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------


def _check_stencil(chart, x, reach):
    if chart is None:
        return
    if not (np.all(x - reach > chart.domain[:, 0]) and np.all(x + reach < chart.domain[:, 1])):
        raise StencilOutOfDomain(f"stencil of radius {reach:g} around {tuple(x)} leaves chart {chart.name}")


def _central_first(fn, x, h):
    n = x.shape[0]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def _central_second(fn, x, h, f0):
    n = x.shape[0]
    out = np.empty(np.shape(f0) + (n, n))
    eye = np.eye(n) * h
    for k in range(n):
        fp = np.asarray(fn(x + eye[k]))
        fm = np.asarray(fn(x - eye[k]))
        out[..., k, k] = (fp - 2.0 * f0 + fm) / h**2
        for l in range(k + 1, n):
            val = (
                np.asarray(fn(x + eye[k] + eye[l]))
                - np.asarray(fn(x + eye[k] - eye[l]))
                - np.asarray(fn(x - eye[k] + eye[l]))
                + np.asarray(fn(x - eye[k] - eye[l]))
            ) / (4.0 * h**2)
            out[..., k, l] = val
            out[..., l, k] = val
    return out


def fd_gradient(fn, x, h, chart=None, richardson=True):
    """Central-difference partials of an array-valued ``fn``; derivative axis last."""
    x = np.asarray(x, dtype=float)
    _check_stencil(chart, x, h)
    coarse = _central_first(fn, x, h)
    if not richardson:
        return coarse
    fine = _central_first(fn, x, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def fd_jet(fn, x, step, second_step, chart=None, richardson=False):
    """Value, first and second partials of ``fn`` at ``x`` by central differences."""
    x = np.asarray(x, dtype=float)
    _check_stencil(chart, x, max(step, second_step))
    f0 = np.asarray(fn(x), dtype=float)
    d1 = _central_first(fn, x, step)
    d2 = _central_second(fn, x, second_step, f0)
    if richardson:
        d1 = (4.0 * _central_first(fn, x, 0.5 * step) - d1) / 3.0
        d2 = (4.0 * _central_second(fn, x, 0.5 * second_step, f0) - d2) / 3.0
    return f0, d1, d2


def field_jet(value_fn, jet_fn, x, backend, chart=None):
    """(value, d1, d2) for a closure, honouring the backend choice."""
    if backend.kind == "analytic" and jet_fn is not None:
        return jet_fn(x)
    return fd_jet(
        value_fn, x, backend.step, backend.second_step, chart, richardson=backend.kind == "fd-richardson"
    )


# --------------------------------------------------------------------------
# pointwise metric data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChristoffelField:
    components: np.ndarray  # [k, i, j]

    def symmetry_residual(self):
        return float(np.max(np.abs(self.components - self.components.transpose(0, 2, 1))))


@dataclass(frozen=True)
class RiemannTensor:
    components: np.ndarray  # R^l_kij as [l, k, i, j]
    metric: np.ndarray

    @cached_property
    def lowered(self):
        return np.einsum("lm,mkij->lkij", self.metric, self.components)

    def symmetry_residuals(self):
        """Max-norm violations of the four algebraic curvature symmetries."""
        R = self.components
        Rl = self.lowered
        return {
            "skew_ij": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
            "skew_lk": float(np.max(np.abs(Rl + Rl.transpose(1, 0, 2, 3)))),
            "pair": float(np.max(np.abs(Rl - Rl.transpose(2, 3, 0, 1)))),
            "bianchi": float(np.max(np.abs(bianchi_sum(R)))),
        }

    def endomorphism(self, X, Y):
        return np.einsum("lkij,i,j->lk", self.components, X, Y)

    def sectional(self, X, Y):
        """g(R(X,Y)Y, X) / (|X|^2|Y|^2 - g(X,Y)^2)."""
        g = self.metric
        num = X @ g @ (self.endomorphism(X, Y) @ Y)
        den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        return float(num / den)


def bianchi_sum(R):
    """R(X,Y)Z + R(Y,Z)X + R(Z,X)Y in components, [l, k, i, j] layout."""
    return R + R.transpose(0, 3, 1, 2) + R.transpose(0, 2, 3, 1)


class MetricPoint:
    """Metric jets and Levi-Civita data at one chart point (lazily computed)."""

    def __init__(self, pt: ChartPoint, backend: Backend):
        self.pt = pt
        self.chart = pt.chart
        self.backend = backend
        self.x = pt.coords
        self.n = pt.chart.dim
        g, dg, d2g = field_jet(self.chart.metric_fn, self.chart.metric_jet, self.x, backend, self.chart)
        self.g = 0.5 * (g + g.T)
        self.dg = 0.5 * (dg + dg.transpose(1, 0, 2))
        self.d2g = 0.5 * (d2g + d2g.transpose(1, 0, 2, 3))

    @cached_property
    def ginv(self):
        cond = np.linalg.cond(self.g)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularMetric(f"metric condition number {cond:.3g} at {self.pt}", self.x)
        w = np.linalg.eigvalsh(self.g)
        if w[0] <= 0:
            raise SingularMetric(f"metric not positive definite at {self.pt}", self.x)
        gi = np.linalg.inv(self.g)
        return 0.5 * (gi + gi.T)

    @cached_property
    def gamma(self):
        return _kernels.christoffel(self.ginv, self.dg)

    @cached_property
    def dgamma(self):
        return _kernels.christoffel_derivative(self.ginv, self.dg, self.d2g)

    @cached_property
    def riem(self):
        return _kernels.riemann(self.gamma, self.dgamma)

    @cached_property
    def riemann_tensor(self):
        return RiemannTensor(self.riem, self.g)

    def curvature(self, X, Y):
        """R(X, Y) as an endomorphism matrix."""
        return np.einsum("lkij,i,j->lk", self.riem, X, Y)

    def inner(self, X, Y):
        return float(X @ self.g @ Y)

    def compatibility_residual(self):
        """max |d_i g_jk - Gamma^l_ij g_lk - Gamma^l_ik g_jl|."""
        res = (
            np.einsum("jki->ijk", self.dg)
            - np.einsum("lij,lk->ijk", self.gamma, self.g)
            - np.einsum("lik,jl->ijk", self.gamma, self.g)
        )
        return float(np.max(np.abs(res)))


def metric_point(pt, backend=None):
    return MetricPoint(pt, backend or Backend())


def christoffel(pt, backend=None):
    """Levi-Civita coefficients ``Gamma^k_ij`` at ``pt``."""
    return ChristoffelField(metric_point(pt, backend).gamma)


def riemann(pt, backend=None):
    mp = metric_point(pt, backend)
    return RiemannTensor(mp.riem, mp.g)


def covariant_correction(T, gamma, r):
    """Connection terms of ``nabla_d T`` for a tensor with ``r`` upper then lower axes.

    Returns an array with the derivative index first. ``gamma`` may carry
    torsion; its middle index is the direction.
    """
    out = np.zeros((gamma.shape[1],) + T.shape)
    for ax in range(T.ndim):
        Tm = np.moveaxis(T, ax, 0)
        if ax < r:
            # + Gamma^a_{d c} T^{..c..}
            corr = np.einsum("adc,c...->da...", gamma, Tm)
        else:
            # - Gamma^c_{d b} T_{..c..}
            corr = -np.einsum("cdb,c...->db...", gamma, Tm)
        out += np.moveaxis(corr, 1, ax + 1)
    return out


def covariant_derivative(field: TensorField, pt: ChartPoint, backend=None):
    """Components of ``nabla T`` with the derivative index first: ``out[d, ...]``."""
    backend = backend or Backend()
    mp = metric_point(pt, backend)
    x = pt.coords
    if field.jet is not None and backend.kind == "analytic":
        T, dT, _ = field.jet(x)
    else:
        T = np.asarray(field.eval(x), dtype=float)
        dT = fd_gradient(field.eval, x, backend.field_step, pt.chart, richardson=True)
    partial = np.moveaxis(dT, -1, 0)
    return partial + covariant_correction(T, mp.gamma, field.valence[0])


# --------------------------------------------------------------------------
# frames
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AdaptedFrame:
    vectors: np.ndarray  # columns e_1..e_n in coordinates
    split_rank: int

    @cached_property
    def coframe(self):
        return np.linalg.inv(self.vectors)

    def gram(self, g):
        return self.vectors.T @ g @ self.vectors


def gram_schmidt(candidates, g, start=None, threshold=1e-10):
    """Orthonormalise columns w.r.t. ``g``, skipping near-dependent ones.

    ``start`` holds already orthonormal columns to orthogonalise against. The
    threshold is relative to the candidate's own length.
    """
    basis = [] if start is None else [start[:, i] for i in range(start.shape[1])]
    added = []
    for v in candidates.T:
        size = np.sqrt(max(v @ g @ v, 0.0))
        if size == 0.0:
            continue
        w = v.copy()
        for _ in range(2):  # second pass keeps orthogonality at machine precision
            for b in basis + added:
                w = w - (b @ g @ w) * b
        norm = np.sqrt(max(w @ g @ w, 0.0))
        if norm <= threshold * size:
            continue
        added.append(w / norm)
    if not added:
        return np.zeros((candidates.shape[0], 0))
    return np.stack(added, axis=1)


def adapted_frame(pt: ChartPoint, projector, threshold=1e-10):
    """g-orthonormal frame whose first ``m`` vectors span the image of ``p``."""
    g = np.asarray(pt.chart.metric_fn(pt.coords), dtype=float)
    g = 0.5 * (g + g.T)
    p = np.asarray(projector.eval(pt.coords) if hasattr(projector, "eval") else projector, dtype=float)
    m = projector.rank if hasattr(projector, "rank") else int(round(np.trace(p)))
    return frame_from_projector(g, p, m, threshold, pt)


def frame_from_projector(g, p, m, threshold=1e-10, pt=None):
    n = g.shape[0]
    q = np.eye(n) - p
    e_part = gram_schmidt(p, g, threshold=threshold)
    if e_part.shape[1] != m:
        raise RankDeficient(f"found {e_part.shape[1]} independent E-vectors, expected {m}",
                            None if pt is None else pt.coords)
    f_part = gram_schmidt(q, g, start=e_part, threshold=threshold)
    if f_part.shape[1] != n - m:
        raise RankDeficient(f"found {f_part.shape[1]} independent F-vectors, expected {n - m}",
                            None if pt is None else pt.coords)
    return AdaptedFrame(np.concatenate([e_part, f_part], axis=1), m)


def check_metric_jet(chart, x, step=1e-5):
    """Relative discrepancy between ``metric_jet`` and central differences of ``metric_fn``."""
    if chart.metric_jet is None:
        return 0.0
    _, d1, d2 = chart.metric_jet(x)
    _, f1, f2 = fd_jet(chart.metric_fn, x, step, 1e-3, chart, richardson=True)
    scale = max(1.0, float(np.max(np.abs(d1))), float(np.max(np.abs(d2))))
    return float(max(np.max(np.abs(d1 - f1)), np.max(np.abs(d2 - f2))) / scale)


def jet_closure(fn):
    """Wrap a jet-polymorphic closure as ``x -> (value, d1, d2)``."""

    def _jet(x):
        return jets.jet_of(fn, x)

    return _jet
