"""The almost-product SO(m) x SO(n-m) structure defined by a projector field.

Skew endomorphisms are plain ``n x n`` coordinate matrices ``A[a, b] = A^a_b``.
The structure algebra ``g(M)`` is the part commuting with ``p`` (block
diagonal for ``E + F``), ``m(M)`` the part exchanging ``E`` and ``F``. The
pairing is ``B(A, C) = -tr(AC)``.

The intrinsic torsion is stored as ``xi[i, a, b]``, the matrix of the
endomorphism ``xi_{d_i}``; its covariant derivative as ``nabla_xi[i, j, a, b]``
holding ``(nabla_{d_i} xi)_{d_j}``.
"""

import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .diffgeo import (
    Backend,
    ChartPoint,
    MetricPoint,
    covariant_correction,
    fd_gradient,
    field_jet,
    frame_from_projector,
)
from .errors import NotSkew

TOL_STRUCT = {"analytic": 1e-7, "fd": 1e-5, "fd-richardson": 1e-5}


# --------------------------------------------------------------------------
# skew-endomorphism algebra
# --------------------------------------------------------------------------


def killing(A, C):
    """B(A, C) = -tr(AC); broadcasts over leading axes."""
    A, C = np.asarray(A), np.asarray(C)
    return -(A * np.swapaxes(C, -1, -2)).sum(axis=(-2, -1))


def bnorm(A):
    return float(np.sqrt(max(killing(A, A), 0.0)))


def bracket(A, C):
    return A @ C - C @ A


def skew_residual(A, g):
    """max |g(AX, Y) + g(X, AY)| over coordinate vectors."""
    gA = g @ A
    return float(np.max(np.abs(gA + gA.T)))


def skew_part(A, g, ginv=None):
    ginv = np.linalg.inv(g) if ginv is None else ginv
    return 0.5 * (A - ginv @ A.T @ g)


def split_matrices(A, p):
    q = np.eye(p.shape[0]) - p
    return p @ A @ p + q @ A @ q, p @ A @ q + q @ A @ p


@dataclass(frozen=True, eq=False)
class SkewEndomorphism:
    matrix: np.ndarray
    base_pt: Optional[ChartPoint] = None


@dataclass(frozen=True, eq=False)
class ProjectorField:
    """g-orthogonal projector ``p`` onto a rank-``m`` distribution E.

    ``eval`` returns the coordinate matrix ``p^a_b``; ``jet`` (optional) returns
    ``(p, dp, d2p)`` with derivative axes last.
    """

    eval: Callable
    rank: int
    jet: Optional[Callable] = None

    def residuals(self, x, g):
        p = np.asarray(self.eval(x))
        gp = g @ p
        return {
            "idempotent": float(np.max(np.abs(p @ p - p))),
            "g_symmetric": float(np.max(np.abs(gp - gp.T))),
            "trace": float(abs(np.trace(p) - self.rank)),
        }


def split_skew(A, p, g=None, tol=1e-10):
    """Split a skew endomorphism into its g(M) and m(M) parts.

    Accepts a raw matrix or a :class:`SkewEndomorphism`; ``p`` may be a matrix
    or a :class:`ProjectorField` (then ``A.base_pt`` locates the point).
    """
    base = None
    mat = A
    if isinstance(A, SkewEndomorphism):
        base, mat = A.base_pt, A.matrix
    if isinstance(p, ProjectorField):
        if base is None:
            raise ValueError("a ProjectorField needs a base point to evaluate")
        p = np.asarray(p.eval(base.coords))
    if g is None and base is not None:
        g = np.asarray(base.chart.metric_fn(base.coords))
    if g is not None:
        scale = max(1.0, float(np.max(np.abs(g @ mat))))
        if skew_residual(mat, g) > tol * scale:
            raise NotSkew(f"endomorphism violates g-skewness by {skew_residual(mat, g):.3g}")
    a_g, a_m = split_matrices(mat, p)
    if isinstance(A, SkewEndomorphism):
        return SkewEndomorphism(a_g, base), SkewEndomorphism(a_m, base)
    return a_g, a_m


def so_basis(frame, g, split_rank):
    """B-orthonormal bases of g(M) and m(M) built from an adapted frame.

    Elements are ``F (E_ab / sqrt 2) F^-1`` for ``a < b``; pairs inside one block
    go to g(M), mixed pairs (``a <= m < b`` in 1-based terms) to m(M).
    """
    n = frame.shape[0]
    finv = frame.T @ g
    g_list, m_list = [], []
    for a in range(n):
        for b in range(a + 1, n):
            K = np.zeros((n, n))
            K[a, b], K[b, a] = -1.0, 1.0
            elem = frame @ (K / np.sqrt(2.0)) @ finv
            same = (a < split_rank) == (b < split_rank)
            (g_list if same else m_list).append(elem)
    empty = np.zeros((0, n, n))
    return (np.array(g_list) if g_list else empty), (np.array(m_list) if m_list else empty)


@dataclass(frozen=True, eq=False)
class TorsionTensor:
    components: np.ndarray  # xi[i, a, b]
    base_pt: Optional[ChartPoint] = None

    def __call__(self, X):
        return np.einsum("i,iab->ab", X, self.components)

    def norm(self):
        return float(np.max(np.abs(self.components)))


# --------------------------------------------------------------------------
# pointwise structure data
# --------------------------------------------------------------------------


class StructurePoint(MetricPoint):
    """Projector jets, intrinsic torsion and structure curvature at a point."""

    def __init__(self, pt, backend, projector: ProjectorField):
        super().__init__(pt, backend)
        self.projector = projector
        self.m = projector.rank
        p, dp, d2p = field_jet(projector.eval, projector.jet, self.x, backend, self.chart)
        self.p, self.dp, self.d2p = p, dp, d2p
        self.q = np.eye(self.n) - p

    @property
    def tol_struct(self):
        return TOL_STRUCT[self.backend.kind]

    def split(self, A):
        return split_matrices(A, self.p)

    def part_g(self, A):
        return self.p @ A @ self.p + self.q @ A @ self.q

    def part_m(self, A):
        return self.p @ A @ self.q + self.q @ A @ self.p

    @cached_property
    def nabla_p(self):
        """(nabla_{d_i} p) as [i, a, b]."""
        return np.moveaxis(self.dp, -1, 0) + covariant_correction(self.p, self.gamma, 1)

    @cached_property
    def xi(self):
        # xi_X = q (nabla_X p) - p (nabla_X p)
        return np.einsum("ab,ibc->iac", self.q - self.p, self.nabla_p)

    @cached_property
    def torsion(self):
        return TorsionTensor(self.xi, self.pt)

    def xi_of(self, X):
        n = self.n
        return (X @ self.xi.reshape(n, n * n)).reshape(n, n)

    @cached_property
    def nabla2_p(self):
        """Second covariant derivative (nabla^2 p)_{d_i, d_j} as [i, j, a, b]."""
        G, dG, p, dp = self.gamma, self.dgamma, self.p, self.dp
        # T^a_{jb} = (nabla_j p)^a_b stored upper-first as [a, j, b]
        T = self.nabla_p.transpose(1, 0, 2)
        dT = (
            np.einsum("abji->ajbi", self.d2p)
            + np.einsum("ajci,cb->ajbi", dG, p)
            + np.einsum("ajc,cbi->ajbi", G, dp)
            - np.einsum("cjbi,ac->ajbi", dG, p)
            - np.einsum("cjb,aci->ajbi", G, dp)
        )
        full = np.moveaxis(dT, -1, 0) + covariant_correction(T, G, 1)  # [i, a, j, b]
        return full.transpose(0, 2, 1, 3)

    @cached_property
    def nabla_xi(self):
        """(nabla_{d_i} xi)_{d_j} as [i, j, a, b]."""
        Np = self.nabla_p
        return -2.0 * np.einsum("iac,jcb->ijab", Np, Np) + np.einsum(
            "ac,ijcb->ijab", self.q - self.p, self.nabla2_p
        )

    def nabla_xi_of(self, X, Y):
        n = self.n
        return ((X @ self.nabla_xi.reshape(n, -1)).reshape(n, n * n).T @ Y).reshape(n, n)

    @cached_property
    def rprime(self):
        """R'(d_i, d_j) = R(d_i, d_j)_g - [xi_i, xi_j]_g as [i, j, a, b]."""
        R = np.transpose(self.riem, (2, 3, 0, 1))
        comm = np.einsum("iac,jcb->ijab", self.xi, self.xi)
        comm = comm - comm.transpose(1, 0, 2, 3)
        D = R - comm
        return np.einsum("ac,ijcd,db->ijab", self.p, D, self.p) + np.einsum(
            "ac,ijcd,db->ijab", self.q, D, self.q
        )

    def rprime_of(self, X, Y):
        return np.einsum("i,j,ijab->ab", X, Y, self.rprime)

    @cached_property
    def frame(self):
        return frame_from_projector(self.g, self.p, self.m, pt=self.pt)

    @cached_property
    def so_bases(self):
        return so_basis(self.frame.vectors, self.g, self.m)

    @property
    def gbasis(self):
        return self.so_bases[0]

    @property
    def mbasis(self):
        return self.so_bases[1]


# --------------------------------------------------------------------------
# the structure object and field-level operations
# --------------------------------------------------------------------------


class AlmostProductStructure:
    """A chart, a projector field and a differentiation backend.

    ``at(pt)`` returns the full pointwise geometry (see
    :class:`gtorsion.bundle.BundlePoint`); results are cached per point.
    """

    def __init__(self, chart, projector, backend=None, cache_size=4096):
        self.chart = chart
        self.projector = projector
        self.backend = backend or Backend()
        self._cache = OrderedDict()
        self._lock = threading.Lock()
        self._cache_size = cache_size

    @property
    def n(self):
        return self.chart.dim

    @property
    def m(self):
        return self.projector.rank

    def point(self, coords):
        return self.chart.point(coords)

    def at(self, pt):
        if not isinstance(pt, ChartPoint):
            pt = self.chart.point(pt)
        key = pt.key
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        from .bundle import BundlePoint

        geo = BundlePoint(pt, self.backend, self.projector)
        geo.structure = self
        with self._lock:
            geo = self._cache.setdefault(key, geo)
            while len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return geo

    def with_backend(self, backend):
        return AlmostProductStructure(self.chart, self.projector, backend, self._cache_size)

    def field_gradient(self, fn, pt, step=None):
        """Partials (derivative axis last) of ``x -> fn(self.at(x))``, Richardson-refined."""
        h = self.backend.field_step if step is None else step
        return fd_gradient(lambda y: fn(self.at(y)), pt.coords, h, self.chart, richardson=True)


def intrinsic_torsion(structure, pt):
    """xi at ``pt`` via ``xi_X = q(nabla_X p) - p(nabla_X p)``."""
    return structure.at(pt).torsion


def _vector_derivative(geo, vec_fn, h):
    """nabla_{d_i} V as [i, a] for a vector field closure, FD partials plus exact Gamma."""
    dV = np.moveaxis(fd_gradient(vec_fn, geo.x, h, geo.chart, richardson=True), -1, 0)
    return dV + np.einsum("aic,c->ia", geo.gamma, vec_fn(geo.x))


def intrinsic_torsion_direct(structure, pt):
    """Oracle: ``xi_X Y = (nabla_X qY)^E + (nabla_X pY)^F`` on coordinate fields.

    Only projector values are differentiated (numerically); no use of ``nabla p``.
    """
    geo = structure.at(pt)
    n, h = geo.n, structure.backend.field_step
    proj = structure.projector.eval
    out = np.zeros((n, n, n))
    for j in range(n):
        e = np.eye(n)[j]
        d_pY = _vector_derivative(geo, lambda x: np.asarray(proj(x)) @ e, h)
        d_qY = _vector_derivative(geo, lambda x: e - np.asarray(proj(x)) @ e, h)
        out[:, :, j] = d_qY @ geo.p.T + d_pY @ geo.q.T
    return TorsionTensor(out, pt)


def levi_civita_derivative(structure, alpha_field, X, pt):
    """nabla_X alpha for an endomorphism field given as ``x -> matrix``."""
    geo = structure.at(pt)
    alpha = np.asarray(alpha_field(pt.coords))
    d = np.moveaxis(fd_gradient(alpha_field, pt.coords, structure.backend.field_step, pt.chart), -1, 0)
    nab = d + covariant_correction(alpha, geo.gamma, 1)
    return np.einsum("i,iab->ab", X, nab)


def minimal_connection_derivative(structure, alpha_field, X, pt):
    """nabla'_X alpha = nabla_X alpha - [xi_X, alpha]."""
    geo = structure.at(pt)
    alpha = np.asarray(alpha_field(pt.coords))
    return levi_civita_derivative(structure, alpha_field, X, pt) - bracket(geo.xi_of(X), alpha)


def minimal_connection_direct_tensor(structure, alpha_field, pt):
    """Oracle for ``nabla'_{d_i} alpha`` as [i, ..., a, b].

    ``alpha_field`` may return a stack of endomorphisms with leading axes.

    Uses ``nabla'_X Y = p nabla_X (pY) + q nabla_X (qY)`` on the columns of
    ``alpha`` and ``(nabla'_X alpha) d_k = nabla'_X (alpha d_k) - alpha nabla'_X d_k``.
    """
    geo = structure.at(pt)
    h = structure.backend.field_step
    proj = structure.projector.eval
    eye = np.eye(geo.n)

    def nabla_prime_columns(mat_fn):
        # [i, ..., a, k]: nabla'_{d_i} of the vector fields given by the columns of mat_fn
        out = 0.0
        for side, proj_side in ((geo.p, lambda x: np.asarray(proj(x))), (geo.q, lambda x: eye - np.asarray(proj(x)))):
            fn = lambda x, ps=proj_side: ps(x) @ mat_fn(x)
            d = np.moveaxis(fd_gradient(fn, geo.x, h, geo.chart, richardson=True), -1, 0)
            cov = d + np.einsum("aic,...ck->i...ak", geo.gamma, fn(geo.x))
            out = out + np.einsum("ab,i...bk->i...ak", side, cov)
        return out

    alpha = np.asarray(alpha_field(pt.coords))
    first = nabla_prime_columns(lambda x: np.asarray(alpha_field(x)))
    second = nabla_prime_columns(lambda x: eye)
    return first - np.einsum("...ab,ibk->i...ak", alpha, second)


def minimal_connection_direct(structure, alpha_field, X, pt):
    return np.einsum("i,iab->ab", X, minimal_connection_direct_tensor(structure, alpha_field, pt))


def structure_curvature(structure, pt, X, Y):
    """R'(X, Y) = R(X, Y)_g - [xi_X, xi_Y]_g."""
    return structure.at(pt).rprime_of(X, Y)


def structure_curvature_oracle(structure, pt):
    """Curvature of nabla' = nabla - xi computed directly from its coefficients.

    ``Gamma'^k_ij = Gamma^k_ij - xi^k_ij`` is differentiated numerically and fed
    to the general (torsionful) curvature kernel. Returns [i, j, a, b].
    """
    from . import _kernels

    def gamma_prime(geo):
        return geo.gamma - np.transpose(geo.xi, (1, 0, 2))

    geo = structure.at(pt)
    dgp = structure.field_gradient(gamma_prime, pt)
    R = _kernels.riemann(gamma_prime(geo), dgp)
    return np.transpose(R, (2, 3, 0, 1))
