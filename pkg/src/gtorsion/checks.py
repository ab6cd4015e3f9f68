"""Residual suites evaluated at one sampled point.

Each suite returns a list of :class:`Check` records. Probe tuples (random
vectors and endomorphisms) are batched; the reported value of a check is the
maximum residual over all probes.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bundle as bd
from .diffgeo import TOL_DIFF, TOL_FRAME, bianchi_sum, tol_curv
from .gstructure import (
    intrinsic_torsion_direct,
    killing,
    minimal_connection_direct_tensor,
    structure_curvature_oracle,
)
from .scenarios import NON_MINIMAL_FLOOR, SFF_ZERO_TOL, XI_ZERO_TOL
from .transfer import difference_tensor_oracle, nabla_L_tensor

SUITES = ("identity", "curvature", "minimality")

# one-line description of every check, keyed by name
DESCRIPTIONS = {
    "frame_orthonormal": "max |F^T g F - I| for the adapted frame F.",
    "frame_adapted": "max |q F_E|: the first m adapted frame vectors lie in E.",
    "christoffel_symmetry": "max |Gamma^k_ij - Gamma^k_ji|.",
    "metric_compatibility": "max |d_i g_jk - Gamma^l_ij g_lk - Gamma^l_ik g_jl|.",
    "riemann_symmetries": "Skew-symmetry, pair symmetry and the first Bianchi identity of R, relative to |R|.",
    "projector_valid": "Largest of |p^2 - p|, |g p - (g p)^T| and |tr p - m|.",
    "xi_skew": "xi_X is g-skew: |g xi_X + (g xi_X)^T|.",
    "xi_in_m": "xi_X lies in m(M): its block-diagonal part w.r.t. E + F vanishes.",
    "xi_defining_formula": "xi from its tensor formula against xi recomputed from derivatives of projected vector fields.",
    "split_orthogonal": "The g(M) and m(M) parts of random skew endomorphisms are B-orthogonal.",
    "torsion_derivative_g_part": "The g(M)-part of (nabla_X xi)_Y equals [xi_X, xi_Y]_g.",
    "torsion_derivative_m_part": "(nabla_X (xi_Y))_m = nabla'_X (xi_Y) + [xi_X, xi_Y]_m with nabla' from projected fields.",
    "curvature_m_part": "R(X,Y)_m = nabla'_X xi_Y - nabla'_Y xi_X + [xi_X, xi_Y]_m - xi_[X,Y].",
    "structure_curvature_oracle": "R' = R_g - [xi, xi]_g against the curvature of the connection Gamma - xi.",
    "curvature_decomposition": "R = R' + (nabla_X xi)_Y - (nabla_Y xi)_X - [xi_X, xi_Y].",
    "curvature_operator_duality": "g(R_alpha X, Y) = B(alpha, R(X, Y)).",
    "xi_dot_duality": "g(xi.alpha, X) = -B(alpha, xi_X), with xi.alpha as the frame sum.",
    "xi_dot_forms_agree": "Frame-sum and g-dual forms of xi.alpha coincide.",
    "transfer_metric_identity": "g(LX, Y) = g(X, Y) + B(xi_X, xi_Y), with L = I - xi.xi_(.) built from the frame sum.",
    "transfer_symmetric": "L is g-self-adjoint.",
    "transfer_min_eigenvalue_defect": "max(0, 1 - lambda_min(L)): L is bounded below by the identity.",
    "transfer_derivative_identity": "g((nabla_X L)Y, Z) = B((nabla_X xi)_Y, xi_Z) + B((nabla_X xi)_Z, xi_Y), nabla L by differences.",
    "difference_tensor_oracle": "S from its closed formula against Gamma(g~) - Gamma computed directly.",
    "difference_tensor_identity": "2 g~(S(X,Y), Z) equals the three B-terms built from nabla xi.",
    "difference_tensor_symmetric": "Asymmetry of S in its two slots before symmetrisation.",
    "q_operator_duality": "g~(Q_alpha X, Y) = B(alpha, R'(X, Y)) for alpha in g(M).",
    "q_operator_skew": "Q_alpha is g~-skew for alpha in g(M).",
    "q_operator_forms_agree": "Tensor and direct evaluations of Q_alpha coincide.",
    "minimal_connection_preserves_g": "nabla' maps g(M)-valued fields to g(M)-valued fields.",
    "projector_parallel": "nabla' p = nabla p - [xi, p] vanishes.",
    "projections": "Round-trips between SO(M) and P tangent vectors, and orthogonality of the normal projection.",
    "rp_symmetries": "R^P skew in each pair, pair-symmetric and satisfying the first Bianchi identity.",
    "ricci_closed_form": "Closed-form Ricci tensor of P against the trace of R^P.",
    "scalar_closed_form": "Closed-form scalar curvature of P against the trace of Ricci.",
    "sectional_closed_form": "Closed-form sectional curvatures on basis planes against R^P.",
    "ricci_vertical_nonnegative_defect": "Negative part of the smallest eigenvalue of Ric^P on vertical vectors.",
    "sectional_nonnegative_defect": "Negative part of the smallest sampled sectional curvature (flat, integrable cases).",
    "dq_extension_independent": "(D_X Q)_gamma Y is the same for two different extensions of gamma.",
    "connection_metric_compatibility": "u <u', w'> = <nabla^P_u v, w> + <v, nabla^P_u w> on lifted fields.",
    "connection_torsion_free": "nabla^P_u v - nabla^P_v u = [u, v] on lifted fields.",
    "curvature_from_connection": "R^P from its block formulas against nabla^P applied twice.",
    "xi_norm": "max |xi| at the point.",
    "sff_max": "max |Pi^P| over basis pairs and m(M) directions.",
    "sff_symmetric": "Pi^P is symmetric.",
    "sff_vertical_block": "Pi^P vanishes on pairs of vertical vectors (exact zero).",
    "sff_oracle": "Pi^P from the closed formula against the SO(M) Levi-Civita connection paired with alpha^+.",
    "alpha_plus_normal": "alpha^+ is orthogonal to the horizontal and vertical tangent spaces of P.",
    "min_residual": "B-norm of sum_i (nabla_{e~_i} xi)_{e~_i} - xi_{R_{xi_{e~_i}} e~_i} over a g~-orthonormal frame.",
    "h1_residual": "B-norm of sum_i (nabla_{e~_i} xi)_{e~_i} - xi_{S(e~_i, e~_i)}.",
    "h2_residual": "g-norm of sum_i R_{xi_{e~_i}} e~_i - S(e~_i, e~_i).",
    "minimal_iff_harmonic": "1 when (min <= tol) disagrees with (h1 <= tol and h2 <= tol) at the point, else 0.",
    "sff_trace_matches_residual": "Horizontal trace of Pi^P paired with each m(M) basis element equals B(minimality vector, alpha).",
    "harmonic_split_h1": "h1 vector = minimality vector + xi applied to the h2 vector.",
    "harmonic_split_h2": "L applied to the h2 vector = xi.(minimality vector).",
    "h2_over_h1": "Ratio h2 / h1 (information only).",
    "non_minimal_min_residual": "Largest minimality residual over the sampled points (must exceed the floor).",
    "non_minimal_harmonic_residual": "Largest max(h1, h2) over the sampled points (must exceed the floor).",
    "points_below_floor": "Number of sampled points whose residuals fall below the floor (information only).",
}


@dataclass
class Check:
    name: str
    value: float
    tol: Optional[float]
    gated: bool = True
    relation: str = "<="  # "<=" residual bound, ">" lower bound, "info" report only

    @property
    def passed(self):
        if self.relation == "info" or self.tol is None:
            return True
        if not np.isfinite(self.value):
            return False
        return self.value <= self.tol if self.relation == "<=" else self.value > self.tol

    def as_dict(self):
        return {
            "name": self.name,
            "value": _clean(self.value),
            "tol": _clean(self.tol),
            "relation": self.relation,
            "gated": self.gated,
            "pass": bool(self.passed),
        }


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def _max(a):
    return float(np.max(np.abs(a), initial=0.0))


# ---------------------------------------------------------------- probes


class Probes:
    """Random probe vectors and endomorphisms at one point."""

    def __init__(self, geo, rng, count):
        n = geo.n
        self.count = count
        self.X, self.Y, self.Z = (rng.standard_normal((count, n)) for _ in range(3))
        raw = rng.standard_normal((count, n, n))
        # g-skew part of a random matrix
        skew = 0.5 * (raw - np.einsum("ab,pcb,cd->pad", geo.ginv, raw, geo.g))
        self.alpha = skew
        self.alpha_g = np.einsum("ab,pbc,cd->pad", geo.p, skew, geo.p) + np.einsum(
            "ab,pbc,cd->pad", geo.q, skew, geo.q
        )
        self.alpha_m = skew - self.alpha_g


def _pair(T, X, Y):
    """Evaluate a [i, j, ...] tensor on probe pairs -> [p, ...]."""
    return np.einsum("pi,pj,ij...->p...", X, Y, T)


def _comm(xi):
    c = np.einsum("iac,jcb->ijab", xi, xi)
    return c - c.transpose(1, 0, 2, 3)


# ---------------------------------------------------------------- identity suite


def identity_suite(structure, pt, rng, probes=100, tol=1e-6, s_tol=1e-5):
    geo = structure.at(pt)
    pr = Probes(geo, rng, probes)
    kind = geo.backend.kind
    out = []

    # chart-level invariants
    frame = geo.frame
    out.append(Check("frame_orthonormal", _max(frame.gram(geo.g) - np.eye(geo.n)), TOL_FRAME))
    out.append(Check("frame_adapted", _max(geo.q @ frame.vectors[:, : geo.m]), TOL_FRAME))
    out.append(Check("christoffel_symmetry", _max(geo.gamma - geo.gamma.transpose(0, 2, 1)), TOL_DIFF[kind]))
    out.append(Check("metric_compatibility", geo.compatibility_residual(), TOL_DIFF[kind]))
    rs = geo.riemann_tensor.symmetry_residuals()
    out.append(Check("riemann_symmetries", max(rs.values()), tol_curv(kind)))
    pres = structure.projector.residuals(geo.x, geo.g)
    out.append(Check("projector_valid", max(pres.values()), TOL_FRAME))

    # intrinsic torsion
    xi = geo.xi
    skew = np.einsum("ac,icb->iab", geo.g, xi)
    out.append(Check("xi_skew", _max(skew + skew.transpose(0, 2, 1)), tol))
    out.append(Check("xi_in_m", _max(np.einsum("ab,ibc,cd->iad", geo.p, xi, geo.p)
                                     + np.einsum("ab,ibc,cd->iad", geo.q, xi, geo.q)), tol))
    out.append(Check("xi_defining_formula", _max(intrinsic_torsion_direct(structure, pt).components - xi), tol))

    # split of skew endomorphisms
    a, ag, am = pr.alpha, pr.alpha_g, pr.alpha_m
    out.append(Check("split_orthogonal", _max(killing(ag, am)), 1e-12 * max(1.0, _max(a)) * geo.n))

    # derivatives of xi and the m-part of curvature
    nx = geo.nabla_xi
    comm = _comm(xi)
    comm_g = np.einsum("ab,ijbc,cd->ijad", geo.p, comm, geo.p) + np.einsum("ab,ijbc,cd->ijad", geo.q, comm, geo.q)
    comm_m = comm - comm_g
    nx_g = np.einsum("ab,ijbc,cd->ijad", geo.p, nx, geo.p) + np.einsum("ab,ijbc,cd->ijad", geo.q, nx, geo.q)
    nx_m = nx - nx_g
    out.append(Check("torsion_derivative_g_part", _max(_pair(nx_g - comm_g, pr.X, pr.Y)), tol))

    # nabla'_{d_i}(xi_{d_j}) from the projected-field formula
    Dp = minimal_connection_direct_tensor(structure, lambda x: structure.at(x).xi, pt)  # [i, j, a, b]
    # nabla_i (xi_{d_j}) = (nabla_i xi)_j + xi_{nabla_i d_j}
    nab_coord = nx + np.einsum("kij,kab->ijab", geo.gamma, xi)
    nab_m = nab_coord - (
        np.einsum("ab,ijbc,cd->ijad", geo.p, nab_coord, geo.p) + np.einsum("ab,ijbc,cd->ijad", geo.q, nab_coord, geo.q)
    )
    out.append(Check("torsion_derivative_m_part", _max(_pair(nab_m - Dp - comm_m, pr.X, pr.Y)), tol))
    R = np.transpose(geo.riem, (2, 3, 0, 1))
    R_m = R - (np.einsum("ab,ijbc,cd->ijad", geo.p, R, geo.p) + np.einsum("ab,ijbc,cd->ijad", geo.q, R, geo.q))
    line4 = R_m - (Dp - Dp.transpose(1, 0, 2, 3) + comm_m)
    out.append(Check("curvature_m_part", _max(_pair(line4, pr.X, pr.Y)), tol))
    Rp_oracle = structure_curvature_oracle(structure, pt)
    out.append(Check("structure_curvature_oracle", _max(Rp_oracle - geo.rprime), tol))
    eq23 = R - (Rp_oracle + nx - nx.transpose(1, 0, 2, 3) - comm)
    out.append(Check("curvature_decomposition", _max(_pair(eq23, pr.X, pr.Y)), tol))
    del nx_m

    # g(R_alpha X, Y) = B(alpha, R(X, Y))
    Ra = np.einsum("lkab,pbc,ac->plk", geo.riem, a, geo.ginv)
    lhs = np.einsum("pl,lm,pm->p", np.einsum("plk,pk->pl", Ra, pr.X), geo.g, pr.Y)
    rhs = killing(a, _pair(R, pr.X, pr.Y))
    out.append(Check("curvature_operator_duality", _max(lhs - rhs), tol))

    # g(xi.alpha, X) = -B(alpha, xi_X), frame-sum form
    xd = np.stack([geo.xi_dot_frame(m_) for m_ in am])
    lhs = np.einsum("pa,ab,pb->p", xd, geo.g, pr.X)
    rhs = -killing(am, np.einsum("pi,iab->pab", pr.X, xi))
    out.append(Check("xi_dot_duality", _max(lhs - rhs), tol))
    xd2 = np.stack([geo.xi_dot(m_, check=False) for m_ in am])
    out.append(Check("xi_dot_forms_agree", _max(xd - xd2), tol))

    # L = I - xi.xi_(.) from the frame sum
    L_frame = np.eye(geo.n) - np.stack([geo.xi_dot_frame(geo.xi_of(e)) for e in np.eye(geo.n)], axis=1)
    gt_frame = geo.g @ L_frame
    Bxy = killing(np.einsum("pi,iab->pab", pr.X, xi), np.einsum("pi,iab->pab", pr.Y, xi))
    val = np.einsum("pa,ab,pb->p", pr.X, gt_frame, pr.Y) - np.einsum("pa,ab,pb->p", pr.X, geo.g, pr.Y) - Bxy
    out.append(Check("transfer_metric_identity", _max(val), tol))
    sym_L = geo.g @ geo.L
    out.append(Check("transfer_symmetric", _max(sym_L - sym_L.T), tol))
    C = np.linalg.cholesky(geo.g)
    evals = np.linalg.eigvalsh(np.linalg.solve(C, np.linalg.solve(C, geo.gt).T))  # spectrum of L
    out.append(Check("transfer_min_eigenvalue_defect", max(0.0, 1.0 - float(evals.min())), 1e-9))

    # covariant derivative of L
    nL = nabla_L_tensor(structure, pt)  # [i, a, b]
    lhs = np.einsum("pi,iab,pb,ac,pc->p", pr.X, nL, pr.Y, geo.g, pr.Z)
    nxXY = np.einsum("pi,pj,ijab->pab", pr.X, pr.Y, nx)
    nxXZ = np.einsum("pi,pj,ijab->pab", pr.X, pr.Z, nx)
    xZ = np.einsum("pi,iab->pab", pr.Z, xi)
    xY = np.einsum("pi,iab->pab", pr.Y, xi)
    rhs = killing(nxXY, xZ) + killing(nxXZ, xY)
    out.append(Check("transfer_derivative_identity", _max(lhs - rhs), tol))

    # S against the Levi-Civita connection of g~
    S_or = difference_tensor_oracle(structure, pt).S
    out.append(Check("difference_tensor_oracle", _max(S_or - geo.S), s_tol))
    lhs = 2.0 * np.einsum("pk,kl,pl->p", np.einsum("kij,pi,pj->pk", S_or, pr.X, pr.Y), geo.g, pr.Z @ geo.L.T)
    rhs = np.einsum("pi,pj,pz,ijz->p", pr.X, pr.Y, pr.Z, geo.rhs_S)
    out.append(Check("difference_tensor_identity", _max(lhs - rhs), tol))
    out.append(Check("difference_tensor_symmetric", geo.S_raw_asymmetry, 1e-10))

    # g~(Q_alpha X, Y) = B(R'(X, Y), alpha) and g~-skewness of Q_alpha
    Qa = np.einsum("ckab,pab->pck", geo.Qt, ag)
    QX = np.einsum("pck,pk->pc", Qa, pr.X)
    QY = np.einsum("pck,pk->pc", Qa, pr.Y)
    lhs = np.einsum("pc,cd,pd->p", QX, geo.gt, pr.Y)
    rhs = killing(_pair(geo.rprime, pr.X, pr.Y), ag)
    out.append(Check("q_operator_duality", _max(lhs - rhs), tol))
    out.append(Check("q_operator_skew", _max(lhs + np.einsum("pc,cd,pd->p", pr.X, geo.gt, QY)), tol))
    Qd = np.stack([geo.q_matrix_direct(x) for x in ag[:5]])
    out.append(Check("q_operator_forms_agree", _max(Qd - Qa[:5]), tol))

    # minimal connection keeps g(M): nabla' of a g(M)-valued field, and nabla' p = 0
    beta0 = ag[0]
    ext = bd.g_valued_extension(structure, beta0, pt.coords)
    D = minimal_connection_direct_tensor(structure, ext, pt)
    D_m = D - (np.einsum("ab,ibc,cd->iad", geo.p, D, geo.p) + np.einsum("ab,ibc,cd->iad", geo.q, D, geo.q))
    out.append(Check("minimal_connection_preserves_g", _max(D_m), tol))
    Np = geo.nabla_p - np.einsum("iac,cb->iab", xi, geo.p) + np.einsum("ac,icb->iab", geo.p, xi)
    out.append(Check("projector_parallel", _max(Np), tol))

    # projections onto TP and its normal bundle
    resid = 0.0
    for k in range(min(probes, 10)):
        v = bd.FrameBundleVector(pr.X[k], a[k])
        t, nrm = geo.project_tangent(v), geo.project_normal(v)
        tt = geo.project_tangent(t)
        resid = max(
            resid,
            _max(t.horizontal + nrm.horizontal - v.horizontal),
            _max(tt.horizontal - t.horizontal),
            _max(tt.vertical - t.vertical),
            abs(geo.so_inner(t, nrm)),
            _max(geo.project_tangent(nrm).horizontal),
        )
    scale = max(1.0, _max(pr.X[:10]), _max(a[:10])) * float(np.linalg.cond(geo.gt))
    out.append(Check("projections", resid, TOL_FRAME * scale))
    return out


# ---------------------------------------------------------------- curvature suite


def curvature_suite(structure, pt, rng, tol=1e-4, probes=2, deep=False, tensoriality=True):
    """R^P coherence. ``deep`` adds the expensive connection-level oracles;
    ``tensoriality`` compares D_X Q across two extensions of its argument."""
    geo = structure.at(pt)
    out = []
    out.append(Check("rp_symmetries", max(geo.rp_symmetry_residuals().values()), tol))
    out.append(Check("ricci_closed_form", _max(geo.ricci_P() - geo.ricci_P_direct()), tol))
    out.append(Check("scalar_closed_form", abs(geo.scalar_P() - float(np.trace(geo.ricci_P_direct()))), tol))
    basis = geo.tangent_basis
    N = len(basis)
    sect = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            sect = max(sect, abs(geo.sectional_P(basis[i], basis[j]) - geo.rp_tensor[i, j, j, i]))
    out.append(Check("sectional_closed_form", sect, tol))
    nh = geo.n
    ric = geo.ricci_P()
    vert = ric[nh:, nh:]
    vmin = float(np.linalg.eigvalsh(vert).min()) if vert.size else 0.0
    out.append(Check("ricci_vertical_nonnegative_defect", max(0.0, -vmin), 10 * tol))
    if _max(geo.xi) <= XI_ZERO_TOL and _max(geo.riem) <= XI_ZERO_TOL:
        # flat, integrable: every P-plane has non-negative curvature
        R4 = geo.rp_tensor
        U = rng.standard_normal((50, N))
        V = rng.standard_normal((50, N))
        num = np.einsum("pa,pb,abcd,pc,pd->p", U, V, R4, V, U)
        out.append(Check("sectional_nonnegative_defect", max(0.0, -float(num.min())), 10 * tol))

    # tensoriality of D_X Q: two extensions of gamma
    G = geo.gbasis
    if tensoriality and len(G):
        coeff = rng.standard_normal(len(G))
        gam = np.einsum("A,Aab->ab", coeff, G)
        X, Y = rng.standard_normal(geo.n), rng.standard_normal(geo.n)
        ref = geo.dq_matrix(X, gam) @ Y
        worst = 0.0
        for ext in (bd.g_valued_extension, bd.frame_g_extension):
            worst = max(worst, _max(_dq_by_extension(structure, pt, ext(structure, gam, pt.coords), X, Y) - ref))
        out.append(Check("dq_extension_independent", worst, tol))

    if deep:
        worst_c = worst_t = worst_r = 0.0
        for _ in range(probes):
            fields = []
            for _k in range(3):
                Xk = rng.standard_normal(geo.n)
                b0 = np.einsum("A,Aab->ab", rng.standard_normal(len(G)), G) if len(G) else np.zeros((geo.n, geo.n))
                fields.append(((Xk, b0), bd.lift_field(Xk, bd.g_valued_extension(structure, b0, pt.coords))))
            (u0, u), (v0, v), (w0, w) = fields
            worst_c = max(worst_c, bd.metric_compatibility_residual(structure, pt, u, v, w))
            worst_t = max(worst_t, bd.torsion_residual(structure, pt, u, v))
            H, V = bd.curvature_P_from_connection(structure, pt, u, v, w)
            H2, V2 = geo.curvature_P(u0, v0, w0)
            worst_r = max(worst_r, _max(H - H2), _max(V - V2))
        out.append(Check("connection_metric_compatibility", worst_c, tol))
        out.append(Check("connection_torsion_free", worst_t, tol))
        out.append(Check("curvature_from_connection", worst_r, tol))
    return out


def _dq_by_extension(structure, pt, gamma_field, X, Y):
    """(D_X Q)_gamma(Y) = nabla~_X(Q_gamma Y) - Q_{nabla'_X gamma} Y - Q_gamma(nabla~_X Y), Y constant."""
    from .diffgeo import fd_gradient

    geo = structure.at(pt)
    h = geo.backend.field_step
    F = lambda x: structure.at(x).q_matrix(gamma_field(x)) @ Y
    dF = fd_gradient(F, pt.coords, h, pt.chart) @ X
    gam = gamma_field(pt.coords)
    dgam = np.einsum("abd,d->ab", fd_gradient(gamma_field, pt.coords, h, pt.chart), X)
    AX = np.einsum("d,dab->ab", X, geo.A_prime)
    npg = dgam + AX @ gam - gam @ AX
    ntXY = np.einsum("kdj,d,j->k", geo.gamma_tilde, X, Y)
    return (
        dF
        + np.einsum("kdj,d,j->k", geo.gamma_tilde, X, F(pt.coords))
        - geo.q_matrix(npg) @ Y
        - geo.q_matrix(gam) @ ntXY
    )


# ---------------------------------------------------------------- minimality suite


def minimality_suite(structure, pt, expectations, tol=1e-6, identity_tol=1e-6):
    geo = structure.at(pt)
    out = []
    xi_zero = "xi_zero" in expectations
    minimal = "minimal" in expectations
    sff = geo.second_fundamental_form
    out.append(Check("xi_norm", _max(geo.xi), XI_ZERO_TOL, gated=xi_zero, relation="<=" if xi_zero else "info"))
    out.append(Check("sff_max", sff.max_abs(), SFF_ZERO_TOL, gated=xi_zero, relation="<=" if xi_zero else "info"))
    out.append(Check("sff_symmetric", sff.symmetry_residual(), SFF_ZERO_TOL))
    out.append(Check("sff_vertical_block", sff.vertical_block_max(), 0.0))
    out.append(Check("sff_oracle", _max(sff.table - geo.second_fundamental_form_oracle().table), identity_tol))
    normal = 0.0
    for alpha in geo.mbasis:
        ap = geo.plus(alpha)
        for Y, b in geo.tangent_basis:
            normal = max(normal, abs(geo.so_inner(ap, geo.from_primed(Y, b))))
    out.append(Check("alpha_plus_normal", normal, 1e-10))

    mres = geo.minimality_residual()
    h1, h2 = geo.harmonicity_residuals()
    rel = "<=" if minimal else "info"
    out.append(Check("min_residual", mres, tol, gated=minimal, relation=rel))
    out.append(Check("h1_residual", h1, tol, gated=minimal, relation=rel))
    out.append(Check("h2_residual", h2, tol, gated=minimal, relation=rel))
    consistent = (mres <= tol) == ((h1 <= tol) and (h2 <= tol))
    out.append(Check("minimal_iff_harmonic", 0.0 if consistent else 1.0, 0.0))

    mv = geo.minimality_vector
    trace = np.einsum("iiA->A", sff.table[: geo.n, : geo.n])
    pair = np.array([killing(mv, alpha) for alpha in geo.mbasis])
    out.append(Check("sff_trace_matches_residual", _max(pair - trace), identity_tol))
    hv1, hv2 = geo.harmonicity_vectors
    out.append(Check("harmonic_split_h1", _max(hv1 - mv - geo.xi_of(hv2)), identity_tol))
    out.append(Check("harmonic_split_h2", _max(geo.L @ hv2 - geo.xi_dot(mv, check=False)), identity_tol))
    ratio = h2 / h1 if h1 > 0 else 0.0
    out.append(Check("h2_over_h1", ratio, None, gated=False, relation="info"))
    return out


def non_minimal_aggregate(points, floor=NON_MINIMAL_FLOOR):
    """Scenario-level checks for a non-minimal structure from per-point residuals."""
    mins = [p["min_residual"] for p in points]
    hs = [max(p["h1_residual"], p["h2_residual"]) for p in points]
    below = sum(1 for a, b in zip(mins, hs) if min(a, b) <= floor)
    return [
        Check("non_minimal_min_residual", max(mins), floor, relation=">"),
        Check("non_minimal_harmonic_residual", max(hs), floor, relation=">"),
        Check("points_below_floor", float(below), None, gated=False, relation="info"),
    ]
