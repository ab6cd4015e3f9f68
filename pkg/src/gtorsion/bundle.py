"""Geometry of the reduced frame bundle P inside SO(M).

Tangent vectors of SO(M) are pairs ``(X, alpha)`` meaning ``X^h + alpha^*`` with
``alpha`` a skew endomorphism. P-tangent vectors are stored in the primed form
``(Y, beta)`` meaning ``Y^{h'} + beta^*`` with ``beta`` in g(M); the P metric in
that form is ``g~(Y, Y') + B(beta, beta')``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .diffgeo import gram_schmidt
from .gstructure import bracket, killing, so_basis
from .transfer import TransferPoint


def _norm(sq):
    return float(np.sqrt(max(float(sq), 0.0))) + 0.0


@dataclass(frozen=True, eq=False)
class FrameBundleVector:
    horizontal: np.ndarray
    vertical: np.ndarray
    flavor: str = "generic"  # generic | P-tangent | P-normal

    def __add__(self, other):
        return FrameBundleVector(self.horizontal + other.horizontal, self.vertical + other.vertical)

    def __sub__(self, other):
        return FrameBundleVector(self.horizontal - other.horizontal, self.vertical - other.vertical)

    def __mul__(self, c):
        return FrameBundleVector(c * self.horizontal, c * self.vertical, self.flavor)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SecondFundamentalPairing:
    table: np.ndarray  # [u, v, A] over the P-tangent basis and the m(M) basis
    n_horizontal: int

    def symmetry_residual(self):
        return float(np.max(np.abs(self.table - self.table.transpose(1, 0, 2)), initial=0.0))

    def vertical_block_max(self):
        h = self.n_horizontal
        return float(np.max(np.abs(self.table[h:, h:]), initial=0.0))

    def max_abs(self):
        return float(np.max(np.abs(self.table), initial=0.0))


class BundlePoint(TransferPoint):
    """All pointwise data needed for the intrinsic and extrinsic geometry of P."""

    # -------------------------------------------------------------- operators

    def r_matrix(self, alpha):
        """R_alpha = sum_i R(e_i, alpha e_i) as a matrix."""
        return np.einsum("lkab,bc,ac->lk", self.riem, alpha, self.ginv)

    def r_op(self, alpha, X):
        return self.r_matrix(alpha) @ X

    @cached_property
    def _g_projector(self):
        """Pg[s, t, a, b] = d(alpha_g)[s, t] / d alpha[a, b]."""
        p, q = self.p, self.q
        return np.einsum("sa,bt->stab", p, p) + np.einsum("sa,bt->stab", q, q)

    @cached_property
    def Qt(self):
        """Q as a tensor Qt[c, k, a, b]: Q_{alpha_g}(d_k)^c for alpha = E_ab.

        Uses ``(nabla_X alpha)_m = [xi_X, alpha]_m`` for alpha in g(M) and
        ``tr([xi_k, alpha] xi_i) = tr(alpha [xi_i, xi_k])``.
        """
        Pg = self._g_projector
        Rs = np.einsum("lkas,at->lkst", self.riem, self.ginv)
        term1 = np.einsum("ckst,stab->ckab", Rs, Pg)
        comm = np.einsum("iuv,kvw->ikuw", self.xi, self.xi)
        comm = comm - comm.transpose(1, 0, 2, 3)  # [xi_i, xi_k]
        cov = np.einsum("ikts,stab->ikab", comm, Pg)
        term2 = np.einsum("ci,ikab->ckab", self.ginv, cov)
        return np.einsum("dc,ckab->dkab", self.Linv, term1 - term2)

    def q_matrix(self, alpha):
        return np.einsum("ckab,ab->ck", self.Qt, alpha)

    def q_op(self, alpha, X, check=True):
        if check:
            self.check_g(alpha)
        return self.q_matrix(alpha) @ X

    def q_matrix_direct(self, alpha):
        """Q_alpha from ``L^-1 (R_alpha X - xi.[xi_X, alpha]_m)`` column by column."""
        R = self.r_matrix(alpha)
        cols = [R[:, k] - self.xi_dot(self.part_m(bracket(self.xi[k], alpha)), check=False) for k in range(self.n)]
        return self.Linv @ np.stack(cols, axis=1)

    def check_g(self, alpha):
        from .errors import NotInG

        a_m = self.part_m(alpha)
        if np.max(np.abs(a_m)) > self.tol_struct * max(1.0, float(np.max(np.abs(alpha)))):
            raise NotInG(f"m(M)-part of size {np.max(np.abs(a_m)):.3g}", self.x)

    # -------------------------------------------------------------- projections

    def to_primed(self, v):
        """(X, alpha) in the h-form of a P-tangent vector to its primed form."""
        return v.horizontal, v.vertical - self.xi_of(v.horizontal)

    def from_primed(self, Y, beta, flavor="P-tangent"):
        return FrameBundleVector(Y, self.xi_of(Y) + beta, flavor)

    def project_tangent(self, v):
        a_g, a_m = self.split(v.vertical)
        Y = self.Linv @ (v.horizontal - self.xi_dot(a_m, check=False))
        return self.from_primed(Y, a_g)

    def project_normal(self, v):
        t = self.project_tangent(v)
        return FrameBundleVector(v.horizontal - t.horizontal, v.vertical - t.vertical, "P-normal")

    def plus(self, alpha):
        """alpha^+ = alpha^* + (xi.alpha)^h for alpha in m(M)."""
        return FrameBundleVector(self.xi_dot(alpha, check=False), alpha, "P-normal")

    def so_inner(self, u, v):
        return float(u.horizontal @ self.g @ v.horizontal + killing(u.vertical, v.vertical))

    def p_inner(self, Y1, b1, Y2, b2):
        return float(Y1 @ self.gt @ Y2 + killing(b1, b2))

    # -------------------------------------------------------------- derivative data

    @cached_property
    def A_prime(self):
        """Connection matrices of nabla' on endomorphisms: Gamma_d - xi_d, as [d, a, b]."""
        return np.transpose(self.gamma, (1, 0, 2)) - self.xi

    @cached_property
    def dS(self):
        return self.structure.field_gradient(lambda q: q.S, self.pt)

    @cached_property
    def riem_tilde(self):
        dgt = self.dgamma + self.dS
        return _kernels.riemann(self.gamma_tilde, dgt)

    @cached_property
    def DRprime(self):
        """(D_{d_d} R')(d_j, d_k) as [d, j, k, a, b]."""
        dR = np.moveaxis(self.structure.field_gradient(lambda q: q.rprime, self.pt), -1, 0)
        Rp, A, Gt = self.rprime, self.A_prime, self.gamma_tilde
        comm = np.einsum("dac,jkcb->djkab", A, Rp) - np.einsum("jkac,dcb->djkab", Rp, A)
        return (
            dR
            + comm
            - np.einsum("cdj,ckab->djkab", Gt, Rp)
            - np.einsum("cdk,jcab->djkab", Gt, Rp)
        )

    @cached_property
    def DQ(self):
        """(D_{d_d} Q) as [d, c, k, a, b]; meaningful on alpha in g(M)."""
        dQ = np.moveaxis(self.structure.field_gradient(lambda q: q.Qt, self.pt), -1, 0)
        Qt, A, Gt = self.Qt, self.A_prime, self.gamma_tilde
        return (
            dQ
            + np.einsum("cde,ekab->dckab", Gt, Qt)
            - np.einsum("edk,ceab->dckab", Gt, Qt)
            - np.einsum("ckub,dua->dckab", Qt, A)
            + np.einsum("ckav,dbv->dckab", Qt, A)
        )

    def dq_matrix(self, X, alpha):
        return np.einsum("d,dckab,ab->ck", X, self.DQ, alpha)

    def drprime(self, X, Y, Z):
        return np.einsum("d,j,k,djkab->ab", X, Y, Z, self.DRprime)

    # -------------------------------------------------------------- bases

    @cached_property
    def gt_basis(self):
        return self.gt_frame.T  # rows e~_i

    @cached_property
    def tangent_basis(self):
        """P-tangent orthonormal basis as a list of primed pairs (Y, beta)."""
        n = self.n
        zero = np.zeros((n, n))
        out = [(e, zero) for e in self.gt_basis]
        out += [(np.zeros(n), gam) for gam in self.gbasis]
        return out

    # -------------------------------------------------------------- curvature of P

    def rt(self, X, Y, Z):
        return np.einsum("lkij,i,j,k->l", self.riem_tilde, X, Y, Z)

    def _rp_blocks(self, X, alpha, Y, beta, Z, gamma):
        """R^P(X'+alpha*, Y'+beta*)(Z'+gamma*) in primed form."""
        Rp = self.rprime_of
        Q = self.q_matrix
        H = np.zeros(self.n)
        V = np.zeros((self.n, self.n))

        def hhh(X, Y, Z):
            h = self.rt(X, Y, Z) - 0.25 * (
                Q(Rp(Y, Z)) @ X - Q(Rp(X, Z)) @ Y - 2.0 * Q(Rp(X, Y)) @ Z
            )
            v = -0.5 * self.drprime(X, Y, Z) + 0.5 * self.drprime(Y, X, Z)
            return h, v

        def hhv(X, Y, g_):
            h = 0.5 * (self.dq_matrix(X, g_) @ Y - self.dq_matrix(Y, g_) @ X)
            v = 0.5 * bracket(Rp(X, Y), g_) - 0.25 * (Rp(X, Q(g_) @ Y) - Rp(Y, Q(g_) @ X))
            return h, v

        def hvh(X, b, Z):
            h = 0.5 * self.dq_matrix(X, b) @ Z
            v = -0.25 * (Rp(X, Q(b) @ Z) + bracket(b, Rp(X, Z)))
            return h, v

        def hvv(X, b, g_):
            return -0.25 * (Q(bracket(b, g_)) @ X + Q(b) @ (Q(g_) @ X)), 0.0

        def vvh(a, b, Z):
            Qa, Qb = Q(a), Q(b)
            return 0.25 * (Qa @ Qb - Qb @ Qa) @ Z + 0.5 * Q(bracket(a, b)) @ Z, 0.0

        def vvv(a, b, g_):
            return 0.0, -0.25 * bracket(bracket(a, b), g_)

        terms = [
            (hhh, X, Y, Z, 1.0),
            (hhv, X, Y, gamma, 1.0),
            (hvh, X, beta, Z, 1.0),
            (hvv, X, beta, gamma, 1.0),
            (hvh, Y, alpha, Z, -1.0),
            (hvv, Y, alpha, gamma, -1.0),
            (vvh, alpha, beta, Z, 1.0),
            (vvv, alpha, beta, gamma, 1.0),
        ]
        for fn, a, b, c, sign in terms:
            if not (np.any(a) and np.any(b) and np.any(c)):
                continue
            h, v = fn(a, b, c)
            H = H + sign * h
            V = V + sign * v
        return H, V

    def curvature_P(self, u, v, w):
        """R^P(u, v)w for P-tangent primed pairs; returns a primed pair."""
        return self._rp_blocks(u[0], u[1], v[0], v[1], w[0], w[1])

    @cached_property
    def rp_tensor(self):
        """<R^P(u_a, u_b)u_c, u_d> over the orthonormal P-tangent basis, block by block."""
        E, G = self.gt_basis, self.gbasis
        nh, nv = E.shape[0], G.shape[0]
        N = nh + nv
        Rt, Rp, Qt, DQ, DR = self.riem_tilde, self.rprime, self.Qt, self.DQ, self.DRprime
        W = E @ self.gt  # horizontal pairing rows
        kill = lambda V: -np.einsum("...ab,Dba->...D", V, G)
        comm = lambda A, B: A @ B - B @ A

        # basis-level building blocks
        RE = np.einsum("ijab,Ai,Bj->ABab", Rp, E, E)  # R'(e_A, e_B)
        QG = np.einsum("ckab,Cab->Cck", Qt, G)  # Q(gamma_C)
        QGE = np.einsum("Cck,Bk->BCc", QG, E)  # Q(gamma_C) e_B
        QRE = np.einsum("ckab,ABab->ABck", Qt, RE)  # Q(R'(e_A, e_B)) as a matrix
        DQE = np.einsum("dckab,Ad,Cab->ACck", DQ, E, G)  # (D_{e_A} Q)_{gamma_C}
        DRE = np.einsum("djkab,Ad,Bj,Ck->ABCab", DR, E, E, E)
        RtE = np.einsum("lkij,Ai,Bj,Ck->ABCl", Rt, E, E, E)
        GG = np.einsum("Aab,Bbc->ABac", G, G)
        brGG = GG - GG.transpose(1, 0, 2, 3)  # [gamma_A, gamma_B]
        QbrGG = np.einsum("ckab,ABab->ABck", Qt, brGG)

        out = np.zeros((N, N, N, N))
        h, v = slice(0, nh), slice(nh, N)

        # (h, h, h)
        QREZ = np.einsum("ABck,Ck->ABCc", QRE, E)
        Hh = RtE - 0.25 * (
            QREZ.transpose(2, 0, 1, 3) - QREZ.transpose(0, 2, 1, 3) - 2.0 * QREZ
        )
        Vh = -0.5 * DRE + 0.5 * DRE.transpose(1, 0, 2, 3, 4)
        out[h, h, h, h] = np.einsum("ABCc,Dc->ABCD", Hh, W)
        out[h, h, h, v] = kill(Vh)

        # (h, h, v)
        DQEY = np.einsum("ACck,Bk->ABCc", DQE, E)
        Hv = 0.5 * (DQEY - DQEY.transpose(1, 0, 2, 3))
        RQ = np.einsum("ijab,Ai,BCj->ABCab", Rp, E, QGE)  # R'(e_A, Q(gamma_C) e_B)
        Vv = 0.5 * comm(RE[:, :, None], G[None, None]) - 0.25 * (RQ - RQ.transpose(1, 0, 2, 3, 4))
        out[h, h, v, h] = np.einsum("ABCc,Dc->ABCD", Hv, W)
        out[h, h, v, v] = kill(Vv)

        # (h, v, h): X = e_A, beta = gamma_B, Z = e_C
        H_hvh = 0.5 * np.einsum("ABck,Ck->ABCc", DQE, E)
        RXQZ = np.einsum("ijab,Ai,CBj->ABCab", Rp, E, QGE)  # R'(e_A, Q(gamma_B) e_C)
        V_hvh = -0.25 * (RXQZ + comm(G[None, :, None], RE[:, None, :]))
        out[h, v, h, h] = np.einsum("ABCc,Dc->ABCD", H_hvh, W)
        out[h, v, h, v] = kill(V_hvh)

        # (h, v, v): X = e_A, beta = gamma_B, gamma = gamma_C
        QQ = np.einsum("Bck,Ckl->BCcl", QG, QG)
        H_hvv = -0.25 * (
            np.einsum("BCck,Ak->ABCc", QbrGG, E) + np.einsum("BCcl,Al->ABCc", QQ, E)
        )
        out[h, v, v, h] = np.einsum("ABCc,Dc->ABCD", H_hvv, W)

        # (v, h, *) from skew-symmetry of the first pair of slots
        out[v, h] = -out[h, v].transpose(1, 0, 2, 3)

        # (v, v, h)
        H_vvh = 0.25 * (QQ - QQ.transpose(1, 0, 2, 3)) + 0.5 * QbrGG
        out[v, v, h, h] = np.einsum("ABck,Ck,Dc->ABCD", H_vvh, E, W)

        # (v, v, v)
        V_vvv = -0.25 * comm(brGG[:, :, None], G[None, None])
        out[v, v, v, v] = kill(V_vvv)
        return out

    def rp_tensor_pointwise(self):
        """Same tensor assembled one ``curvature_P`` evaluation at a time."""
        basis = self.tangent_basis
        N = len(basis)
        out = np.zeros((N, N, N, N))
        for a in range(N):
            for b in range(N):
                for c in range(N):
                    H, V = self.curvature_P(basis[a], basis[b], basis[c])
                    for d in range(N):
                        out[a, b, c, d] = self.p_inner(H, V, *basis[d])
        return out

    def rp_symmetry_residuals(self):
        R = self.rp_tensor
        return {
            "skew_first": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
            "skew_last": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
            "pair": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))),
            "bianchi": float(np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)))),
        }

    # -------------------------------------------------------------- derived curvatures

    @cached_property
    def ricci_tilde(self):
        E = self.gt_basis
        return np.einsum("lkij,ai,lm,am->kj", self.riem_tilde, E, self.gt, E)

    def ricci_P_direct(self):
        R = self.rp_tensor
        return np.einsum("abca->bc", R)

    def ricci_P(self):
        """Closed-form Ric^P on the orthonormal P-tangent basis."""
        E, G = self.gt_basis, self.gbasis
        n_h, N = len(E), len(E) + len(G)
        gt = self.gt
        out = np.zeros((N, N))
        QA = [self.q_matrix(a) for a in G]
        Rpe = np.einsum("ijab,ki->kjab", self.rprime, E)  # R'(e_k, d_j)
        for i in range(n_h):
            for j in range(n_h):
                X, Y = E[i], E[j]
                val = X @ self.ricci_tilde @ Y
                RX = np.einsum("j,kjab->kab", X, Rpe)  # R'(e_k, X)
                RY = np.einsum("j,kjab->kab", Y, Rpe)
                val -= 0.75 * float(np.sum(killing(RX, RY)))
                val += 0.25 * sum(float((Qa @ X) @ gt @ (Qa @ Y)) for Qa in QA)
                out[i, j] = val
        for i in range(n_h):
            X = E[i]
            for A, gam in enumerate(G):
                div = sum(float((self.dq_matrix(e, gam) @ X) @ gt @ e) for e in E)
                tr = sum(float((self.dq_matrix(X, gam) @ e) @ gt @ e) for e in E)
                out[i, n_h + A] = out[n_h + A, i] = 0.5 * (div - tr)
        for A, b in enumerate(G):
            for B, c in enumerate(G):
                val = sum(float((QA[A] @ e) @ gt @ (QA[B] @ e)) for e in E)
                val += sum(float(killing(bracket(a, b), bracket(a, c))) for a in G)
                out[n_h + A, n_h + B] = 0.25 * val
        return out

    def scalar_P(self):
        E, G = self.gt_basis, self.gbasis
        s = float(np.trace(np.einsum("ia,ab,jb->ij", E, self.ricci_tilde, E)))
        for e1 in E:
            for e2 in E:
                r = self.rprime_of(e1, e2)
                s -= 0.75 * killing(r, r)
        for a in G:
            Qa = self.q_matrix(a)
            for e in E:
                v = Qa @ e
                s += 0.5 * float(v @ self.gt @ v)
        for a in G:
            for b in G:
                c = bracket(a, b)
                s += 0.25 * killing(c, c)
        return float(s)

    def scalar_tilde(self):
        E = self.gt_basis
        return float(np.einsum("ia,ab,ib->", E, self.ricci_tilde, E))

    def kappa_tilde(self, X, Y):
        """g~(R~(X,Y)Y, X) for g~-orthonormal X, Y."""
        return float(X @ self.gt @ self.rt(X, Y, Y))

    def sectional_P(self, u, v):
        """Closed-form sectional curvature for orthonormal pure-type P-tangent pairs."""
        (X, a), (Y, b) = u, v
        hx, hy = bool(np.any(X)), bool(np.any(Y))
        if hx and hy:
            r = self.rprime_of(X, Y)
            return self.kappa_tilde(X, Y) - 0.75 * killing(r, r)
        if hx or hy:
            Z, c = (X, b) if hx else (Y, a)
            w = self.q_matrix(c) @ Z
            return 0.25 * float(w @ self.gt @ w)
        c = bracket(a, b)
        return 0.25 * killing(c, c)

    def sectional_P_direct(self, u, v):
        H, V = self.curvature_P(u, v, v)
        return self.p_inner(H, V, *u)

    # -------------------------------------------------------------- connection

    def nabla_P(self, u_field, v_field, h=None):
        """nabla^P_u v for P-tangent fields ``x -> (Y(x), beta(x))`` in primed form."""
        h = self.backend.field_step if h is None else h
        from .diffgeo import fd_gradient

        X, a = (np.asarray(c) for c in u_field(self.x))
        Y, b = (np.asarray(c) for c in v_field(self.x))
        dY = fd_gradient(lambda y: np.asarray(v_field(y)[0]), self.x, h, self.chart)  # [k, d]
        db = fd_gradient(lambda y: np.asarray(v_field(y)[1]), self.x, h, self.chart)  # [a, b, d]
        nt_XY = dY @ X + np.einsum("kdj,d,j->k", self.gamma_tilde, X, Y)
        npb = np.einsum("abd,d->ab", db, X) + bracket(np.einsum("d,dab->ab", X, self.A_prime), b)
        H = nt_XY + 0.5 * self.q_matrix(b) @ X + 0.5 * self.q_matrix(a) @ Y
        V = -0.5 * self.rprime_of(X, Y) + npb - 0.5 * bracket(a, b)
        return H, V

    def lie_bracket(self, u_field, v_field, h=None):
        """[u, v] for projectable P-tangent fields, from the principal-connection identities.

        Horizontal part is the Lie bracket of the base fields; vertical part is
        ``-R'(X, Y) + nabla'_X beta - nabla'_Y alpha - [alpha, beta]``.
        """
        from .diffgeo import fd_gradient

        h = self.backend.field_step if h is None else h
        X, a = (np.asarray(c) for c in u_field(self.x))
        Y, b = (np.asarray(c) for c in v_field(self.x))
        dX = fd_gradient(lambda y: np.asarray(u_field(y)[0]), self.x, h, self.chart)
        dY = fd_gradient(lambda y: np.asarray(v_field(y)[0]), self.x, h, self.chart)
        da = fd_gradient(lambda y: np.asarray(u_field(y)[1]), self.x, h, self.chart)
        db = fd_gradient(lambda y: np.asarray(v_field(y)[1]), self.x, h, self.chart)
        AX = np.einsum("d,dab->ab", X, self.A_prime)
        AY = np.einsum("d,dab->ab", Y, self.A_prime)
        npb = np.einsum("abd,d->ab", db, X) + bracket(AX, b)
        npa = np.einsum("abd,d->ab", da, Y) + bracket(AY, a)
        return dY @ X - dX @ Y, -self.rprime_of(X, Y) + npb - npa - bracket(a, b)

    # -------------------------------------------------------------- extrinsic geometry

    def _sff_matrix(self, X, a, Y, b):
        """m(M)-valued T with g_SO(Pi(X'+a*, Y'+b*), alpha^+) = B(T, alpha) / 2."""
        T = np.zeros((self.n, self.n))
        if np.any(X) and np.any(Y):
            n1 = self.nabla_xi_of(X, Y) + self.nabla_xi_of(Y, X)
            w = self.r_matrix(self.xi_of(X)) @ Y + self.r_matrix(self.xi_of(Y)) @ X
            T += n1 - self.xi_of(w)
        for Z, g_ in ((X, b), (Y, a)):
            if np.any(Z) and np.any(g_):
                T += self.part_m(bracket(self.xi_of(Z), g_)) - self.xi_of(self.r_matrix(g_) @ Z)
        return T

    @cached_property
    def second_fundamental_form(self):
        basis = self.tangent_basis
        M = self.mbasis
        N = len(basis)
        table = np.zeros((N, N, len(M)))
        for i in range(N):
            for j in range(i, N):
                T = self._sff_matrix(*basis[i], *basis[j])
                table[i, j] = table[j, i] = 0.5 * killing(T[None], M)
        return SecondFundamentalPairing(table, self.n)

    def second_fundamental_form_oracle(self):
        """Pairings from the SO(M) Levi-Civita connection, pointwise.

        With extensions satisfying ``nabla Y = 0`` and ``nabla' beta = 0`` at the
        point, ``nabla^SO_u v`` is assembled from the four SO(M) formulas and
        paired with ``alpha^+``, which is normal to P.
        """
        basis = self.tangent_basis
        M = self.mbasis
        N = len(basis)
        table = np.zeros((N, N, len(M)))
        plus_h = np.array([self.plus(alpha).horizontal for alpha in M]).reshape(len(M), self.n)
        for i, (X, a) in enumerate(basis):
            for j, (Y, b) in enumerate(basis):
                va, vb = self.xi_of(X) + a, self.xi_of(Y) + b
                H = 0.5 * self.r_matrix(vb) @ X + 0.5 * self.r_matrix(va) @ Y
                V = (
                    -0.5 * self.curvature(X, Y)
                    + self.nabla_xi_of(X, Y)
                    + bracket(self.xi_of(X), b)
                    - 0.5 * bracket(va, vb)
                )
                table[i, j] = plus_h @ (self.g @ H) + killing(V[None], M)
        return SecondFundamentalPairing(table, self.n)

    # -------------------------------------------------------------- residuals

    @cached_property
    def minimality_vector(self):
        out = np.zeros((self.n, self.n))
        for e in self.gt_basis:
            out += self.nabla_xi_of(e, e) - self.xi_of(self.r_matrix(self.xi_of(e)) @ e)
        return out

    @cached_property
    def harmonicity_vectors(self):
        h1 = np.zeros((self.n, self.n))
        h2 = np.zeros(self.n)
        for e in self.gt_basis:
            s = self.S_of(e, e)
            h1 += self.nabla_xi_of(e, e) - self.xi_of(s)
            h2 += self.r_matrix(self.xi_of(e)) @ e - s
        return h1, h2

    def minimality_residual(self):
        return _norm(killing(self.minimality_vector, self.minimality_vector))

    def harmonicity_residuals(self):
        h1, h2 = self.harmonicity_vectors
        return _norm(killing(h1, h1)), _norm(h2 @ self.g @ h2)

    # -------------------------------------------------------------- back-reference

    structure = None  # set by AlmostProductStructure.at


# ------------------------------------------------------------------ field-level helpers


def g_valued_extension(structure, beta0, x0):
    """Extend ``beta0`` (in g(M) at ``x0``) to a g(M)-valued field.

    The constant coordinate matrix is made g-skew and projected to g(M) at each
    point; at ``x0`` it returns ``beta0`` itself.
    """
    del x0

    def field(x):
        geo = structure.at(x)
        skew = 0.5 * (beta0 - geo.ginv @ beta0.T @ geo.g)
        return geo.part_g(skew)

    return field


def frame_g_extension(structure, beta0, x0):
    """Alternative extension: fixed coefficients on a g(M) basis built from a smoothly moving frame.

    The adapted frame at ``x0`` is carried to nearby points by the projectors
    there and re-orthonormalised, so the basis varies smoothly around ``x0``.
    """
    geo0 = structure.at(x0)
    frame0, m = geo0.frame.vectors, geo0.frame.split_rank
    basis0, _ = so_basis(frame0, geo0.g, m)
    coeff = np.array([killing(b, beta0) for b in basis0])

    def field(x):
        geo = structure.at(x)
        e = gram_schmidt(geo.p @ frame0[:, :m], geo.g, threshold=0.0)
        f = gram_schmidt(geo.q @ frame0[:, m:], geo.g, start=e, threshold=0.0)
        basis, _ = so_basis(np.concatenate([e, f], axis=1), geo.g, m)
        return np.einsum("A,Aab->ab", coeff, basis)

    return field


def lift_field(X, beta_field=None, n=None):
    """P-tangent field x -> (X, beta(x)) in primed form with constant components X."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    zero = np.zeros((n, n))
    if beta_field is None:
        return lambda x: (X, zero)
    return lambda x: (X, beta_field(x))


def connection_field(structure, u_field, v_field):
    """x -> nabla^P_u v at x, itself a projectable P-tangent field."""
    return lambda x: structure.at(x).nabla_P(u_field, v_field)


def curvature_P_from_connection(structure, pt, u_field, v_field, w_field):
    """R^P(u, v)w = nabla_u nabla_v w - nabla_v nabla_u w - nabla_[u,v] w.

    Built only from the connection formulas, differentiated numerically twice.
    """
    geo = structure.at(pt)
    h = structure.backend.field_step
    t1 = geo.nabla_P(u_field, connection_field(structure, v_field, w_field), h)
    t2 = geo.nabla_P(v_field, connection_field(structure, u_field, w_field), h)
    H, V = geo.lie_bracket(u_field, v_field, h)
    t3 = geo.nabla_P(lambda x: (H, V), w_field, h)
    return t1[0] - t2[0] - t3[0], t1[1] - t2[1] - t3[1]


def metric_compatibility_residual(structure, pt, u_field, v_field, w_field):
    """|u<v,w> - <nabla_u v, w> - <v, nabla_u w>| with u<v,w> by finite differences."""
    geo = structure.at(pt)
    X = np.asarray(u_field(pt.coords)[0])

    def inner(x):
        q = structure.at(x)
        return q.p_inner(*v_field(x), *w_field(x))

    from .diffgeo import fd_gradient

    d = fd_gradient(inner, pt.coords, geo.backend.field_step, pt.chart)
    lhs = float(d @ X)
    Hv, Vv = geo.nabla_P(u_field, v_field)
    Hw, Vw = geo.nabla_P(u_field, w_field)
    rhs = geo.p_inner(Hv, Vv, *w_field(pt.coords)) + geo.p_inner(*v_field(pt.coords), Hw, Vw)
    return abs(lhs - rhs)


def torsion_residual(structure, pt, u_field, v_field):
    geo = structure.at(pt)
    H1, V1 = geo.nabla_P(u_field, v_field)
    H2, V2 = geo.nabla_P(v_field, u_field)
    Hb, Vb = geo.lie_bracket(u_field, v_field)
    return float(max(np.max(np.abs(H1 - H2 - Hb)), np.max(np.abs(V1 - V2 - Vb))))
