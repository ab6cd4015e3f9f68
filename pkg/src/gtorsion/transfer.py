"""Transfer tensor L, the metric g~ = g(., L.) and the difference tensor S = nabla~ - nabla."""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import _kernels
from .diffgeo import ChartPoint, covariant_correction, gram_schmidt
from .errors import IllConditionedL, NotInM
from .gstructure import StructurePoint, killing

L_COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class TransferTensor:
    L: np.ndarray
    base_pt: Optional[ChartPoint] = None


@dataclass(frozen=True, eq=False)
class TildeMetric:
    gt: np.ndarray
    base_pt: Optional[ChartPoint] = None


@dataclass(frozen=True, eq=False)
class DifferenceTensor:
    S: np.ndarray  # S[k, i, j]
    base_pt: Optional[ChartPoint] = None

    def __call__(self, X, Y):
        return np.einsum("kij,i,j->k", self.S, X, Y)

    def symmetry_residual(self):
        return float(np.max(np.abs(self.S - self.S.transpose(0, 2, 1))))


class TransferPoint(StructurePoint):
    @cached_property
    def Bxx(self):
        """B(xi_i, xi_j)."""
        return killing(self.xi[:, None], self.xi[None, :])

    @cached_property
    def gt(self):
        gt = self.g + self.Bxx
        return 0.5 * (gt + gt.T)

    @cached_property
    def L(self):
        L = self.ginv @ self.gt
        cond = np.linalg.cond(L)
        if not np.isfinite(cond) or cond > L_COND_LIMIT:
            raise IllConditionedL(f"transfer tensor condition number {cond:.3g} exceeds {L_COND_LIMIT:g}", self.x)
        return L

    @cached_property
    def Linv(self):
        return np.linalg.inv(self.L)

    @cached_property
    def gtinv(self):
        return np.linalg.inv(self.gt)

    def check_m(self, alpha):
        a_g = self.part_g(alpha)
        if np.max(np.abs(a_g)) > self.tol_struct * max(1.0, float(np.max(np.abs(alpha)))):
            raise NotInM(f"g(M)-part of size {np.max(np.abs(a_g)):.3g}", self.x)

    def xi_dot(self, alpha, check=True):
        """xi.alpha: the g-dual of the covector X -> -B(alpha, xi_X)."""
        if check:
            self.check_m(alpha)
        return self.ginv @ np.einsum("ab,iba->i", alpha, self.xi)

    def xi_dot_frame(self, alpha):
        """Frame-sum form ``-sum_i B(xi_{e_i}, alpha) e_i`` over the adapted frame."""
        E = self.frame.vectors
        xi_e = np.einsum("ik,iab->kab", E, self.xi)  # xi_{e_k}
        return -E @ killing(xi_e, alpha)

    @cached_property
    def rhs_S(self):
        """Right side of 2 g~(S(X,Y), Z) as [i, j, z]."""
        nx, xi = self.nabla_xi, self.xi
        sym = nx + nx.transpose(1, 0, 2, 3)
        anti = nx - nx.transpose(1, 0, 2, 3)
        # B(A, C) = -tr(AC)
        return (
            -np.einsum("ijab,zba->ijz", sym, xi)
            - np.einsum("izab,jba->ijz", anti, xi)
            - np.einsum("jzab,iba->ijz", anti, xi)
        )

    @cached_property
    def S(self):
        S = 0.5 * np.einsum("kz,ijz->kij", self.gtinv, self.rhs_S)
        return 0.5 * (S + S.transpose(0, 2, 1))

    @cached_property
    def S_raw_asymmetry(self):
        S = 0.5 * np.einsum("kz,ijz->kij", self.gtinv, self.rhs_S)
        return float(np.max(np.abs(S - S.transpose(0, 2, 1))))

    @cached_property
    def gamma_tilde(self):
        return self.gamma + self.S

    @cached_property
    def gt_frame(self):
        """g~-orthonormal frame by Gram-Schmidt over the adapted g-frame (E first)."""
        return gram_schmidt(self.frame.vectors, self.gt)

    def S_of(self, X, Y):
        return np.einsum("kij,i,j->k", self.S, X, Y)


def transfer(structure, pt):
    geo = structure.at(pt)
    return TransferTensor(geo.L, geo.pt), TildeMetric(geo.gt, geo.pt)


def nabla_L(structure, pt, X, Y, Z):
    """Both sides of ``g((nabla_X L)Y, Z) = B((nabla_X xi)_Y, xi_Z) + B((nabla_X xi)_Z, xi_Y)``.

    The left side differentiates the L field numerically; the right side uses
    the pointwise covariant derivative of xi. Returns (lhs, rhs, |lhs - rhs|).
    """
    geo = structure.at(pt)
    nab = nabla_L_tensor(structure, pt)
    lhs = float(Z @ geo.g @ np.einsum("i,iab,b->a", X, nab, Y))
    nx = geo.nabla_xi
    rhs = float(
        killing(np.einsum("i,j,ijab->ab", X, Y, nx), geo.xi_of(Z))
        + killing(np.einsum("i,j,ijab->ab", X, Z, nx), geo.xi_of(Y))
    )
    return lhs, rhs, abs(lhs - rhs)


def nabla_L_tensor(structure, pt):
    """(nabla_{d_i} L) as [i, a, b] from finite differences of L."""
    geo = structure.at(pt)
    dL = structure.field_gradient(lambda q: q.L, pt)
    return np.moveaxis(dL, -1, 0) + covariant_correction(geo.L, geo.gamma, 1)


def difference_tensor(structure, pt):
    geo = structure.at(pt)
    return DifferenceTensor(geo.S, geo.pt)


def difference_tensor_oracle(structure, pt):
    """Levi-Civita connection of g~ computed directly from its coefficients, minus Gamma."""
    geo = structure.at(pt)
    dgt = structure.field_gradient(lambda q: q.gt, pt)
    dgt = 0.5 * (dgt + dgt.transpose(1, 0, 2))
    return DifferenceTensor(_kernels.christoffel(geo.gtinv, dgt) - geo.gamma, geo.pt)
