"""Inverse Rosenblatt map from the unit cube to the region under a proposal.

``forward`` sends u in [0,1]^s to z with z_j = F_j^{-1}(u_j) for the first
s-1 coordinates and z_s = u_s * H(z_1..z_{s-1}).  For product proposals the
map has unit Jacobian determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import ProposalModel, _as_2d


class UnboundedImageError(ValueError):
    """u_j = 1 on a coordinate whose support is unbounded above."""


class TransformDomainError(ValueError):
    pass


class BreakpointError(ValueError):
    """A finite-difference stencil straddles a piecewise breakpoint."""


@dataclass(frozen=True)
class RosenblattTransform:
    proposal: ProposalModel

    def __post_init__(self):
        p = self.proposal
        if not p.product_form and p.conditional_inverse_cdf is None:
            raise ValueError("non-product proposals need a conditional inverse CDF chain")

    @property
    def s(self) -> int:
        return self.proposal.dimension + 1

    def forward(self, u) -> np.ndarray:
        u = _as_2d(u)
        if u.shape[1] != self.s:
            raise ValueError(f"expected points of dimension {self.s}, got {u.shape[1]}")
        if np.any((u < 0) | (u > 1)):
            raise TransformDomainError("u must lie in [0,1]^s")
        d = self.proposal.dimension
        for j in range(d):
            if np.isinf(self.proposal.upper[j]) and np.any(u[:, j] == 1.0):
                raise UnboundedImageError(f"u_{j + 1} = 1 maps to +inf")
        z = np.empty_like(u)
        z[:, :d] = self.proposal.inverse_cdf(u[:, :d])
        z[:, d] = u[:, d] * self.proposal.evaluate(z[:, :d])
        return z

    def inverse(self, z) -> np.ndarray:
        z = _as_2d(z)
        d = self.proposal.dimension
        lo = np.asarray(self.proposal.lower)
        hi = np.asarray(self.proposal.upper)
        if np.any(z[:, :d] < lo) or np.any(z[:, :d] > hi):
            raise TransformDomainError("point outside the proposal support")
        h = self.proposal.evaluate(z[:, :d])
        if np.any(z[:, d] < 0) or np.any(z[:, d] > h):
            raise TransformDomainError("last coordinate outside [0, H(z)]")
        u = np.empty_like(z)
        u[:, :d] = self.proposal.cdf(z[:, :d])
        u[:, d] = np.where(h > 0, z[:, d] / np.where(h > 0, h, 1.0), 0.0)
        return u

    def jacobian_determinant(self, u, h: float = 1e-6) -> float:
        """Central-difference estimate of |det DT(u)| at one interior point."""
        u = np.asarray(u, dtype=np.float64).ravel()
        if np.any(u - h <= 0) or np.any(u + h >= 1):
            raise TransformDomainError("stencil leaves the open unit cube")
        for j, bps in enumerate(self.proposal.breakpoints):
            for bp in bps:
                if abs(u[j] - bp) <= h:
                    raise BreakpointError(f"coordinate {j + 1} within {h} of breakpoint {bp}")
        stencil = np.repeat(u[None, :], 2 * self.s, axis=0)
        for k in range(self.s):
            stencil[2 * k, k] += h
            stencil[2 * k + 1, k] -= h
        img = self.forward(stencil)
        jac = (img[0::2] - img[1::2]).T / (2 * h)
        return float(abs(np.linalg.det(jac)))


def forward(proposal: ProposalModel, u) -> np.ndarray:
    return RosenblattTransform(proposal).forward(u)


def inverse(proposal: ProposalModel, z) -> np.ndarray:
    return RosenblattTransform(proposal).inverse(z)


def jacobian_determinant_check(proposal: ProposalModel, u, h: float = 1e-6) -> float:
    return RosenblattTransform(proposal).jacobian_determinant(u, h)


def uniform_proposal(dimension: int) -> ProposalModel:
    """H = 1 on [0,1]^d; its transform is the identity."""
    one = lambda x: np.where((x >= 0) & (x <= 1), 1.0, 0.0)
    ident = lambda x: np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return ProposalModel(dimension, (one,) * dimension, (ident,) * dimension, (ident,) * dimension,
                         lower=(0.0,) * dimension, upper=(1.0,) * dimension, name="uniform")


def exponential_proposal() -> ProposalModel:
    """Standard exponential on [0, inf)."""
    return ProposalModel(
        1,
        (lambda x: np.where(x >= 0, np.exp(-np.clip(x, 0, None)), 0.0),),
        (lambda x: np.where(x >= 0, -np.expm1(-np.clip(x, 0, None)), 0.0),),
        (lambda u: -np.log1p(-np.asarray(u, dtype=np.float64)),),
        lower=(0.0,), upper=(np.inf,), name="exponential",
    )
