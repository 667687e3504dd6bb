"""Target and proposal densities, plus the three worked examples.

Densities are unnormalized and vectorized: ``evaluate`` takes an array of
shape ``(n, d)`` and returns shape ``(n,)``.  Box masses follow the two
conventions used for discrepancy: ``[0, t)`` on the unit cube and
``(-inf, t]`` on the real space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

Array = np.ndarray
VecFn = Callable[[Array], Array]

UNIT_CUBE = "cube"
REAL_SPACE = "real"


class AccuracyError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def _as_2d(x) -> Array:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x


@dataclass(frozen=True)
class ProposalModel:
    """Proposal density H with per-coordinate marginals.

    For product proposals ``evaluate(z) = prod_j marginal_pdf[j](z_j)``.
    ``breakpoints`` lists, per coordinate, the u-values where the inverse
    marginal CDF is only piecewise smooth.
    """

    dimension: int
    marginal_pdf: tuple[Callable[[Array], Array], ...]
    marginal_cdf: tuple[Callable[[Array], Array], ...]
    marginal_inverse_cdf: tuple[Callable[[Array], Array], ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    breakpoints: tuple[tuple[float, ...], ...] = ()
    product_form: bool = True
    joint_pdf: VecFn | None = None
    # optional non-product chain: (j, u_j, z[:, :j]) -> z_j and its inverse
    conditional_inverse_cdf: Callable[[int, Array, Array], Array] | None = None
    conditional_cdf: Callable[[int, Array, Array], Array] | None = None
    name: str = "proposal"

    def evaluate(self, z) -> Array:
        z = _as_2d(z)
        if self.joint_pdf is not None:
            return self.joint_pdf(z)
        out = np.ones(len(z))
        for j, pdf in enumerate(self.marginal_pdf):
            out = out * pdf(z[:, j])
        return out

    def inverse_cdf(self, u) -> Array:
        """Map u in [0,1]^d to the proposal's support coordinatewise."""
        u = _as_2d(u)
        if not self.product_form and self.conditional_inverse_cdf is not None:
            z = np.empty_like(u)
            for j in range(self.dimension):
                z[:, j] = self.conditional_inverse_cdf(j, u[:, j], z[:, :j])
            return z
        return np.column_stack([f(u[:, j]) for j, f in enumerate(self.marginal_inverse_cdf)])

    def cdf(self, z) -> Array:
        z = _as_2d(z)
        if not self.product_form and self.conditional_cdf is not None:
            u = np.empty_like(z)
            for j in range(self.dimension):
                u[:, j] = self.conditional_cdf(j, z[:, j], z[:, :j])
            return u
        return np.column_stack([f(z[:, j]) for j, f in enumerate(self.marginal_cdf)])


@dataclass(frozen=True)
class DensityModel:
    """Unnormalized target density psi on the unit cube or on R^d.

    ``bound_L`` satisfies ``psi <= L`` on the cube or ``psi <= L * H`` on
    the real space.  ``box_mass`` is the closed-form mass of the anchored
    box, or ``None`` when only quadrature is available.
    """

    dimension: int
    domain: str
    evaluate: VecFn
    bound_L: float
    total_mass: float
    box_mass: VecFn | None = None
    proposal: ProposalModel | None = None
    lower: tuple[float, ...] | None = None
    name: str = "density"

    def __post_init__(self):
        if self.domain not in (UNIT_CUBE, REAL_SPACE):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == REAL_SPACE and self.proposal is None:
            raise ValueError("real-space densities need a proposal")
        if self.lower is None:
            lo = (0.0,) * self.dimension if self.domain == UNIT_CUBE else self.proposal.lower
            object.__setattr__(self, "lower", tuple(lo))

    def __call__(self, x) -> Array:
        return self.evaluate(_as_2d(x))

    def mass(self, t) -> Array:
        """Mass of the anchored box at each row of ``t``."""
        t = _as_2d(t)
        if self.box_mass is not None:
            return self.box_mass(t)
        return np.array([numeric_box_mass(self.evaluate, row, 1e-9, lower=self.lower) for row in t])


@dataclass(frozen=True)
class BoundParameters:
    """Constants of the upper discrepancy bound for pseudo-convex targets."""

    p: int
    q: int
    t: int
    L: float
    C: float

    def __post_init__(self):
        if self.p < 1 or not 0 <= self.q <= self.p:
            raise ValueError("need p >= 1 and 0 <= q <= p")

    def upper_bound(self, s: int, n: int, b: int = 2) -> float:
        return 8.0 / self.C * self.L * s * b ** (self.t / s) * (2 * self.p - self.q) * n ** (-1.0 / s)


def numeric_box_mass(psi: VecFn, t, tolerance: float = 1e-9, lower=None,
                     budget: int = 20000) -> float:
    """Adaptive-quadrature mass of ``psi`` over the box from ``lower`` to ``t``.

    ``lower`` defaults to the origin.  ``budget`` caps the subdivisions.
    Used as an oracle, never in hot loops.
    """
    t = np.asarray(t, dtype=np.float64).ravel()
    d = len(t)
    lo = np.zeros(d) if lower is None else np.asarray(lower, dtype=np.float64)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if np.any(t <= lo):
        return 0.0
    if d <= 2:
        def f(*x):
            return float(psi(np.array([x]))[0])
        est, err = integrate.nquad(f, [(lo[j], t[j]) for j in range(d)],
                                   opts={"epsabs": tolerance / 10, "epsrel": 0, "limit": min(budget, 200)})
        if err > tolerance:
            raise AccuracyError(f"quadrature error {err:.2e} above tolerance", est, err)
        return float(est)
    res = integrate.cubature(lambda x: psi(x), lo, t, atol=tolerance / 10, rtol=0,
                             max_subdivisions=budget)
    if res.status != "converged" or res.error > tolerance:
        raise AccuracyError(f"cubature did not converge (error {res.error:.2e})",
                            float(res.estimate), float(res.error))
    return float(res.estimate)


# -- example 1: non-product density on [0,1]^4 ---------------------------------

def example1_density() -> DensityModel:
    def psi(x):
        return 0.25 * np.exp(-x).sum(axis=1)

    def box(t):
        t = np.clip(t, 0.0, 1.0)
        out = np.zeros(len(t))
        for i in range(4):
            others = np.prod(np.delete(t, i, axis=1), axis=1)
            out += (1.0 - np.exp(-t[:, i])) * others
        return 0.25 * out

    return DensityModel(4, UNIT_CUBE, psi, bound_L=1.0, total_mass=1.0 - math.exp(-1.0),
                        box_mass=box, name="example1")


# -- example 2: gamma-like density on R^2 with a heavy-tailed proposal ---------

def _h_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, 0.0, np.where(x <= 1.0, 0.5, 0.5 / np.maximum(x, 1.0) ** 2))


def _h_cdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, 0.0, np.where(x <= 1.0, 0.5 * x, 1.0 - 0.5 / np.maximum(x, 1.0)))


def _h_inv(u):
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(u <= 0.5, 2.0 * u, 0.5 / (1.0 - u))


def example2_proposal() -> ProposalModel:
    return ProposalModel(
        dimension=2,
        marginal_pdf=(_h_pdf, _h_pdf),
        marginal_cdf=(_h_cdf, _h_cdf),
        marginal_inverse_cdf=(_h_inv, _h_inv),
        lower=(0.0, 0.0),
        upper=(math.inf, math.inf),
        breakpoints=((0.5,), (0.5,)),
        name="example2-proposal",
    )


def _example2_psi(x):
    x = _as_2d(x)
    pos = np.all(x > 0, axis=1)
    xc = np.where(x > 0, x, 0.0)
    return np.where(pos, 4.0 / math.pi * np.exp(-xc.sum(axis=1)) * np.sqrt(xc[:, 0] * xc[:, 1]), 0.0)


def _example2_box(t):
    t = _as_2d(t)
    g = special.gammainc(1.5, np.clip(t, 0.0, None))
    return g[:, 0] * g[:, 1]


def sup_ratio(psi: VecFn, proposal: ProposalModel, regions: Sequence[Sequence[tuple[float, float]]],
              starts_per_region: int = 8, grid: int = 64) -> float:
    """Multi-start local maximization of psi / H over rectangular pieces.

    Starts are the best nodes of a coarse scan of each piece; a purely random
    start far out in a tail sees a vanishing gradient and stalls.
    """
    def ratio(x):
        x = _as_2d(x)
        h = proposal.evaluate(x)
        return np.where(h > 0, psi(x) / np.where(h > 0, h, 1.0), 0.0)

    best = 0.0
    for box in regions:
        lo = np.array([b[0] for b in box], dtype=np.float64)
        hi = np.array([b[1] for b in box], dtype=np.float64)
        axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
        nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        vals = ratio(nodes)
        best = max(best, float(vals.max()))
        for x0 in nodes[np.argsort(vals)[::-1][:starts_per_region]]:
            res = optimize.minimize(lambda x: -float(ratio(x)[0]), x0,
                                    bounds=list(zip(lo, hi)), method="L-BFGS-B")
            best = max(best, -float(res.fun))
    return best


def example2_density_and_proposal(slack: float = 1.01) -> tuple[DensityModel, ProposalModel]:
    """Gamma-like target on the positive quadrant with the piecewise proposal.

    L is not known in closed form: it is the maximized ratio psi/H over the
    four proposal pieces, inflated by ``slack``.
    """
    proposal = example2_proposal()
    pieces = [((0, 1), (0, 1)), ((0, 1), (1, 50)), ((1, 50), (0, 1)), ((1, 50), (1, 50))]
    L = slack * sup_ratio(_example2_psi, proposal, pieces)
    target = DensityModel(2, REAL_SPACE, _example2_psi, bound_L=L, total_mass=1.0,
                          box_mass=_example2_box, proposal=proposal, name="example2")
    return target, proposal


# -- example 3: psi(x) = sin(4x) + x^2 on [0,1], split as x^2 + sin(4x) -------

@dataclass(frozen=True)
class Component:
    """One summand of a decomposed 1-D density.

    ``antiderivative`` G and its monotone-branch inverse let region masses
    and region-restricted inverse CDFs be computed in closed form; without
    them the sampler falls back to quadrature and bisection.
    """

    pdf: Callable[[Array], Array]
    antiderivative: Callable[[Array], Array] | None = None
    inverse_antiderivative: Callable[[Array], Array] | None = None
    name: str = ""

    def integral(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        if self.antiderivative is not None:
            return float(self.antiderivative(np.float64(b)) - self.antiderivative(np.float64(a)))
        return float(integrate.quad(lambda x: float(self.pdf(np.float64(x))), a, b,
                                    epsabs=1e-14, epsrel=1e-13, limit=200)[0])


@dataclass(frozen=True)
class SumDecomposition:
    """psi = sum of components on an interval, with optional known regions.

    ``regions[l]`` (when given) is the pair (S_l, L_l) of interval lists for
    level l; otherwise they are located numerically by the planner.
    """

    components: tuple[Component, ...]
    domain: tuple[float, float] = (0.0, 1.0)
    regions: tuple[tuple[tuple[tuple[float, float], ...], tuple[tuple[float, float], ...]], ...] | None = None
    name: str = "sum"

    def psi(self, x) -> Array:
        x = np.asarray(x, dtype=np.float64)
        return sum(c.pdf(x) for c in self.components)

    def residual(self, level: int) -> Callable[[Array], Array]:
        """psi_{k-l+1} = sum of components l.. k (0-based ``level``)."""
        comps = self.components[level:]
        return lambda x: sum(c.pdf(np.asarray(x, dtype=np.float64)) for c in comps)

    def total_mass(self) -> float:
        a, b = self.domain
        return sum(c.integral(a, b) for c in self.components)

    def cdf(self, x) -> Array:
        """Normalized CDF of psi on the domain."""
        a, b = self.domain
        x = np.clip(np.asarray(x, dtype=np.float64), a, b)
        total = self.total_mass()
        if all(c.antiderivative is not None for c in self.components):
            return sum(c.antiderivative(x) - c.antiderivative(np.float64(a)) for c in self.components) / total
        return np.vectorize(lambda v: sum(c.integral(a, v) for c in self.components))(x) / total

    def as_density(self) -> DensityModel:
        a, b = self.domain
        if (a, b) != (0.0, 1.0):
            raise ValueError("only [0,1] decompositions map to a unit-cube density")
        grid = np.linspace(a, b, 20001)
        L = float(np.max(self.psi(grid))) * 1.01
        total = self.total_mass()
        return DensityModel(1, UNIT_CUBE, lambda x: self.psi(x[:, 0]), bound_L=L, total_mass=total,
                            box_mass=lambda t: self.cdf(t[:, 0]) * total, name=self.name)


def example3_decomposition() -> SumDecomposition:
    """sin(4x) + x^2 on [0,1] with H_1 = x^2 and H_2 = sin(4x).

    S = (pi/4, 1] is where psi < x^2; L = [0, pi/4].
    """
    quad_part = Component(
        pdf=lambda x: x ** 2,
        antiderivative=lambda x: x ** 3 / 3.0,
        inverse_antiderivative=lambda y: np.cbrt(3.0 * y),
        name="x^2",
    )
    sin_part = Component(
        pdf=lambda x: np.sin(4.0 * x),
        antiderivative=lambda x: (1.0 - np.cos(4.0 * x)) / 4.0,
        # branch valid on [0, pi/4], where sin(4x) >= 0
        inverse_antiderivative=lambda y: np.arccos(np.clip(1.0 - 4.0 * y, -1.0, 1.0)) / 4.0,
        name="sin(4x)",
    )
    q = math.pi / 4
    regions = (
        (((q, 1.0),), ((0.0, q),)),
        ((), ((0.0, q),)),
    )
    return SumDecomposition((quad_part, sin_part), (0.0, 1.0), regions, name="example3")


def example3_density() -> DensityModel:
    return example3_decomposition().as_density()
