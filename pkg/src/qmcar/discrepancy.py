"""Star discrepancy of samples with respect to a target density.

Three estimators:

* exact one-dimensional star discrepancy from order statistics,
* a dyadic delta-cover in any (small) dimension, which brackets the true
  value between ``grid_max`` and ``grid_max + delta``,
* a lower estimate of the isotropic discrepancy over random convex sets.

Counting conventions differ by domain: on the unit cube test boxes are
half-open ``[0, t)``; on the real space they are closed ``(-inf, t]``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .densities import REAL_SPACE, UNIT_CUBE, DensityModel


class GridBudgetError(ValueError):
    pass


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class DeltaCover:
    """Anchor grid with ``2**grid_m + 1`` anchors per coordinate."""

    grid_m: int
    anchors: tuple[np.ndarray, ...]
    closed: bool

    @property
    def size(self) -> int:
        return int(np.prod([len(a) for a in self.anchors]))

    @classmethod
    def for_density(cls, density: DensityModel, grid_m: int) -> DeltaCover:
        k = 1 << grid_m
        u = np.arange(k + 1) / k
        if density.domain == UNIT_CUBE:
            return cls(grid_m, (u,) * density.dimension, closed=False)
        prop = density.proposal
        anchors = []
        for j in range(density.dimension):
            a = np.empty(k + 1)
            a[:-1] = prop.marginal_inverse_cdf[j](u[:-1])
            a[-1] = prop.upper[j]
            anchors.append(a)
        return cls(grid_m, tuple(anchors), closed=True)


@dataclass(frozen=True)
class DiscrepancyReport:
    grid_max: float
    delta: float
    N: int
    grid_m: int
    sampler_tag: str = ""
    delta_exact: bool = True

    @property
    def lower_bound(self) -> float:
        return self.grid_max

    @property
    def upper_bound(self) -> float:
        return min(1.0, self.grid_max + self.delta)


def star_discrepancy_1d_exact(points, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_t |#{x_n < t}/N - F(t)| for a continuous CDF F.

    With sorted points x_(0) <= ... <= x_(N-1) the supremum is
    max_i max(F(x_(i)) - i/N, (i+1)/N - F(x_(i))).
    """
    x = np.sort(np.asarray(points, dtype=np.float64).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("empty point set")
    F = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(n)
    return float(max(np.max(F - i / n), np.max((i + 1) / n - F)))


def _anchor_counts(points: np.ndarray, cover: DeltaCover) -> np.ndarray:
    """Number of points inside each anchored box of the cover.

    Each point is binned by the first anchor index whose box contains it in
    that coordinate; a cumulative sum along every axis then counts, for each
    anchor vector, the points whose bins are all at or below it.
    """
    side = "left" if cover.closed else "right"
    shape = tuple(len(a) for a in cover.anchors)
    idx = np.zeros(len(points), dtype=np.int64)
    valid = np.ones(len(points), dtype=bool)
    for j, a in enumerate(cover.anchors):
        bj = np.searchsorted(a, points[:, j], side=side)
        valid &= bj < len(a)
        idx = idx * len(a) + np.minimum(bj, len(a) - 1)
    hist = np.bincount(idx[valid], minlength=int(np.prod(shape))).reshape(shape)
    for ax in range(len(shape)):
        hist = np.cumsum(hist, axis=ax)
    return hist


@functools.lru_cache(maxsize=16)
def _normalized_masses(density: DensityModel, grid_m: int) -> np.ndarray:
    cover = DeltaCover.for_density(density, grid_m)
    out = _anchor_masses(density, cover) / density.total_mass
    out.setflags(write=False)
    return out


def _anchor_masses(density: DensityModel, cover: DeltaCover) -> np.ndarray:
    grids = np.meshgrid(*cover.anchors, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    return np.asarray(density.mass(flat), dtype=np.float64).reshape(grids[0].shape)


def star_discrepancy_delta_cover(points, density: DensityModel, grid_m: int,
                                 budget: int = 1 << 24, sampler_tag: str = "") -> DiscrepancyReport:
    """Delta-cover estimate of the star discrepancy w.r.t. ``density``.

    ``grid_max`` is the largest deviation over the anchor grid; ``delta`` is
    the largest normalized mass between diagonally adjacent anchors, which
    is exact when the density has a closed-form box mass.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != density.dimension:
        raise ValueError("point dimension does not match density")
    n = len(pts)
    if n == 0:
        raise ValueError("empty point set")
    size = ((1 << grid_m) + 1) ** density.dimension
    if size > budget:
        raise GridBudgetError(f"grid of {size} anchors exceeds budget {budget}; use a smaller grid_m")
    cover = DeltaCover.for_density(density, grid_m)
    counts = _anchor_counts(pts, cover)
    masses = _normalized_masses(density, grid_m)
    grid_max = float(np.max(np.abs(counts / n - masses)))
    if density.box_mass is not None:
        lo = masses[(slice(0, -1),) * density.dimension]
        hi = masses[(slice(1, None),) * density.dimension]
        delta = float(np.max(hi - lo))
        exact = True
    elif density.domain == UNIT_CUBE:
        delta = density.dimension * 2.0 ** -grid_m * density.bound_L / density.total_mass
        exact = False
    else:
        raise ValueError("real-space delta needs a closed-form box mass")
    return DiscrepancyReport(grid_max, delta, n, grid_m, sampler_tag, exact)


# -- isotropic discrepancy ---------------------------------------------------------

def _cube_vertices(s: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=s)))


def halfspace_volume(normal: np.ndarray, offset: float) -> float:
    """Volume of {x in [0,1]^s : normal . x <= offset} via its vertex hull."""
    s = len(normal)
    if s == 1:
        c = float(normal[0])
        if c == 0:
            return 1.0 if offset >= 0 else 0.0
        x = min(1.0, max(0.0, offset / c))
        return x if c > 0 else 1.0 - x
    V = _cube_vertices(s)
    vals = V @ normal - offset
    inside = V[vals <= 0]
    if len(inside) == 0:
        return 0.0
    if len(inside) == len(V):
        return 1.0
    cuts = []
    for i, j in itertools.combinations(range(len(V)), 2):
        if np.sum(V[i] != V[j]) != 1:
            continue
        if (vals[i] <= 0) != (vals[j] <= 0):
            lam = vals[i] / (vals[i] - vals[j])
            cuts.append(V[i] + lam * (V[j] - V[i]))
    hull_pts = np.vstack([inside] + ([np.array(cuts)] if cuts else []))
    try:
        return float(ConvexHull(hull_pts).volume)
    except QhullError:  # flat sliver, no full-dimensional hull
        return 0.0


def _quadrant_area(rho: np.ndarray, w: float, h: float) -> np.ndarray:
    """Area of {x, y >= 0, x^2 + y^2 <= rho^2} inside [0, w] x [0, h].

    Below x* = sqrt(rho^2 - h^2) the arc lies above the rectangle, so the
    column height is h; beyond it the height is the arc sqrt(rho^2 - x^2).
    """
    rho = np.asarray(rho, dtype=np.float64)
    safe = np.where(rho > 0, rho, 1.0)

    def prim(x):
        x = np.minimum(x, safe)
        return 0.5 * (x * np.sqrt(np.maximum(safe * safe - x * x, 0.0))
                      + safe * safe * np.arcsin(np.clip(x / safe, -1.0, 1.0)))

    xstar = np.minimum(np.sqrt(np.maximum(rho * rho - h * h, 0.0)), w)
    xend = np.minimum(rho, w)
    out = h * xstar + prim(xend) - prim(xstar)
    return np.where(rho > 0, out, 0.0)


def disk_square_area(cx: float, cy: float, rho) -> np.ndarray:
    """Exact area of disks of radii ``rho`` centred at (cx, cy) inside [0,1]^2."""
    total = 0.0
    for w in (cx, 1.0 - cx):
        for h in (cy, 1.0 - cy):
            if w > 0 and h > 0:
                total = total + _quadrant_area(rho, w, h)
    return np.asarray(total, dtype=np.float64)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def ball_cube_volume(center, radius: float) -> float:
    """Volume of a ball intersected with the unit cube (dimension 1 to 3).

    Exact when the ball lies inside the cube and in one or two dimensions.
    In three dimensions the exact disk-square area of each slice is
    integrated with 64-point Gauss-Legendre rules on the pieces between the
    slice radii where the disk starts touching an edge or corner.
    """
    c = np.asarray(center, dtype=np.float64)
    s = len(c)
    r = float(radius)
    if r <= 0:
        return 0.0
    if np.all(c - r >= 0) and np.all(c + r <= 1):
        return math.pi ** (s / 2) / math.gamma(s / 2 + 1) * r ** s
    if s == 1:
        return max(0.0, min(1.0, c[0] + r) - max(0.0, c[0] - r))
    if s == 2:
        return float(disk_square_area(c[0], c[1], r))
    if s != 3:
        raise ValueError("ball volumes are implemented for dimension <= 3")
    a, b = max(0.0, c[0] - r), min(1.0, c[0] + r)
    if b <= a:
        return 0.0
    rest = c[1:]
    rho_kinks = [min(v, 1 - v) for v in rest] + [max(v, 1 - v) for v in rest]
    rho_kinks += [math.hypot(ex - rest[0], ey - rest[1]) for ex in (0, 1) for ey in (0, 1)]
    cuts = {a, b, c[0]}
    for q in rho_kinks:
        if q < r:
            w = math.sqrt(r * r - q * q)
            cuts.update((c[0] - w, c[0] + w))
    cuts = sorted(x for x in cuts if a <= x <= b)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        x = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
        rho = np.sqrt(np.maximum(r * r - (x - c[0]) ** 2, 0.0))
        total += 0.5 * (hi - lo) * float(np.dot(_GL_WEIGHTS, disk_square_area(rest[0], rest[1], rho)))
    return total


def _count(inside: np.ndarray) -> int:
    return int(np.count_nonzero(inside))


def isotropic_lower_estimate(points, trial_count: int, seed: int = 0,
                             families: Sequence[str] = ("halfspace", "ball", "simplex"),
                             anchor_grid: int | None = None) -> float:
    """Lower estimate of the isotropic discrepancy of a point set in [0,1)^s.

    Takes the maximum of |count/N - volume| over ``trial_count`` random
    convex test sets (half-spaces, balls and simplices, each clipped to the
    cube).  With ``anchor_grid`` every anchored box ``[0, a 2^-g)`` is added
    to the family as well.  Any finite family gives a lower bound.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, s = pts.shape
    if trial_count < 1:
        raise ValueError("trial_count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    best = 0.0
    for trial in range(trial_count):
        kind = families[trial % len(families)]
        if kind == "halfspace":
            normal = rng.standard_normal(s)
            normal /= np.linalg.norm(normal)
            proj = pts @ normal
            V = _cube_vertices(s) @ normal
            offset = rng.uniform(V.min(), V.max())
            vol = halfspace_volume(normal, offset)
            frac = _count(proj <= offset) / n
        elif kind == "ball":
            center = rng.random(s)
            radius = rng.uniform(0.02, 0.75)
            vol = ball_cube_volume(center, radius)
            frac = _count(np.sum((pts - center) ** 2, axis=1) <= radius * radius) / n
        elif kind == "simplex":
            verts = rng.random((s + 1, s))
            edges = (verts[1:] - verts[0]).T
            det = np.linalg.det(edges)
            if abs(det) < 1e-12:
                continue
            vol = abs(det) / math.factorial(s)
            bary = np.linalg.solve(edges, (pts - verts[0]).T)
            inside = np.all(bary >= 0, axis=0) & (bary.sum(axis=0) <= 1)
            frac = _count(inside) / n
        elif kind == "box":
            corner = rng.random(s)
            vol = float(np.prod(corner))
            frac = _count(np.all(pts < corner, axis=1)) / n
        else:
            raise ValueError(f"unknown family {kind!r}")
        best = max(best, abs(frac - vol))
    if anchor_grid is not None:
        k = 1 << anchor_grid
        for a in itertools.product(range(k + 1), repeat=s):
            t = np.asarray(a) / k
            frac = _count(np.all(pts < t, axis=1)) / n
            best = max(best, abs(frac - float(np.prod(t))))
    return best


def isotropic_net_bound(s: int, m: int, t: int, b: int = 2) -> float:
    """2 s b^{t/s} M^{-1/s} for a (t, m, s)-net with M = b^m points."""
    return 2.0 * s * b ** (t / s) * float(b ** m) ** (-1.0 / s)


# -- rates -----------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


def fit_rate(pairs: Iterable[tuple[float, float]]) -> RateFit:
    """Least-squares line through (log N, log D)."""
    arr = np.asarray(list(pairs), dtype=np.float64)
    if arr.ndim != 2 or len(arr) < 3:
        raise ValueError("need at least three (N, D) pairs")
    if np.any(arr <= 0):
        raise ValueError("N and D must be positive")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    if np.ptp(x) == 0:
        raise DegenerateFitError("all N are equal")
    xm = x - x.mean()
    slope = float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    r2 = 1.0 - float(np.dot(resid, resid)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(slope, intercept, r2)
