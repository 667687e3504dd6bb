"""Acceptance-rejection samplers driven by Sobol nets or a seeded PRNG.

All samplers return every accepted point; ``requested_N`` is a target,
the accepted count is ``SampleSet.N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .densities import REAL_SPACE, UNIT_CUBE, DensityModel, ProposalModel, SumDecomposition
from .nets import BITS, DigitalNet, DirectionNumberTable, default_table, to_float
from .transforms import RosenblattTransform

RAR = "RAR"
DAR_CUBE = "DAR_CUBE"
DAR_REAL = "DAR_REAL"
DRAR = "DRAR"
DRAR_EMBED = "DRAR_EMBED"


class SamplerError(RuntimeError):
    pass


class RunawayError(SamplerError):
    pass


class BoundViolationError(SamplerError):
    """psi > L * H observed at a drawn point."""


class DegenerateDensityError(SamplerError):
    pass


class DecompositionError(SamplerError):
    pass


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    driver_count: int
    requested_N: int
    sampler_tag: str
    domain: str = UNIT_CUBE
    m: int | None = None
    parts: tuple[tuple[str, int], ...] = ()

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def M(self) -> int:
        return self.driver_count


# -- drivers -------------------------------------------------------------------

class SobolDriver:
    """Prefixes of the Sobol (t,s)-sequence; each call restarts at index 0."""

    def __init__(self, table: DirectionNumberTable | None = None):
        self.table = default_table() if table is None else table
        self._nets: dict[int, DigitalNet] = {}

    def prefix(self, count: int, s: int, start: int = 0, stream: int = 0) -> np.ndarray:
        net = self._nets.get(s)
        if net is None:
            net = self._nets[s] = DigitalNet.sobol(s, self.table)
        return to_float(net.integer_points(start, count))


class RandomDriver:
    """Seeded PCG64 uniforms with the same prefix interface as SobolDriver.

    ``stream`` selects an independent child stream, so separate regions of a
    reduced sampler do not share random numbers.  Rows are generated in
    fixed blocks, so any prefix is consistent with longer requests.
    """

    block = 4096

    def __init__(self, seed: int):
        self.seed = seed
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def prefix(self, count: int, s: int, start: int = 0, stream: int = 0) -> np.ndarray:
        key = (s, stream)
        have = self._cache.get(key)
        if have is None or len(have) < start + count:
            ss = np.random.SeedSequence([self.seed, stream, s])
            rng = np.random.Generator(np.random.PCG64(ss))
            n = -(-(start + count) // self.block) * self.block
            have = rng.random((n, s))
            self._cache[key] = have
        return have[start:start + count]


# -- random acceptance-rejection ----------------------------------------------

def rar(target: DensityModel, requested_N: int, seed: int | np.random.Generator = 0,
        proposal: ProposalModel | None = None, bound: float | None = None,
        batch: int = 4096, max_ratio: float = 1e6) -> SampleSet:
    """Classical acceptance-rejection with a seeded PCG64 generator.

    Draws X ~ H and u ~ U[0,1] until exactly ``requested_N`` points with
    ``u <= psi(X) / (L H(X))`` have been accepted.  On the cube the proposal
    defaults to the uniform density.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.Generator(np.random.PCG64(seed))
    L = target.bound_L if bound is None else bound
    d = target.dimension
    if target.domain == REAL_SPACE and proposal is None:
        proposal = target.proposal
    accepted = []
    n_acc = 0
    draws = 0
    while n_acc < requested_N:
        if draws > max_ratio * max(requested_N, 1):
            raise RunawayError(f"{draws} draws for {n_acc} acceptances")
        block = rng.random((batch, d + 1))
        if proposal is None:
            x = block[:, :d]
            h = np.ones(batch)
        else:
            x = proposal.inverse_cdf(block[:, :d])
            h = proposal.evaluate(x)
        psi = target.evaluate(x)
        if np.any(psi > L * h * (1 + 1e-12)):
            raise BoundViolationError("target exceeds L * H at a drawn point")
        ok = block[:, d] * L * h <= psi
        idx = np.flatnonzero(ok)
        need = requested_N - n_acc
        if len(idx) >= need:
            idx = idx[:need]
            draws += int(idx[-1]) + 1 if need else 0
            accepted.append(x[idx])
            n_acc += need
            break
        accepted.append(x[idx])
        n_acc += len(idx)
        draws += batch
    pts = np.concatenate(accepted) if accepted else np.empty((0, d))
    return SampleSet(pts, draws, requested_N, RAR, target.domain)


# -- deterministic acceptance-rejection ----------------------------------------

def _resolution(requested_N: int, ratio: float) -> int:
    need = math.ceil(requested_N / ratio)
    return max(0, (need - 1).bit_length())


def acceptance_mask_cube(target: DensityModel, x: np.ndarray) -> np.ndarray:
    """Membership of net points in A = {psi(x_1..x_{s-1}) >= L x_s}.

    Points where psi vanishes are excluded; they can only satisfy the
    inequality on the null set x_s = 0.
    """
    psi = target.evaluate(x[:, :-1])
    return (psi > 0) & (psi >= target.bound_L * x[:, -1])


def dar_cube(target: DensityModel, requested_N: int, table: DirectionNumberTable | None = None,
             m: int | None = None, growth: float = 0.9) -> SampleSet:
    """Deterministic acceptance-rejection on [0,1]^{s-1} with a Sobol net.

    Without an explicit ``m`` the net size is the smallest power of two with
    ``2^m >= ceil(N L / C)``; if fewer than ``growth * N`` points land under
    the graph, m is incremented and the sampler reruns.
    """
    if target.domain != UNIT_CUBE:
        raise ValueError("dar_cube needs a unit-cube target")
    if not target.total_mass > 0:
        raise DegenerateDensityError("target has zero total mass")
    s = target.dimension + 1
    net = DigitalNet.sobol(s, default_table() if table is None else table)
    auto = m is None
    if auto:
        m = _resolution(requested_N, target.total_mass / target.bound_L)
    while True:
        x = to_float(net.integer_points(0, 1 << m))
        keep = acceptance_mask_cube(target, x)
        if not auto or keep.sum() >= growth * requested_N or m >= BITS:
            break
        m += 1
    return SampleSet(x[keep, :-1], 1 << m, requested_N, DAR_CUBE, UNIT_CUBE, m)


def acceptance_mask_real(target: DensityModel, z: np.ndarray) -> np.ndarray:
    """Membership of transformed points in the region under psi / L.

    The last coordinate already carries the proposal height (z_s = u_s H),
    so the test psi >= L z_s is the same as u_s <= psi / (L H).
    """
    psi = target.evaluate(z[:, :-1])
    return (psi > 0) & (psi >= target.bound_L * z[:, -1])


def dar_real(target: DensityModel, requested_N: int, table: DirectionNumberTable | None = None,
             m: int | None = None, proposal: ProposalModel | None = None, growth: float = 0.9) -> SampleSet:
    """Deterministic acceptance-rejection on R^{s-1} through the Rosenblatt map.

    The net size uses ``M >= ceil(N L int H / int psi)`` with both integrals
    over the whole space; proposals are normalized so ``int H = 1``.
    """
    proposal = target.proposal if proposal is None else proposal
    if proposal is None:
        raise ValueError("dar_real needs a proposal")
    if not target.total_mass > 0:
        raise DegenerateDensityError("target has zero total mass")
    T = RosenblattTransform(proposal)
    s = target.dimension + 1
    net = DigitalNet.sobol(s, default_table() if table is None else table)
    auto = m is None
    if auto:
        m = _resolution(requested_N, target.total_mass / target.bound_L)
    while True:
        ints = net.integer_points(0, 1 << m)
        # dyadic numerators are < 2**BITS, so no coordinate equals 1
        assert not np.any(ints[:, :-1] >= np.uint64(1 << BITS))
        z = T.forward(to_float(ints))
        keep = acceptance_mask_real(target, z)
        if not auto or keep.sum() >= growth * requested_N or m >= BITS:
            break
        m += 1
    return SampleSet(z[keep, :-1], 1 << m, requested_N, DAR_REAL, REAL_SPACE, m)


# -- reduced acceptance-rejection on an interval --------------------------------

Intervals = tuple[tuple[float, float], ...]


def _measure(intervals: Intervals) -> float:
    return sum(b - a for a, b in intervals)


def find_regions(residual: Callable[[np.ndarray], np.ndarray], domain: Intervals,
                 grid: int = 4097) -> tuple[Intervals, Intervals]:
    """Split ``domain`` into S = {residual < 0} and L = {residual >= 0}.

    Sign changes are located on a grid and refined by Brent's method.
    """
    from scipy.optimize import brentq

    S, Lr = [], []
    for a, b in domain:
        xs = np.linspace(a, b, grid)
        vals = residual(xs)
        cuts = [a]
        for i in range(grid - 1):
            if (vals[i] < 0) != (vals[i + 1] < 0):
                if vals[i] == 0 or vals[i + 1] == 0:
                    cuts.append(xs[i] if vals[i] == 0 else xs[i + 1])
                else:
                    cuts.append(brentq(lambda v: float(residual(np.float64(v))), xs[i], xs[i + 1], xtol=1e-15))
        cuts.append(b)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi <= lo:
                continue
            mid = residual(np.float64(0.5 * (lo + hi)))
            (S if mid < 0 else Lr).append((float(lo), float(hi)))
    return tuple(S), tuple(Lr)


class RegionInverse:
    """Inverse CDF of a non-negative component restricted to a union of intervals."""

    def __init__(self, component, intervals: Intervals):
        self.component = component
        self.intervals = tuple(intervals)
        self.masses = np.array([component.integral(a, b) for a, b in self.intervals])
        if np.any(self.masses < -1e-14):
            raise DecompositionError(f"component {component.name!r} has negative mass on {self.intervals}")
        self.masses = np.clip(self.masses, 0.0, None)
        self.total = float(self.masses.sum())
        self.cum = np.concatenate([[0.0], np.cumsum(self.masses)])

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.total <= 0:
            raise DecompositionError("region carries no mass")
        target = u * self.total
        k = np.clip(np.searchsorted(self.cum, target, side="right") - 1, 0, len(self.intervals) - 1)
        out = np.empty_like(u)
        for i, (a, b) in enumerate(self.intervals):
            sel = k == i
            if not sel.any():
                continue
            out[sel] = self._invert(a, b, target[sel] - self.cum[i])
        return out

    def _invert(self, a: float, b: float, mass: np.ndarray) -> np.ndarray:
        c = self.component
        if c.antiderivative is not None and c.inverse_antiderivative is not None:
            x = c.inverse_antiderivative(c.antiderivative(np.float64(a)) + mass)
            x = np.asarray(x, dtype=np.float64)
            if np.all((x >= a - 1e-12) & (x <= b + 1e-12)):
                return np.clip(x, a, b)
        return self._bisect(a, b, mass)

    def _bisect(self, a: float, b: float, mass: np.ndarray) -> np.ndarray:
        c = self.component
        if c.antiderivative is not None:
            G0 = c.antiderivative(np.float64(a))
            G = lambda x: c.antiderivative(x) - G0
        else:
            G = np.vectorize(lambda x: c.integral(a, x))
        lo = np.full_like(mass, a)
        hi = np.full_like(mass, b)
        scale = max(self.total, 1e-300)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = G(mid) < mass
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(np.abs(G(hi) - G(lo)) / scale <= 1e-12) or np.all(hi - lo <= 1e-15):
                break
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DrarLevel:
    S: Intervals
    L: Intervals
    mass_S: float  # integral of the residual psi_{k-l+1} over S
    mass_L: float  # integral of H_l over L
    quota_S: int
    quota_L: int


@dataclass(frozen=True)
class DrarPlan:
    decomposition: SumDecomposition
    requested_N: int
    total_mass: float
    levels: tuple[DrarLevel, ...]

    @property
    def quotas(self) -> list[int]:
        return [q for lv in self.levels for q in (lv.quota_S, lv.quota_L)]

    @property
    def alpha(self) -> list[float]:
        return [lv.mass_S / self.total_mass for lv in self.levels]

    @property
    def beta(self) -> list[float]:
        return [lv.mass_L / self.total_mass for lv in self.levels]


def plan_drar(decomposition: SumDecomposition, requested_N: int) -> DrarPlan:
    """Regions and quotas for the (embedded) reduced sampler.

    Level l works on the domain left over by level l-1: S_l is where the
    residual psi_{k-l+1} falls below H_l (handled by acceptance-rejection),
    L_l the rest (H_l sampled by inversion, residual passed on).
    """
    comps = decomposition.components
    k = len(comps)
    total = decomposition.total_mass()
    if not total > 0:
        raise DecompositionError("target has non-positive total mass")
    domain: Intervals = (decomposition.domain,)
    levels = []
    for lvl in range(k):
        if decomposition.regions is not None:
            S, Lr = decomposition.regions[lvl]
        elif lvl == k - 1:
            S, Lr = (), domain
        else:
            rest = comps[lvl + 1:]
            S, Lr = find_regions(lambda x: sum(c.pdf(x) for c in rest), domain)
        mass_S = sum(c.integral(a, b) for c in comps[lvl:] for a, b in S)
        mass_L = sum(comps[lvl].integral(a, b) for a, b in Lr)
        if mass_S < -1e-14 or mass_L < -1e-14:
            raise DecompositionError(f"negative region mass at level {lvl + 1}")
        mass_S, mass_L = max(mass_S, 0.0), max(mass_L, 0.0)
        q_S = math.ceil(requested_N * mass_S / total) if S else 0
        q_L = math.ceil(requested_N * mass_L / total)
        levels.append(DrarLevel(tuple(S), tuple(Lr), mass_S, mass_L, q_S, q_L))
        domain = tuple(Lr)
    return DrarPlan(decomposition, requested_N, total, tuple(levels))


def _dar_region(residual, proposal_inv: RegionInverse, component, quota: int, driver, stream: int,
                chunk: int = 1024) -> tuple[np.ndarray, int]:
    """Accept points under the residual from a growing 2-D driver prefix.

    Returns exactly ``quota`` accepted points and the prefix length used.
    """
    if quota == 0:
        return np.empty(0), 0
    got = []
    n_acc = 0
    start = 0
    while True:
        u = driver.prefix(chunk, 2, start=start, stream=stream)
        x = proposal_inv(u[:, 0])
        psi = residual(x)
        ok = (psi > 0) & (psi >= component.pdf(x) * u[:, 1])
        idx = np.flatnonzero(ok)
        need = quota - n_acc
        if len(idx) >= need:
            idx = idx[:need]
            got.append(x[idx])
            return np.concatenate(got), start + int(idx[-1]) + 1
        got.append(x[idx])
        n_acc += len(idx)
        start += chunk
        chunk *= 2
        if start > 1e7 * quota:
            raise RunawayError("reduced sampler acceptance stalled")


def drar_sample(plan: DrarPlan, table: DirectionNumberTable | None = None, driver=None) -> SampleSet:
    """Run the reduced sampler; each sub-sample restarts the driver sequence."""
    driver = SobolDriver(table) if driver is None else driver
    comps = plan.decomposition.components
    pieces = []
    parts = []
    M = 0
    stream = 0
    for lvl, level in enumerate(plan.levels):
        comp = comps[lvl]
        if level.quota_S:
            inv = RegionInverse(comp, level.S)
            pts, used = _dar_region(plan.decomposition.residual(lvl), inv, comp, level.quota_S,
                                    driver, stream)
            pieces.append(pts)
            parts.append((f"S{lvl + 1}", level.quota_S))
            M += used
        stream += 1
        if level.quota_L:
            inv = RegionInverse(comp, level.L)
            u = driver.prefix(level.quota_L, 1, stream=stream)[:, 0]
            pieces.append(inv(u))
            parts.append((f"L{lvl + 1}", level.quota_L))
            M += level.quota_L
        stream += 1
    tag = DRAR if len(comps) <= 2 else DRAR_EMBED
    pts = np.concatenate(pieces)[:, None] if pieces else np.empty((0, 1))
    return SampleSet(pts, M, plan.requested_N, tag, UNIT_CUBE, None, tuple(parts))


def split_parts(sample: SampleSet) -> list[tuple[str, np.ndarray]]:
    """Sub-samples of a reduced-sampler result, in generation order."""
    out = []
    i = 0
    for name, n in sample.parts:
        out.append((name, sample.points[i:i + n, 0]))
        i += n
    return out
