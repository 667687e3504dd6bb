"""Base-2 Sobol digital nets and elementary-interval fairness audits.

Points are generated in natural index order (no Gray code) so that any
prefix of the sequence is available, not only power-of-two blocks.
Internally every coordinate is an integer numerator over ``2**BITS``;
floats are produced only at the API boundary.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence, TextIO

import numpy as np

BITS = 32
_SCALE = float(1 << BITS)


class DirectionNumberError(ValueError):
    """Raised for malformed or invalid direction-number input."""


class DimensionUnsupportedError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionRecord:
    dimension: int
    degree: int
    a: int
    m: tuple[int, ...]


@dataclass(frozen=True)
class DirectionNumberTable:
    records: tuple[DirectionRecord, ...] = ()

    @property
    def max_dimension(self) -> int:
        return self.records[-1].dimension if self.records else 1

    def record(self, dimension: int) -> DirectionRecord:
        return self.records[dimension - 2]


def load_direction_numbers(stream: TextIO | str) -> DirectionNumberTable:
    """Parse a Joe-Kuo style table of ``d s a m_1 ... m_s`` lines.

    A first line starting with a non-digit is treated as a header.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if lineno == 1 and not line[0].isdigit():
            continue
        try:
            fields = [int(tok) for tok in line.split()]
        except ValueError:
            raise DirectionNumberError(f"line {lineno}: non-integer field in {line!r}") from None
        if len(fields) < 3:
            raise DirectionNumberError(f"line {lineno}: expected 'd s a m_1 ... m_s'")
        d, s, a, *m = fields
        if s < 1 or len(m) != s:
            raise DirectionNumberError(
                f"line {lineno}: degree {s} but {len(m)} direction integers")
        if d < 2:
            raise DirectionNumberError(f"line {lineno}: dimension must be >= 2, got {d}")
        if not 0 <= a < (1 << max(s - 1, 0)) and not (s == 1 and a == 0):
            raise DirectionNumberError(f"line {lineno}: coefficient a={a} out of range for degree {s}")
        for i, mi in enumerate(m, start=1):
            if mi % 2 == 0 or not 0 < mi < (1 << i):
                raise DirectionNumberError(
                    f"line {lineno}: m_{i}={mi} must be odd and below 2^{i}")
        records.append(DirectionRecord(d, s, a, tuple(m)))
    records.sort(key=lambda r: r.dimension)
    dims = [r.dimension for r in records]
    if dims != list(range(2, 2 + len(dims))):
        raise DirectionNumberError("dimensions must be contiguous starting at 2")
    return DirectionNumberTable(tuple(records))


def default_table() -> DirectionNumberTable:
    """The bundled Joe-Kuo D6 table (dimensions 1-100)."""
    text = resources.files("qmcar").joinpath("data/new-joe-kuo-6.100.txt").read_text("utf-8")
    return load_direction_numbers(text)


def _direction_integers(record: DirectionRecord | None, nbits: int) -> list[int]:
    """Direction integers m_1..m_nbits for one dimension."""
    if record is None:
        return [1] * nbits
    s, a = record.degree, record.a
    m = list(record.m[:nbits])
    for i in range(s, nbits):
        new = m[i - s] ^ (m[i - s] << s)
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                new ^= m[i - k] << k
        m.append(new)
    return m


@dataclass(frozen=True)
class DigitalNet:
    """Generating columns of a base-2 Sobol construction.

    ``columns[j][i]`` is the direction number v_{j,i} = m_i * 2**(BITS-i-1),
    i.e. column i of the generating matrix of coordinate j scaled to BITS bits.
    """

    s: int
    columns: tuple[tuple[int, ...], ...]
    base: int = field(default=2, init=False)

    @classmethod
    def sobol(cls, s: int, table: DirectionNumberTable | None = None, nbits: int = BITS) -> DigitalNet:
        if s < 1:
            raise ValueError("dimension must be >= 1")
        table = default_table() if table is None else table
        if s > table.max_dimension:
            raise DimensionUnsupportedError(
                f"dimension {s} exceeds direction-number coverage ({table.max_dimension})")
        cols = []
        for j in range(s):
            rec = None if j == 0 else table.record(j + 1)
            m = _direction_integers(rec, nbits)
            cols.append(tuple(mi << (BITS - i - 1) for i, mi in enumerate(m)))
        return cls(s, tuple(cols))

    def integer_points(self, start: int, count: int) -> np.ndarray:
        """Points ``start .. start+count-1`` as uint64 numerators over 2**BITS."""
        if start < 0 or count < 0 or start + count > (1 << BITS):
            raise ValueError("index range outside the supported sequence length")
        idx = np.arange(start, start + count, dtype=np.uint64)
        out = np.zeros((count, self.s), dtype=np.uint64)
        nbits = max(int(start + count - 1).bit_length(), 0)
        for i in range(nbits):
            bit = ((idx >> np.uint64(i)) & np.uint64(1)).astype(bool)
            if not bit.any():
                continue
            col = np.array([c[i] for c in self.columns], dtype=np.uint64)
            out[bit] ^= col
        return out


def to_float(ints: np.ndarray) -> np.ndarray:
    return ints.astype(np.float64) / _SCALE


def sobol_integer_points(m: int, s: int, table: DirectionNumberTable | None = None) -> np.ndarray:
    if m < 0:
        raise ValueError("m must be non-negative")
    return DigitalNet.sobol(s, table).integer_points(0, 1 << m)


def sobol_points(m: int, s: int, table: DirectionNumberTable | None = None) -> np.ndarray:
    """First ``2**m`` Sobol points in ``[0,1)^s``, shape ``(2**m, s)``."""
    return to_float(sobol_integer_points(m, s, table))


def sobol_prefix(count: int, s: int, table: DirectionNumberTable | None = None,
                 start: int = 0) -> np.ndarray:
    """Points ``start .. start+count-1`` of the infinite Sobol (t,s)-sequence."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return to_float(DigitalNet.sobol(s, table).integer_points(start, count))


@dataclass(frozen=True)
class ElementaryInterval:
    """Dyadic box prod_j [a_j 2^-d_j, (a_j+1) 2^-d_j)."""

    d: tuple[int, ...]
    a: tuple[int, ...]

    def __post_init__(self):
        if len(self.d) != len(self.a):
            raise ValueError("d and a must have equal length")
        for dj, aj in zip(self.d, self.a):
            if dj < 0 or not 0 <= aj < (1 << dj):
                raise ValueError(f"invalid elementary interval component d={dj}, a={aj}")

    @property
    def order(self) -> int:
        return sum(self.d)

    @property
    def volume(self) -> float:
        return 2.0 ** -self.order

    def bounds(self) -> list[tuple[float, float]]:
        return [(aj / 2 ** dj, (aj + 1) / 2 ** dj) for dj, aj in zip(self.d, self.a)]


def count_in_interval(points: np.ndarray, interval: ElementaryInterval) -> int:
    """Exact number of points in the half-open elementary interval.

    ``points`` may be float coordinates or uint64 numerators over 2**BITS.
    """
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != len(interval.d):
        raise ValueError(f"point dimension {pts.shape[1]} does not match interval dimension {len(interval.d)}")
    if pts.dtype == np.uint64:
        inside = np.ones(len(pts), dtype=bool)
        for j, (dj, aj) in enumerate(zip(interval.d, interval.a)):
            inside &= (pts[:, j] >> np.uint64(BITS - dj)) == np.uint64(aj) if dj else True
        return int(inside.sum())
    inside = np.ones(len(pts), dtype=bool)
    for j, (lo, hi) in enumerate(interval.bounds()):
        inside &= (pts[:, j] >= lo) & (pts[:, j] < hi)
    return int(inside.sum())


def compositions(k: int, s: int) -> Iterable[tuple[int, ...]]:
    """All (d_1..d_s) of non-negative integers summing to k."""
    for cuts in itertools.combinations(range(k + s - 1), s - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(k + s - 1 - prev - 1)
        yield tuple(parts)


def _cell_counts(ints: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """Counts per elementary interval of the given shape, flattened."""
    cell = np.zeros(len(ints), dtype=np.int64)
    for j, dj in enumerate(shape):
        if dj:
            cell = (cell << dj) | (ints[:, j] >> np.uint64(BITS - dj)).astype(np.int64)
    return np.bincount(cell, minlength=1 << sum(shape))


def shape_is_fair(ints: np.ndarray, shape: Sequence[int]) -> bool:
    counts = _cell_counts(ints, shape)
    expected, rem = divmod(len(ints), len(counts))
    return rem == 0 and bool(np.all(counts == expected))


def audit_t_value(points: np.ndarray, m: int, s: int, k_max: int | None = None) -> int:
    """Smallest t such that every elementary interval of order <= m - t is fair.

    Fairness at order k implies fairness at every lower order (each coarser
    box is a disjoint union of order-k boxes), so orders are scanned from
    ``min(k_max, m)`` downward and the first fully fair order decides t.
    """
    ints = np.asarray(points)
    if ints.dtype != np.uint64:
        ints = np.round(np.asarray(points, dtype=np.float64) * _SCALE).astype(np.uint64)
    if ints.ndim == 1:
        ints = ints[:, None]
    if len(ints) != 1 << m or ints.shape[1] != s:
        raise ValueError(f"expected {1 << m} points of dimension {s}, got shape {ints.shape}")
    k_top = m if k_max is None else min(k_max, m)
    for k in range(k_top, 0, -1):
        if all(shape_is_fair(ints, shape) for shape in compositions(k, s)):
            return m - k
    return m
