"""Block partitioning, secure augmentation and exponent maps for the encoders.

Block indices are 1-based everywhere, matching the usual ``A_{i,j}`` notation.
Random key blocks are labelled as follows:

* ``s < t``: ``R`` is a ``delta x s`` grid of extra rows of ``A``; ``R'`` is an
  ``s x delta`` grid where ``R'_{k,j}`` sits at row ``s + 1 - k`` of the extra
  column ``j`` of ``B`` (so the bottom row of ``B*`` holds ``R'_{1,*}``).
* ``s >= t``: ``R`` is a ``t x delta`` grid of extra columns of ``A``; ``R'`` is a
  ``delta x d`` grid stacked above ``B`` with ``R'_{delta,*}`` on top.

When fewer than all random blocks are needed, the blocks carrying the highest
exponents are all-zero. That reproduces the stated orderings: right-to-left in
the last row of ``R`` / top-to-bottom in the last column of ``R'`` for ``s < t``,
and bottom-to-top right-to-left in ``R`` / right-to-left top-to-bottom in ``R'``
for ``s >= t``. Exactly ``p_c`` random blocks stay live on each side.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field as dc_field
from math import ceil

import numpy as np

from .errors import InterferenceError, PartitionError
from .field import PrimeField, make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionSpec:
    T: int
    S: int
    D: int
    t: int
    s: int
    d: int

    def __post_init__(self):
        for name in ("T", "S", "D", "t", "s", "d"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise PartitionError(f"{name} must be a positive integer, got {v!r}")
        for big, small in (("T", "t"), ("S", "s"), ("D", "d")):
            if getattr(self, big) % getattr(self, small):
                raise PartitionError(f"{small}={getattr(self, small)} does not divide {big}={getattr(self, big)}")

    @property
    def m(self) -> int:
        return self.t * self.s

    @property
    def n(self) -> int:
        return self.s * self.d

    @property
    def a_block(self) -> tuple:
        return (self.T // self.t, self.S // self.s)

    @property
    def b_block(self) -> tuple:
        return (self.S // self.s, self.D // self.d)

    @property
    def c_block(self) -> tuple:
        return (self.T // self.t, self.D // self.d)

    @property
    def split(self) -> tuple:
        return (self.t, self.s, self.d)


def split_blocks(M, rows: int, cols: int) -> list:
    """Split ``M`` into a ``rows x cols`` grid of equal blocks."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise PartitionError("expected a 2-D matrix")
    R, C = M.shape
    if rows < 1 or cols < 1 or R % rows or C % cols:
        raise PartitionError(f"{R}x{C} matrix cannot be split into {rows}x{cols} equal blocks")
    br, bc = R // rows, C // cols
    return [[M[i * br:(i + 1) * br, j * bc:(j + 1) * bc] for j in range(cols)] for i in range(rows)]


def join_blocks(grid) -> np.ndarray:
    return np.block([[np.asarray(b) for b in row] for row in grid])


def pad_to_multiple(M, rows: int, cols: int) -> np.ndarray:
    """Zero-pad ``M`` so its shape is divisible by ``(rows, cols)``. Only on explicit request."""
    M = np.asarray(M)
    R, C = M.shape
    return np.pad(M, ((0, -R % rows), (0, -C % cols)))


class Regime(enum.Enum):
    S_LESS_T = "s<t"
    S_GEQ_T = "s>=t"


class Source(enum.Enum):
    DATA = "data"
    RANDOM = "random"
    ZERO = "zero"


@dataclass(frozen=True)
class AugmentationPlan:
    regime: Regime
    p_c: int
    delta: int
    t_star: int
    s_star: int
    d_star: int
    zero_blocks_r: int
    zero_blocks_r_prime: int

    @property
    def zero_block_count(self) -> int:
        return self.zero_blocks_r


def plan_augmentation(spec: PartitionSpec, p_c: int) -> AugmentationPlan:
    if p_c < 0:
        raise PartitionError("p_c must be non-negative")
    t, s, d = spec.split
    if s < t:
        delta = ceil(p_c / s)
        zero = s * delta - p_c
        return AugmentationPlan(Regime.S_LESS_T, p_c, delta, t + delta, s, d + delta, zero, zero)
    delta = ceil(p_c / min(t, d))
    return AugmentationPlan(Regime.S_GEQ_T, p_c, delta, t, s + delta, d, t * delta - p_c, d * delta - p_c)


@dataclass(frozen=True)
class Term:
    source: Source
    row: int
    col: int
    exponent: int


@dataclass(frozen=True)
class ExponentMap:
    terms: tuple

    def __post_init__(self):
        exps = [tm.exponent for tm in self.nonzero()]
        if len(set(exps)) != len(exps):
            raise InterferenceError("exponent map has colliding nonzero terms")

    def nonzero(self) -> list:
        return [tm for tm in self.terms if tm.source is not Source.ZERO]

    def of_source(self, source: Source) -> list:
        return [tm for tm in self.terms if tm.source is source]

    def max_exponent(self) -> int:
        return max(tm.exponent for tm in self.nonzero())

    def by_exponent(self) -> dict:
        return {tm.exponent: tm for tm in self.nonzero()}

    def exponent(self, source: Source, row: int, col: int) -> int:
        for tm in self.terms:
            if tm.source is source and tm.row == row and tm.col == col:
                return tm.exponent
        raise KeyError((source, row, col))


def _zero_highest(terms: list, n_zero: int) -> list:
    """Mark the ``n_zero`` random terms with the largest exponents as all-zero."""
    if n_zero <= 0:
        return terms
    doomed = {id(tm) for tm in sorted(terms, key=lambda tm: -tm.exponent)[:n_zero]}
    return [Term(Source.ZERO, tm.row, tm.col, tm.exponent) if id(tm) in doomed else tm for tm in terms]


def gpd_maps(spec: PartitionSpec) -> tuple:
    """The non-secure code: A_{i,j} -> s(i-1)+j-1, B_{k,l} -> s-k+ts(l-1)."""
    t, s, d = spec.split
    a = [Term(Source.DATA, i, j, s * (i - 1) + j - 1) for i in range(1, t + 1) for j in range(1, s + 1)]
    b = [Term(Source.DATA, k, l, s - k + t * s * (l - 1)) for k in range(1, s + 1) for l in range(1, d + 1)]
    return ExponentMap(tuple(a)), ExponentMap(tuple(b))


def exponent_maps(plan: AugmentationPlan, spec: PartitionSpec) -> tuple:
    """Exponent maps ``(a*, b*)``; with ``p_c == 0`` these are exactly :func:`gpd_maps`."""
    if plan.p_c == 0:
        return gpd_maps(spec)
    t, s, d = spec.split
    delta = plan.delta
    if plan.regime is Regime.S_LESS_T:
        ts_ = plan.t_star
        a = [Term(Source.DATA, i, j, s * (i - 1) + j - 1) for i in range(1, t + 1) for j in range(1, s + 1)]
        r = [Term(Source.RANDOM, i, j, s * (t + i - 1) + j - 1)
             for i in range(1, delta + 1) for j in range(1, s + 1)]
        b = [Term(Source.DATA, k, l, s - k + ts_ * s * (l - 1)) for k in range(1, s + 1) for l in range(1, d + 1)]
        rp = [Term(Source.RANDOM, k, j, ts_ * s * d + s * (j - 1) + k - 1)
              for k in range(1, s + 1) for j in range(1, delta + 1)]
    else:
        ss = plan.s_star
        a = [Term(Source.DATA, i, j, i - 1 + t * (j - 1)) for i in range(1, t + 1) for j in range(1, s + 1)]
        r = [Term(Source.RANDOM, i, j, i - 1 + t * (s + j - 1))
             for i in range(1, t + 1) for j in range(1, delta + 1)]
        b = [Term(Source.DATA, k, l, (s - k) * t + t * ss * (l - 1)) for k in range(1, s + 1) for l in range(1, d + 1)]
        base = t * (ss * d - delta)
        rp = [Term(Source.RANDOM, k, l, base + d * (k - 1) + l - 1)
              for k in range(1, delta + 1) for l in range(1, d + 1)]
    r = _zero_highest(r, plan.zero_blocks_r)
    rp = _zero_highest(rp, plan.zero_blocks_r_prime)
    return ExponentMap(tuple(a + r)), ExponentMap(tuple(b + rp))


def max_degree(a_map: ExponentMap, b_map: ExponentMap) -> int:
    """Degree of the product polynomial, ignoring all-zero blocks."""
    return a_map.max_exponent() + b_map.max_exponent()


@dataclass(frozen=True)
class ReadoutMap:
    positions: dict
    # (i, l) -> list of (a_term, b_term) products that also land on the readout
    # coefficient and must be subtracted by a decoder that knows the keys
    corrections: dict = dc_field(default_factory=dict)
    closed_form: dict | None = None
    discrepancies: tuple = ()

    def exponent(self, i: int, l: int) -> int:
        return self.positions[(i, l)]


def closed_form_readout(plan: AugmentationPlan, spec: PartitionSpec) -> dict:
    t, s, d = spec.split
    if plan.p_c == 0:
        f = lambda i, l: s * i - 1 + (l - 1) * t * s
    elif plan.regime is Regime.S_LESS_T:
        f = lambda i, l: s * i - 1 + (l - 1) * plan.t_star * s
    else:
        f = lambda i, l: i - 1 + t * (plan.s_star * l - 1)
    return {(i, l): f(i, l) for i in range(1, t + 1) for l in range(1, d + 1)}


def derive_readout(a_map: ExponentMap, b_map: ExponentMap, spec: PartitionSpec, closed_form=None) -> ReadoutMap:
    """Locate every ``C_{i,l}`` in the symbolic product of the two maps.

    The coefficient at the readout exponent must contain all products
    ``A_{i,r} B_{r,l}`` and no other data-by-data product. Products involving a
    random block are returned as corrections (empty for the secure codes).
    """
    t, s, d = spec.split
    b_at = b_map.by_exponent()
    positions, corrections = {}, {}
    for i in range(1, t + 1):
        for l in range(1, d + 1):
            sums = {a_map.exponent(Source.DATA, i, r) + b_map.exponent(Source.DATA, r, l) for r in range(1, s + 1)}
            if len(sums) != 1:
                raise InterferenceError(f"products for C_{i},{l} are spread over exponents {sorted(sums)}")
            e = sums.pop()
            extra = []
            for a_tm in a_map.nonzero():
                b_tm = b_at.get(e - a_tm.exponent)
                if b_tm is None:
                    continue
                if a_tm.source is Source.DATA and b_tm.source is Source.DATA:
                    if a_tm.row != i or b_tm.col != l or a_tm.col != b_tm.row:
                        raise InterferenceError(
                            f"A_{a_tm.row},{a_tm.col} B_{b_tm.row},{b_tm.col} interferes with C_{i},{l}")
                else:
                    extra.append((a_tm, b_tm))
            positions[(i, l)] = e
            if extra:
                corrections[(i, l)] = extra
    if len(set(positions.values())) != len(positions):
        raise InterferenceError("two product blocks share a readout exponent")
    discrepancies = ()
    if closed_form is not None:
        discrepancies = tuple((k, positions[k], closed_form[k]) for k in positions if positions[k] != closed_form[k])
        if discrepancies:
            log.debug("readout differs from closed form at %d positions, using symbolic positions", len(discrepancies))
    return ReadoutMap(positions, corrections, closed_form, discrepancies)


def build_exponent_maps(plan: AugmentationPlan, spec: PartitionSpec) -> tuple:
    a_map, b_map = exponent_maps(plan, spec)
    readout = derive_readout(a_map, b_map, spec, closed_form_readout(plan, spec))
    return a_map, b_map, readout


@dataclass(frozen=True)
class KeyMaterial:
    """Random key blocks keyed by their 1-based ``(row, col)`` labels; zero blocks included."""

    R: dict
    R_prime: dict

    def r_grid(self) -> list:
        return _as_grid(self.R)

    def r_prime_grid(self) -> list:
        return _as_grid(self.R_prime)


def _as_grid(blocks: dict) -> list:
    if not blocks:
        return []
    rows = max(r for r, _ in blocks)
    cols = max(c for _, c in blocks)
    return [[blocks[(r, c)] for c in range(1, cols + 1)] for r in range(1, rows + 1)]


def key_entry_count(a_map: ExponentMap, b_map: ExponentMap, spec: PartitionSpec) -> int:
    """Number of field symbols of live key material."""
    na = len(a_map.of_source(Source.RANDOM))
    nb = len(b_map.of_source(Source.RANDOM))
    return na * int(np.prod(spec.a_block)) + nb * int(np.prod(spec.b_block))


def keys_from_values(field: PrimeField, a_map: ExponentMap, b_map: ExponentMap, spec: PartitionSpec, values) -> KeyMaterial:
    """Lay a flat sequence of key symbols out over the live key blocks (zero blocks stay zero)."""
    values = np.asarray(values, dtype=field.dtype).reshape(-1)
    pos = 0

    def fill(emap, shape):
        nonlocal pos
        out = {}
        size = int(np.prod(shape))
        for tm in emap.terms:
            if tm.source is Source.RANDOM:
                out[(tm.row, tm.col)] = values[pos:pos + size].reshape(shape)
                pos += size
            elif tm.source is Source.ZERO:
                out[(tm.row, tm.col)] = field.zeros(shape)
        return out

    R = fill(a_map, spec.a_block)
    Rp = fill(b_map, spec.b_block)
    if pos != values.size:
        raise ValueError(f"expected {pos} key symbols, got {values.size}")
    return KeyMaterial(R, Rp)


def draw_keys(field: PrimeField, a_map: ExponentMap, b_map: ExponentMap, spec: PartitionSpec, rng) -> KeyMaterial:
    n = key_entry_count(a_map, b_map, spec)
    return keys_from_values(field, a_map, b_map, spec, field.random_matrix(rng, (n,)))


def build_augmentation(spec: PartitionSpec, p_c: int, seed, field: PrimeField | None = None) -> tuple:
    """Plan the augmentation and draw fresh i.i.d. uniform key blocks under ``seed``."""
    field = field or PrimeField()
    plan = plan_augmentation(spec, p_c)
    a_map, b_map = exponent_maps(plan, spec)
    return plan, draw_keys(field, a_map, b_map, spec, make_rng(seed))
