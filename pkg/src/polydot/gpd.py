"""Polynomial block codes for distributed matrix multiplication, plain and secure: encode, compute, decode."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DuplicatePoint, FieldError, InsufficientShares, InterferenceError
from .field import EvalPointSet, PrimeField, interpolate, make_rng, poly_eval_many, sample_distinct_points
from .partition import (
    AugmentationPlan,
    ExponentMap,
    KeyMaterial,
    PartitionSpec,
    ReadoutMap,
    Regime,
    Source,
    build_exponent_maps,
    draw_keys,
    join_blocks,
    max_degree,
    plan_augmentation,
    split_blocks,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SecureCodePlan:
    field: PrimeField
    spec: PartitionSpec
    plan: AugmentationPlan
    a_map: ExponentMap
    b_map: ExponentMap
    readout: ReadoutMap
    P: int
    points: EvalPointSet

    @property
    def p_c(self) -> int:
        return self.plan.p_c

    @property
    def degree(self) -> int:
        return max_degree(self.a_map, self.b_map)

    @property
    def threshold(self) -> int:
        return self.degree + 1

    def point(self, worker_id: int) -> int:
        return self.points[worker_id - 1]


def make_code(spec: PartitionSpec, P: int, p_c: int = 0, field: PrimeField | None = None,
              points: EvalPointSet | None = None, seed=0) -> SecureCodePlan:
    """Build a code for ``P`` workers; ``p_c = 0`` gives the plain GPD code."""
    field = field or PrimeField()
    plan = plan_augmentation(spec, p_c)
    a_map, b_map, readout = build_exponent_maps(plan, spec)
    if points is None:
        points = sample_distinct_points(field, P, seed)
    if len(points) != P:
        raise ValueError(f"need {P} evaluation points, got {len(points)}")
    code = SecureCodePlan(field, spec, plan, a_map, b_map, readout, P, points)
    if P < code.threshold:
        warnings.warn(f"P={P} is below the recovery threshold {code.threshold}; decoding may be impossible",
                      stacklevel=2)
    return code


@dataclass(frozen=True)
class Share:
    worker_id: int
    z: int
    A_p: np.ndarray
    B_p: np.ndarray
    modulus: int


@dataclass(frozen=True)
class WorkerResult:
    worker_id: int
    C_p: np.ndarray
    completion_time: float | None = None


def _coefficients(emap: ExponentMap, data_grid, key_blocks: dict) -> dict:
    coeffs = {}
    for tm in emap.nonzero():
        if tm.source is Source.DATA:
            coeffs[tm.exponent] = data_grid[tm.row - 1][tm.col - 1]
        else:
            coeffs[tm.exponent] = key_blocks[(tm.row, tm.col)]
    return coeffs


def encode_shares(A, B, code: SecureCodePlan, seed=None, keys: KeyMaterial | None = None,
                  workers=None) -> list:
    """Evaluate both encoding polynomials at each worker's point.

    Fresh key material is drawn from ``seed`` unless ``keys`` is given.
    ``workers`` restricts the output to a subset of 1-based worker ids.
    """
    f, spec = code.field, code.spec
    A, B = f.asarray(A), f.asarray(B)
    if A.shape != (spec.T, spec.S) or B.shape != (spec.S, spec.D):
        raise FieldError(f"expected A {spec.T}x{spec.S} and B {spec.S}x{spec.D}, got {A.shape} and {B.shape}")
    if keys is None:
        keys = draw_keys(f, code.a_map, code.b_map, spec, make_rng(seed))
    ids = list(range(1, code.P + 1)) if workers is None else list(workers)
    zs = [code.point(p) for p in ids]
    a_vals = poly_eval_many(f, _coefficients(code.a_map, split_blocks(A, spec.t, spec.s), keys.R), zs)
    b_vals = poly_eval_many(f, _coefficients(code.b_map, split_blocks(B, spec.s, spec.d), keys.R_prime), zs)
    return [Share(p, z, a, b, f.modulus) for p, z, a, b in zip(ids, zs, a_vals, b_vals)]


def worker_multiply(share: Share, cancel=None, completion_time: float | None = None) -> WorkerResult | None:
    """Compute ``A_p B_p`` over the field.

    With a ``cancel`` event the product is formed one row at a time and
    ``None`` is returned as soon as the event is set.
    """
    f = PrimeField(share.modulus)
    if cancel is None:
        return WorkerResult(share.worker_id, f.matmul(share.A_p, share.B_p), completion_time)
    rows = []
    for r in range(share.A_p.shape[0]):
        if cancel.is_set():
            return None
        rows.append(f.matmul(share.A_p[r:r + 1], share.B_p))
    return WorkerResult(share.worker_id, np.vstack(rows), completion_time)


def select_results(results, need: int) -> list:
    """Pick ``need`` results: earliest completion first, then lowest worker id."""
    results = list(results)
    ids = [r.worker_id for r in results]
    if len(set(ids)) != len(ids):
        raise DuplicatePoint("several results from the same worker")
    if len(results) < need:
        raise InsufficientShares(len(results), need)
    key = lambda r: (r.completion_time if r.completion_time is not None else 0.0, r.worker_id)
    return sorted(results, key=key)[:need]


def read_product(field: PrimeField, spec: PartitionSpec, readout: ReadoutMap, coeffs: dict,
                 a_blocks=None, b_blocks=None, a_data=None, b_data=None) -> np.ndarray:
    """Assemble ``C`` from interpolated coefficients, subtracting known interfering products.

    ``a_blocks``/``b_blocks`` map key labels to key blocks and ``a_data``/``b_data``
    are data block grids; they are only consulted when the readout has corrections.
    """
    grid = []
    for i in range(1, spec.t + 1):
        row = []
        for l in range(1, spec.d + 1):
            c = coeffs[readout.positions[(i, l)]]
            for a_tm, b_tm in readout.corrections.get((i, l), ()):
                if a_blocks is None and b_blocks is None:
                    raise InterferenceError(f"C_{i},{l} needs correction terms but no key material was supplied")
                left = a_data[a_tm.row - 1][a_tm.col - 1] if a_tm.source is Source.DATA else a_blocks[(a_tm.row, a_tm.col)]
                right = b_data[b_tm.row - 1][b_tm.col - 1] if b_tm.source is Source.DATA else b_blocks[(b_tm.row, b_tm.col)]
                c = (c - field.matmul(left, right)) % field.modulus
            row.append(c)
        grid.append(row)
    return join_blocks(grid)


def decode_product(results, code: SecureCodePlan, keys: KeyMaterial | None = None) -> np.ndarray:
    """Recover ``C = AB`` from at least ``threshold`` worker results."""
    results = select_results(results, code.threshold)
    points = []
    for r in results:
        if not 1 <= r.worker_id <= code.P:
            raise ValueError(f"unknown worker id {r.worker_id}")
        points.append((code.point(r.worker_id), r.C_p))
    coeffs = interpolate(code.field, points, code.degree)
    return read_product(code.field, code.spec, code.readout, coeffs,
                        keys.R if keys else None, keys.R_prime if keys else None)


@dataclass(frozen=True)
class ThresholdReport:
    P_R: int
    formula_P_R: int
    naive_P_R: int

    @property
    def agrees(self) -> bool:
        return self.P_R == self.formula_P_R


def formula_threshold(plan: AugmentationPlan, spec: PartitionSpec) -> int:
    t, s, d = spec.split
    pc = plan.p_c
    if pc == 0:
        return t * s * d + s - 1
    if plan.regime is Regime.S_LESS_T:
        if plan.delta * s == pc:
            return plan.t_star * s * (d + 1) + s * plan.delta - 1
        return plan.t_star * s * (d + 1) - s * plan.delta + 2 * pc - 1
    return t * (plan.s_star * d - plan.delta) + t * s + 2 * pc - 1


def naive_threshold(plan: AugmentationPlan, spec: PartitionSpec) -> int:
    """Threshold of the plain code applied directly to the augmented matrices."""
    t, s, d = spec.split
    if plan.p_c == 0:
        return t * s * d + s - 1
    if plan.regime is Regime.S_LESS_T:
        return plan.t_star * s * plan.d_star + s - 1 - 2 * (s * plan.delta - plan.p_c)
    return t * plan.s_star * d + plan.s_star - 1


def recovery_threshold(plan: AugmentationPlan, spec: PartitionSpec) -> ThresholdReport:
    from .partition import exponent_maps

    a_map, b_map = exponent_maps(plan, spec)
    report = ThresholdReport(max_degree(a_map, b_map) + 1, formula_threshold(plan, spec), naive_threshold(plan, spec))
    if not report.agrees:
        log.warning("symbolic threshold %d differs from closed form %d for split %s, p_c=%d",
                    report.P_R, report.formula_P_R, spec.split, plan.p_c)
    return report


def communication_load(P_R: int, spec: PartitionSpec) -> int:
    if P_R < 1:
        raise ValueError("P_R must be at least 1")
    return P_R * spec.T * spec.D // (spec.t * spec.d)


@dataclass(frozen=True)
class TradeoffPoint:
    t: int
    s: int
    d: int
    P_C: int
    P_R: int
    C_L: int
    naive_P_R: int


def tradeoff_point(spec: PartitionSpec, p_c: int) -> TradeoffPoint:
    rep = recovery_threshold(plan_augmentation(spec, p_c), spec)
    return TradeoffPoint(spec.t, spec.s, spec.d, p_c, rep.P_R, communication_load(rep.P_R, spec), rep.naive_P_R)


def complexity_estimate(spec: PartitionSpec, P: int, p_c: int, role: str, P_R: int | None = None) -> float:
    """Multiplication counts for a worker, master encoding, or master decoding.

    Decoding uses the fast-interpolation estimate ``(P_R-1) ln(P_R-1)^2 TD/(td)``.
    """
    T, S, D = spec.T, spec.S, spec.D
    t, s, d = spec.split
    if role == "worker":
        return T * S * D // (t * s * d)
    if role == "master_encode":
        return P * p_c * (T * S // (t * s) + S * D // (s * d)) + P * (T * S + S * D)
    if role == "master_decode":
        if P_R is None:
            P_R = recovery_threshold(plan_augmentation(spec, p_c), spec).P_R
        if P_R <= 2:
            return 0.0
        return (P_R - 1) * math.log(P_R - 1) ** 2 * T * D / (t * d)
    raise ValueError(f"unknown role {role!r}")
