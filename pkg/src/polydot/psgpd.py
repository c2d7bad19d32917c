"""Private and secure multiplication against a public library (no collusion).

The master holds a secret ``A`` and wants ``A @ B[kappa]`` for a library ``B``
known to every worker, without revealing ``A`` or ``kappa``. Each worker gets a
query vector of ``L`` nonzero field points (shared decoys everywhere except a
per-worker point at ``kappa``) and a masked evaluation of ``A``; it encodes the
whole library against its query and returns one block product.

Decoys contribute a worker-independent term ``K``. The master knows ``K`` (the
library and decoys are public to it) and the ``A_p`` it sent, so it removes
``A_p K`` from each result before interpolating. For ``s >= t`` with ``d > 1``
the mask term also lands on some readout coefficients; those are products of
the mask with blocks of ``B[kappa]`` and are subtracted after interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DuplicatePoint, FieldError, InconsistentQueries, Unsupported
from .field import PrimeField, interpolate, make_rng, poly_eval_many, poly_eval_matrix
from .gpd import WorkerResult, read_product, select_results
from .partition import (
    ExponentMap,
    PartitionSpec,
    ReadoutMap,
    Regime,
    Source,
    Term,
    derive_readout,
    max_degree,
    split_blocks,
)


@dataclass(frozen=True)
class PublicLibrary:
    matrices: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(b) for b in self.matrices)
        object.__setattr__(self, "matrices", mats)
        if not mats:
            raise ValueError("library must hold at least one matrix")
        if any(b.shape != mats[0].shape for b in mats):
            raise ValueError("library matrices must share a shape")

    @property
    def L(self) -> int:
        return len(self.matrices)

    def __getitem__(self, r: int) -> np.ndarray:
        """1-based access, ``library[kappa]``."""
        return self.matrices[r - 1]


@dataclass(frozen=True)
class QueryVector:
    worker_id: int
    entries: tuple


@dataclass(frozen=True)
class MaskedEncoding:
    worker_id: int
    A_p: np.ndarray
    mask_exponent: int


@dataclass(frozen=True)
class PrivateCodePlan:
    field: PrimeField
    spec: PartitionSpec
    regime: Regime
    a_map: ExponentMap
    b_map: ExponentMap
    readout: ReadoutMap
    P: int

    @property
    def degree(self) -> int:
        return max_degree(self.a_map, self.b_map)

    @property
    def threshold(self) -> int:
        return self.degree + 1

    @property
    def mask_exponent(self) -> int:
        return self.spec.t * self.spec.s


def psgpd_maps(spec: PartitionSpec) -> tuple:
    t, s, d = spec.split
    if s < t:
        a = [Term(Source.DATA, i, j, s * (i - 1) + j - 1) for i in range(1, t + 1) for j in range(1, s + 1)]
        b = [Term(Source.DATA, k, l, s - k + (l - 1) * s * (t + 1)) for k in range(1, s + 1) for l in range(1, d + 1)]
    else:
        a = [Term(Source.DATA, i, j, i - 1 + t * (j - 1)) for i in range(1, t + 1) for j in range(1, s + 1)]
        b = [Term(Source.DATA, k, l, (s - k) * t + t * s * (l - 1)) for k in range(1, s + 1) for l in range(1, d + 1)]
    a.append(Term(Source.RANDOM, 1, 1, t * s))
    return ExponentMap(tuple(a)), ExponentMap(tuple(b))


def psgpd_threshold(spec: PartitionSpec) -> int:
    t, s, d = spec.split
    if s < t:
        return s * (t + 1) * d
    return t * s * (d + 1) - t + 1


def make_private_code(spec: PartitionSpec, P: int, field: PrimeField | None = None, p_c: int = 1) -> PrivateCodePlan:
    if p_c != 1:
        raise Unsupported("only non-colluding workers (p_c = 1) are supported; "
                          "larger collusion sets are left open by the construction")
    field = field or PrimeField()
    if P >= field.modulus:
        raise FieldError("need more nonzero field elements than workers")
    a_map, b_map = psgpd_maps(spec)
    t, s, d = spec.split
    closed = {(i, l): s * i - 1 + (l - 1) * s * (t + 1) for i in range(1, t + 1) for l in range(1, d + 1)} if s < t else None
    readout = derive_readout(a_map, b_map, spec, closed)
    regime = Regime.S_LESS_T if s < t else Regime.S_GEQ_T
    return PrivateCodePlan(field, spec, regime, a_map, b_map, readout, P)


def build_queries(field: PrimeField, L: int, kappa: int, P: int, seed) -> list:
    """One query per worker: shared uniform nonzero decoys, distinct nonzero points at ``kappa``."""
    if not 1 <= kappa <= L:
        raise ValueError(f"kappa={kappa} outside [1, {L}]")
    if P >= field.modulus:
        raise FieldError("need more nonzero field elements than workers")
    rng = make_rng(seed)
    p = field.modulus
    decoys = [int(v) + 1 for v in rng.integers(0, p - 1, size=L)]
    targets = rng.choice(p - 1, size=P, replace=False) + 1
    out = []
    for w, z in enumerate(targets, start=1):
        entries = list(decoys)
        entries[kappa - 1] = int(z)
        out.append(QueryVector(w, tuple(entries)))
    return out


def _a_coefficients(A, code: PrivateCodePlan, mask) -> dict:
    grid = split_blocks(A, code.spec.t, code.spec.s)
    coeffs = {}
    for tm in code.a_map.terms:
        coeffs[tm.exponent] = mask if tm.source is Source.RANDOM else grid[tm.row - 1][tm.col - 1]
    return coeffs


def encode_a_masked(A, code: PrivateCodePlan, queries, kappa: int, seed=None, mask=None) -> tuple:
    """Evaluate the masked polynomial of ``A`` at each worker's ``kappa`` point.

    Returns ``(encodings, mask)``; the mask stays with the master. Passing an
    explicit ``mask`` (e.g. all zeros) overrides the random draw.
    """
    f, spec = code.field, code.spec
    A = f.asarray(A)
    if A.shape != (spec.T, spec.S):
        raise FieldError(f"expected A of shape {(spec.T, spec.S)}, got {A.shape}")
    if mask is None:
        mask = f.random_matrix(make_rng(seed), spec.a_block)
    mask = f.asarray(mask)
    zs = [q.entries[kappa - 1] for q in queries]
    vals = poly_eval_many(f, _a_coefficients(A, code, mask), zs)
    encodings = [MaskedEncoding(q.worker_id, v, code.mask_exponent) for q, v in zip(queries, vals)]
    return encodings, mask


def _b_coefficients(B, code: PrivateCodePlan) -> dict:
    grid = split_blocks(B, code.spec.s, code.spec.d)
    return {tm.exponent: grid[tm.row - 1][tm.col - 1] for tm in code.b_map.terms}


def worker_encode_library(library: PublicLibrary, query: QueryVector, code: PrivateCodePlan) -> np.ndarray:
    """Sum of every library matrix's polynomial evaluated at its query entry."""
    if len(query.entries) != library.L:
        raise InconsistentQueries(f"query has {len(query.entries)} entries for a library of {library.L}")
    f = code.field
    out = f.zeros(code.spec.b_block)
    for B, z in zip(library.matrices, query.entries):
        out = (out + poly_eval_matrix(f, _b_coefficients(B, code), z)) % f.modulus
    return out


def worker_compute(encoding: MaskedEncoding, query: QueryVector, library: PublicLibrary,
                   code: PrivateCodePlan, completion_time=None) -> WorkerResult:
    B_p = worker_encode_library(library, query, code)
    return WorkerResult(encoding.worker_id, code.field.matmul(encoding.A_p, B_p), completion_time)


def decoy_constant(library: PublicLibrary, queries, kappa: int, code: PrivateCodePlan) -> np.ndarray:
    """``K = sum_{r != kappa} F_{B_r}(z_r)``; identical for every worker."""
    queries = list(queries)
    ref = queries[0].entries
    for q in queries:
        if len(q.entries) != library.L:
            raise InconsistentQueries("query length does not match the library")
        if any(q.entries[r] != ref[r] for r in range(library.L) if r != kappa - 1):
            raise InconsistentQueries(f"worker {q.worker_id} has different decoys")
    f = code.field
    K = f.zeros(code.spec.b_block)
    for r in range(1, library.L + 1):
        if r != kappa:
            K = (K + poly_eval_matrix(f, _b_coefficients(library[r], code), ref[r - 1])) % f.modulus
    return K


def psgpd_decode(results, code: PrivateCodePlan, library: PublicLibrary, queries, kappa: int,
                 encodings, mask) -> np.ndarray:
    """Recover ``A @ library[kappa]`` from at least ``threshold`` worker results."""
    f = code.field
    results = select_results(results, code.threshold)
    by_id_q = {q.worker_id: q for q in queries}
    by_id_a = {e.worker_id: e.A_p for e in encodings}
    K = decoy_constant(library, queries, kappa, code)
    points = []
    for r in results:
        if r.worker_id not in by_id_q or r.worker_id not in by_id_a:
            raise ValueError(f"no query/encoding recorded for worker {r.worker_id}")
        cleaned = (r.C_p - f.matmul(by_id_a[r.worker_id], K)) % f.modulus
        points.append((by_id_q[r.worker_id].entries[kappa - 1], cleaned))
    zs = [z for z, _ in points]
    if len(set(zs)) != len(zs):
        raise DuplicatePoint("workers share a query point")
    coeffs = interpolate(f, points, code.degree)
    b_grid = split_blocks(f.asarray(library[kappa]), code.spec.s, code.spec.d)
    return read_product(f, code.spec, code.readout, coeffs, a_blocks={(1, 1): mask}, b_blocks={}, b_data=b_grid)
