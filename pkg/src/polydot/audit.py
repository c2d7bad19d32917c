"""Brute-force checks of secrecy, privacy and decodability on tiny fields.

Secrecy and privacy are decided by exact distribution equality: every value of
the randomness is enumerated, the observed worker view is tabulated, and the
tables for two inputs (or two indices) must coincide. With uniform randomness
this is equivalent to zero mutual information, so no tolerance is involved.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy import stats

from .errors import BudgetExceeded, InsufficientShares
from .field import EvalPointSet, PrimeField, make_rng
from .gpd import SecureCodePlan, decode_product, encode_shares, make_code, worker_multiply
from .partition import PartitionSpec, key_entry_count, keys_from_values
from .psgpd import (
    PrivateCodePlan,
    PublicLibrary,
    QueryVector,
    build_queries,
    encode_a_masked,
    make_private_code,
    psgpd_decode,
    worker_compute,
)

PASS, FAIL = "PASS", "FAIL"


@dataclass(frozen=True)
class AuditConfig:
    modulus: int
    spec: PartitionSpec
    p_c: int = 1
    colluders: tuple = (1,)
    budget: int = 2_000_000

    def __post_init__(self):
        PrimeField(self.modulus)
        if self.modulus > 11:
            raise ValueError("exhaustive audits are limited to fields of size at most 11")
        if len(self.colluders) > self.p_c:
            raise ValueError(f"{len(self.colluders)} colluders exceed the protected set size {self.p_c}")

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.modulus)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = asdict(self.spec)
        d["colluders"] = list(self.colluders)
        return d


@dataclass
class Verdict:
    check: str
    config: dict
    verdict: str
    table_hashes: list = dc_field(default_factory=list)
    exhaustive: bool = True
    enumerated: int = 0
    details: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def table_hash(table: Counter) -> str:
    items = sorted((list(k), v) for k, v in table.items())
    return hashlib.sha256(json.dumps(items).encode()).hexdigest()


def _view(*mats) -> tuple:
    return tuple(int(v) for m in mats for v in np.asarray(m).reshape(-1))


def _enumerate(p: int, n: int, budget: int):
    size = p ** n
    if size > budget:
        raise BudgetExceeded(f"enumeration of {size} values exceeds the budget of {budget}")
    return itertools.product(range(p), repeat=n), size


def _secure_code(config: AuditConfig) -> SecureCodePlan:
    P = max(config.colluders, default=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_code(config.spec, P, config.p_c, config.field, points=EvalPointSet(range(1, P + 1)))


def share_table(config: AuditConfig, A, B, zero_keys: bool = False) -> tuple:
    """Distribution of the colluders' shares over all key values. Returns ``(table, size)``."""
    code = _secure_code(config)
    n = key_entry_count(code.a_map, code.b_map, config.spec)
    keyspace, size = ([(0,) * n], 1) if zero_keys else _enumerate(config.modulus, n, config.budget)
    table = Counter()
    for values in keyspace:
        keys = keys_from_values(code.field, code.a_map, code.b_map, config.spec, values)
        shares = encode_shares(A, B, code, keys=keys, workers=config.colluders)
        table[_view(*(m for sh in shares for m in (sh.A_p, sh.B_p)))] += 1
    return table, size


def secrecy_audit(config: AuditConfig, A1, B1, A2, B2, zero_keys: bool = False) -> Verdict:
    """PASS iff the colluders' share distribution is the same for ``(A1, B1)`` and ``(A2, B2)``.

    ``zero_keys`` forces every key block to zero, which must expose the inputs.
    """
    if not config.colluders:
        return Verdict("secrecy", config.as_dict(), PASS, details={"note": "no colluders"})
    t1, n1 = share_table(config, A1, B1, zero_keys)
    t2, n2 = share_table(config, A2, B2, zero_keys)
    assert sum(t1.values()) == n1 and sum(t2.values()) == n2
    return Verdict("secrecy", config.as_dict(), PASS if t1 == t2 else FAIL,
                   [table_hash(t1), table_hash(t2)], True, n1 + n2,
                   {"zero_keys": zero_keys, "distinct_views": [len(t1), len(t2)]})


def secrecy_audit_sampled(config: AuditConfig, A1, B1, A2, B2, samples: int, seed=0,
                          alpha: float = 0.01) -> Verdict:
    """Statistical fallback: chi-square homogeneity per share symbol, Bonferroni-corrected.

    Evidence only, not proof; used when the key space is out of exhaustive reach.
    """
    code = _secure_code(config)
    f = code.field
    n = key_entry_count(code.a_map, code.b_map, config.spec)
    rng = make_rng(seed)
    views = []
    for A, B in ((A1, B1), (A2, B2)):
        rows = []
        for _ in range(samples):
            keys = keys_from_values(f, code.a_map, code.b_map, config.spec, f.random_matrix(rng, (n,)))
            shares = encode_shares(A, B, code, keys=keys, workers=config.colluders)
            rows.append(_view(*(m for sh in shares for m in (sh.A_p, sh.B_p))))
        views.append(np.array(rows))
    n_sym = views[0].shape[1]
    pvals = []
    for c in range(n_sym):
        counts = np.array([np.bincount(v[:, c], minlength=f.modulus) for v in views])
        counts = counts[:, counts.sum(axis=0) > 0]
        pvals.append(1.0 if counts.shape[1] < 2 else stats.chi2_contingency(counts)[1])
    ok = min(pvals) >= alpha / n_sym
    return Verdict("secrecy", config.as_dict(), PASS if ok else FAIL, [], False, 2 * samples,
                   {"min_p_value": min(pvals), "alpha": alpha, "symbols": n_sym})


def _nonzero_tuples(p: int, k: int):
    return itertools.product(range(1, p), repeat=k)


def private_view_table(config: AuditConfig, L: int, kappa: int, A, library: PublicLibrary,
                       fixed_target: int | None = None, zero_mask: bool = False) -> tuple:
    """Distribution of one worker's ``(q_p, A_p, C_p)`` over decoys, its point and the mask.

    ``fixed_target`` pins the worker's point at ``kappa`` to a public constant
    and ``zero_mask`` forces the mask to zero; both are deliberate sabotage.
    """
    f = config.field
    p = f.modulus
    code = make_private_code(config.spec, 1, f)
    mask_size = int(np.prod(config.spec.a_block))
    targets = [fixed_target] if fixed_target is not None else range(1, p)
    masks, mask_count = ([(0,) * mask_size], 1) if zero_mask else _enumerate(p, mask_size, config.budget)
    size = (p - 1) ** (L - 1) * len(targets) * mask_count
    if size > config.budget:
        raise BudgetExceeded(f"enumeration of {size} values exceeds the budget of {config.budget}")
    masks = list(masks)
    table = Counter()
    for decoys in _nonzero_tuples(p, L - 1):
        for z in targets:
            entries = list(decoys[:kappa - 1]) + [z] + list(decoys[kappa - 1:])
            q = QueryVector(1, tuple(entries))
            for m in masks:
                mask = np.array(m, dtype=f.dtype).reshape(config.spec.a_block)
                (enc,), _ = encode_a_masked(A, code, [q], kappa, mask=mask)
                res = worker_compute(enc, q, library, code)
                table[_view(np.array(q.entries), enc.A_p, res.C_p)] += 1
    return table, size


def _tiny_inputs(config: AuditConfig, L: int, seed: int = 0):
    f = config.field
    rng = make_rng(seed)
    spec = config.spec
    A = f.random_matrix(rng, (spec.T, spec.S))
    lib = PublicLibrary([f.random_matrix(rng, (spec.S, spec.D)) for _ in range(L)])
    return A, lib


def privacy_audit(config: AuditConfig, L: int, kappa1: int, kappa2: int, A=None, library=None,
                  fixed_target: int | None = None) -> Verdict:
    """PASS iff a single worker's view has the same distribution for both indices."""
    if A is None or library is None:
        A0, lib0 = _tiny_inputs(config, L)
        A = A0 if A is None else A
        library = lib0 if library is None else library
    if kappa1 == kappa2:
        return Verdict("privacy", config.as_dict(), PASS, details={"note": "identical indices"})
    t1, n1 = private_view_table(config, L, kappa1, A, library, fixed_target)
    t2, n2 = private_view_table(config, L, kappa2, A, library, fixed_target)
    assert sum(t1.values()) == n1 and sum(t2.values()) == n2
    return Verdict("privacy", {**config.as_dict(), "L": L, "kappas": [kappa1, kappa2]},
                   PASS if t1 == t2 else FAIL, [table_hash(t1), table_hash(t2)], True, n1 + n2,
                   {"fixed_target": fixed_target})


def private_secrecy_audit(config: AuditConfig, A1, A2, L: int = 1, kappa: int = 1, library=None,
                          zero_mask: bool = False) -> Verdict:
    """PASS iff a single worker's view has the same distribution for ``A1`` and ``A2``."""
    if library is None:
        library = _tiny_inputs(config, L)[1]
    t1, n1 = private_view_table(config, L, kappa, A1, library, zero_mask=zero_mask)
    t2, n2 = private_view_table(config, L, kappa, A2, library, zero_mask=zero_mask)
    assert sum(t1.values()) == n1 and sum(t2.values()) == n2
    return Verdict("private_secrecy", {**config.as_dict(), "L": L, "kappa": kappa},
                   PASS if t1 == t2 else FAIL, [table_hash(t1), table_hash(t2)], True, n1 + n2,
                   {"zero_mask": zero_mask})


def threshold_failure_check(code, count: int, seed=0, L: int = 2, kappa: int = 1) -> Verdict:
    """Decode from exactly ``count`` results and check the outcome against the threshold.

    PASS iff ``count >= threshold`` decodes the right product, or
    ``count < threshold`` makes the decoder refuse with ``InsufficientShares``.
    """
    f = code.field
    spec = code.spec
    rng = make_rng(seed)
    A = f.random_matrix(rng, (spec.T, spec.S))
    need = code.threshold
    if isinstance(code, PrivateCodePlan):
        library = PublicLibrary([f.random_matrix(rng, (spec.S, spec.D)) for _ in range(L)])
        queries = build_queries(f, L, kappa, code.P, seed)
        encs, mask = encode_a_masked(A, code, queries, kappa, seed=seed)
        results = [worker_compute(e, q, library, code) for e, q in zip(encs, queries)][:count]
        expected = f.matmul(A, library[kappa])
        decode = lambda: psgpd_decode(results, code, library, queries, kappa, encs, mask)
    else:
        B = f.random_matrix(rng, (spec.S, spec.D))
        results = [worker_multiply(sh) for sh in encode_shares(A, B, code, seed=seed)][:count]
        expected = f.matmul(A, B)
        decode = lambda: decode_product(results, code)
    if len(results) < count:
        raise ValueError(f"code has only {code.P} workers, cannot supply {count} results")
    try:
        C = decode()
        outcome = "decoded" if np.array_equal(C, expected) else "wrong"
    except InsufficientShares:
        outcome = "refused"
    ok = outcome == ("decoded" if count >= need else "refused")
    return Verdict("threshold", {"split": list(spec.split), "count": count, "threshold": need,
                                 "family": type(code).__name__},
                   PASS if ok else FAIL, exhaustive=False, details={"outcome": outcome})
