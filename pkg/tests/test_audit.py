import json

import numpy as np
import pytest

from polydot.audit import (
    FAIL,
    PASS,
    AuditConfig,
    privacy_audit,
    private_secrecy_audit,
    private_view_table,
    secrecy_audit,
    secrecy_audit_sampled,
    share_table,
    threshold_failure_check,
)
from polydot.errors import BudgetExceeded
from polydot.field import PrimeField, make_rng
from polydot.gpd import make_code
from polydot.partition import PartitionSpec
from polydot.psgpd import PublicLibrary, make_private_code

F5 = PrimeField(5)


def pairs(spec, seed=0, f=F5):
    rng = make_rng(seed)
    mk = lambda: (f.random_matrix(rng, (spec.T, spec.S)), f.random_matrix(rng, (spec.S, spec.D)))
    return (*mk(), *mk())


def test_config_validation():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    with pytest.raises(ValueError):
        AuditConfig(13, spec)
    with pytest.raises(ValueError):
        AuditConfig(5, spec, p_c=1, colluders=(1, 2))


def test_vacuous_without_colluders():
    v = secrecy_audit(AuditConfig(5, PartitionSpec(2, 2, 2, 1, 2, 1), p_c=0, colluders=()), *pairs(
        PartitionSpec(2, 2, 2, 1, 2, 1)))
    assert v.verdict == PASS


def test_wide_regime_secrecy_and_sabotage():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    cfg = AuditConfig(5, spec, p_c=1)
    A1, B1, A2, B2 = pairs(spec)
    v = secrecy_audit(cfg, A1, B1, A2, B2)
    assert v.verdict == PASS and v.enumerated == 2 * 625 and v.exhaustive
    assert v.table_hashes[0] == v.table_hashes[1]
    assert secrecy_audit(cfg, A1, B1, A2, B2, zero_keys=True).verdict == FAIL


def test_tall_regime_secrecy_and_sabotage():
    spec = PartitionSpec(2, 1, 1, 2, 1, 1)
    cfg = AuditConfig(5, spec, p_c=1)
    A1, B1, A2, B2 = pairs(spec, seed=3)
    assert secrecy_audit(cfg, A1, B1, A2, B2).verdict == PASS
    assert secrecy_audit(cfg, A1, B1, A2, B2, zero_keys=True).verdict == FAIL


def test_two_colluders():
    spec = PartitionSpec(2, 1, 1, 2, 1, 1)
    cfg = AuditConfig(5, spec, p_c=2, colluders=(1, 2))
    assert secrecy_audit(cfg, *pairs(spec, seed=4)).verdict == PASS


def test_table_counts_sum_to_key_space():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    A, B, _, _ = pairs(spec)
    table, size = share_table(AuditConfig(5, spec, p_c=1), A, B)
    assert size == 625 and sum(table.values()) == 625
    # the shares are a bijective image of the 4 key symbols
    assert len(table) == 625


def test_budget_exceeded():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    cfg = AuditConfig(5, spec, p_c=1, budget=100)
    with pytest.raises(BudgetExceeded):
        secrecy_audit(cfg, *pairs(spec))


def test_sampled_fallback_passes_secure_code():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    v = secrecy_audit_sampled(AuditConfig(5, spec, p_c=1), *pairs(spec), samples=2000, seed=1)
    assert v.verdict == PASS and not v.exhaustive


def test_verdict_json_is_stable():
    spec = PartitionSpec(2, 2, 2, 1, 2, 1)
    cfg = AuditConfig(5, spec, p_c=1)
    a = secrecy_audit(cfg, *pairs(spec)).to_json()
    b = secrecy_audit(cfg, *pairs(spec)).to_json()
    assert a == b and json.loads(a)["verdict"] == PASS


def test_private_secrecy_and_sabotage():
    spec = PartitionSpec(1, 1, 1, 1, 1, 1)
    cfg = AuditConfig(5, spec)
    A1, A2 = np.array([[1]]), np.array([[3]])
    assert private_secrecy_audit(cfg, A1, A2).verdict == PASS
    assert private_secrecy_audit(cfg, A1, A2, zero_mask=True).verdict == FAIL
    assert private_secrecy_audit(cfg, A1, A2, L=2, kappa=2).verdict == PASS


def test_privacy_and_sabotage():
    spec = PartitionSpec(1, 1, 1, 1, 1, 1)
    cfg = AuditConfig(5, spec)
    assert privacy_audit(cfg, 1, 1, 1).verdict == PASS
    v = privacy_audit(cfg, 2, 1, 2)
    assert v.verdict == PASS and v.enumerated == 2 * 4 * 4 * 5
    assert privacy_audit(cfg, 2, 1, 2, fixed_target=1).verdict == FAIL


def test_private_view_counts():
    spec = PartitionSpec(1, 1, 1, 1, 1, 1)
    cfg = AuditConfig(5, spec)
    lib = PublicLibrary([np.array([[2]]), np.array([[4]])])
    table, size = private_view_table(cfg, 2, 1, np.array([[1]]), lib)
    assert sum(table.values()) == size == 80


@pytest.mark.parametrize("count,expected", [(0, "refused"), (1, "decoded")])
def test_threshold_check_trivial(count, expected):
    code = make_code(PartitionSpec(2, 2, 2, 1, 1, 1), 2, 0, PrimeField(101))
    v = threshold_failure_check(code, count)
    assert v.verdict == PASS and v.details["outcome"] == expected


def test_threshold_check_secure():
    code = make_code(PartitionSpec(6, 4, 4, 3, 2, 2), 30, 2, PrimeField(101))
    assert code.threshold == 25
    assert threshold_failure_check(code, 24).details["outcome"] == "refused"
    assert threshold_failure_check(code, 25).details["outcome"] == "decoded"


def test_threshold_check_private():
    code = make_private_code(PartitionSpec(2, 1, 2, 2, 1, 2), 8, PrimeField(101))
    assert code.threshold == 6
    assert threshold_failure_check(code, 5).verdict == PASS
    v = threshold_failure_check(code, 6, L=3, kappa=2)
    assert v.verdict == PASS and v.details["outcome"] == "decoded"
