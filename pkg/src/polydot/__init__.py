"""Secure and private coded distributed matrix multiplication over prime fields."""
from .errors import (
    BudgetExceeded,
    DuplicatePoint,
    FieldError,
    InconsistentQueries,
    InsufficientShares,
    InterferenceError,
    InverseOfZero,
    PartitionError,
    PolydotError,
    Unsupported,
)
from .field import EvalPointSet, PrimeField, interpolate, make_rng, sample_distinct_points
from .partition import PartitionSpec, Regime, build_augmentation, plan_augmentation
from .gpd import (
    SecureCodePlan,
    communication_load,
    complexity_estimate,
    decode_product,
    encode_shares,
    make_code,
    recovery_threshold,
    worker_multiply,
)
from .psgpd import (
    PrivateCodePlan,
    PublicLibrary,
    build_queries,
    encode_a_masked,
    make_private_code,
    psgpd_decode,
    worker_compute,
)
from .latency import (
    LatencyModel,
    analytic_completion_time,
    run_pipeline_timed,
    simulate_completion,
    tradeoff_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "EvalPointSet",
    "PrimeField",
    "interpolate",
    "make_rng",
    "sample_distinct_points",
    "PartitionSpec",
    "Regime",
    "build_augmentation",
    "plan_augmentation",
    "BudgetExceeded",
    "DuplicatePoint",
    "FieldError",
    "InconsistentQueries",
    "InsufficientShares",
    "InterferenceError",
    "InverseOfZero",
    "PartitionError",
    "PolydotError",
    "Unsupported",
    "SecureCodePlan",
    "communication_load",
    "complexity_estimate",
    "decode_product",
    "encode_shares",
    "make_code",
    "recovery_threshold",
    "worker_multiply",
    "PrivateCodePlan",
    "PublicLibrary",
    "build_queries",
    "encode_a_masked",
    "make_private_code",
    "psgpd_decode",
    "worker_compute",
    "LatencyModel",
    "analytic_completion_time",
    "run_pipeline_timed",
    "simulate_completion",
    "tradeoff_sweep",
]
