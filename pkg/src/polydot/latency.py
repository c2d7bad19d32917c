"""Completion-time model, Monte-Carlo harness, timed pipeline and trade-off sweeps.

Worker computation times are shifted exponentials whose rate scales with the
number of multiplications a worker performs, ``mu * TSD / (tsd)``. The master
waits for the ``P_R``-th fastest worker, then downloads ``P_R`` result blocks over
one shared link of rate ``R_comm``.
"""
from __future__ import annotations

import csv
import io
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import Unsupported
from .field import make_rng
from .gpd import communication_load, decode_product, encode_shares, recovery_threshold, worker_multiply
from .partition import PartitionSpec, max_degree, plan_augmentation
from .psgpd import (
    PrivateCodePlan,
    build_queries,
    encode_a_masked,
    psgpd_decode,
    psgpd_maps,
    worker_compute,
)


@dataclass(frozen=True)
class LatencyModel:
    T_min: float
    mu: float
    R_comm: float = math.inf

    def __post_init__(self):
        for name in ("T_min", "mu", "R_comm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def with_rate(self, R_comm: float) -> "LatencyModel":
        return LatencyModel(self.T_min, self.mu, R_comm)


@lru_cache(maxsize=4096)
def harmonic(n: int) -> float:
    """``H_n = sum_{i=1}^n 1/i`` by direct summation, ``H_0 = 0``."""
    if n < 0:
        raise ValueError("harmonic number of a negative index")
    return math.fsum(1.0 / i for i in range(1, n + 1))


def excess_scale(model: LatencyModel, spec: PartitionSpec) -> float:
    """Mean excess computation time of one worker, ``tsd / (mu TSD)``."""
    return spec.t * spec.s * spec.d / (model.mu * spec.T * spec.S * spec.D)


def communication_time(model: LatencyModel, spec: PartitionSpec, P_R: int, shared_link: bool = True) -> float:
    """Download time. ``shared_link=False`` is a non-default variant where workers upload in parallel."""
    symbols = communication_load(P_R, spec) if shared_link else spec.T * spec.D // (spec.t * spec.d)
    return symbols / model.R_comm


def analytic_completion_time(model: LatencyModel, spec: PartitionSpec, P: int, P_R: int,
                             shared_link: bool = True) -> float:
    if not 1 <= P_R <= P:
        raise ValueError(f"need 1 <= P_R <= P, got P_R={P_R}, P={P}")
    comp = excess_scale(model, spec) * (harmonic(P) - harmonic(P - P_R))
    return model.T_min + comp + communication_time(model, spec, P_R, shared_link)


def sample_delays(model: LatencyModel, spec: PartitionSpec, size, rng) -> np.ndarray:
    scale = excess_scale(model, spec)
    return model.T_min + rng.exponential(scale, size=size) if scale > 0 else np.full(size, float(model.T_min))


@dataclass
class SimulationSummary:
    mean: float
    std: float
    samples: np.ndarray
    analytic: float

    @property
    def relative_error(self) -> float:
        return abs(self.mean - self.analytic) / self.analytic


def simulate_completion(model: LatencyModel, spec: PartitionSpec, P: int, P_R: int, trials: int, seed,
                        shared_link: bool = True, chunk: int = 20_000) -> SimulationSummary:
    """Draw ``P`` i.i.d. delays per trial and keep the ``P_R``-th smallest."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 1 <= P_R <= P:
        raise ValueError(f"need 1 <= P_R <= P, got P_R={P_R}, P={P}")
    rng = make_rng(seed)
    comm = communication_time(model, spec, P_R, shared_link)
    rows = max(1, chunk * 100 // P)
    out = []
    done = 0
    while done < trials:
        k = min(rows, trials - done)
        delays = sample_delays(model, spec, (k, P), rng)
        out.append(np.partition(delays, P_R - 1, axis=1)[:, P_R - 1] + comm)
        done += k
    samples = np.concatenate(out)
    return SimulationSummary(float(samples.mean()), float(samples.std()), samples,
                             analytic_completion_time(model, spec, P, P_R, shared_link))


@dataclass
class PipelineRun:
    C: np.ndarray
    completion_time: float
    workers_used: list
    delays: np.ndarray


def run_pipeline_timed(code, A, B, model: LatencyModel, seed, library=None, kappa: int = 1,
                       max_threads: int = 8) -> PipelineRun:
    """Run every worker concurrently with simulated delays and decode from the first arrivals.

    Arrival order is fixed by the sampled delays (ties broken by worker id), so
    the outcome does not depend on thread scheduling. Workers still running once
    enough results are in are cancelled cooperatively. For a
    :class:`PrivateCodePlan` pass ``library`` and ``kappa``; ``B`` is ignored.
    """
    rng = make_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=2)
    delays = sample_delays(model, code.spec, code.P, rng)
    need = code.threshold
    if code.P < need:
        raise ValueError(f"P={code.P} is below the recovery threshold {need}")
    if isinstance(code, PrivateCodePlan):
        queries = build_queries(code.field, library.L, kappa, code.P, int(seeds[0]))
        encs, mask = encode_a_masked(A, code, queries, kappa, seed=int(seeds[1]))
        jobs = [lambda e=e, q=q, w=w: worker_compute(e, q, library, code, float(delays[w]))
                for w, (e, q) in enumerate(zip(encs, queries))]
    else:
        shares = encode_shares(A, B, code, seed=int(seeds[1]))
    cancel = threading.Event()
    order = sorted(range(code.P), key=lambda w: (delays[w], w))
    collected = []
    with ThreadPoolExecutor(max_workers=max_threads) as pool:
        if isinstance(code, PrivateCodePlan):
            futures = [pool.submit(job) for job in jobs]
        else:
            futures = [pool.submit(worker_multiply, sh, cancel, float(delays[w])) for w, sh in enumerate(shares)]
        for w in order:
            res = futures[w].result()
            collected.append(res)
            if len(collected) == need:
                break
        cancel.set()
        for fut in futures:
            fut.cancel()
    if isinstance(code, PrivateCodePlan):
        C = psgpd_decode(collected, code, library, queries, kappa, encs, mask)
    else:
        C = decode_product(collected, code)
    finish = float(delays[order[need - 1]]) + communication_time(model, code.spec, need)
    return PipelineRun(C, finish, [r.worker_id for r in collected], delays)


FAMILIES = ("GPD", "SGPD", "PSGPD")
CSV_HEADER = ("family", "t", "s", "d", "P_C", "P_R", "C_L", "E_T")


@dataclass
class SweepRow:
    family: str
    t: int
    s: int
    d: int
    P_C: int
    P_R: int
    C_L: int
    E_T_analytic: float | None = None
    E_T_empirical: float | None = None
    formula_P_R: int | None = None


@dataclass
class SweepResult:
    T: int
    S: int
    D: int
    P: int
    rows: list = dc_field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.family, r.t, r.s, r.d, r.P_C, r.P_R, r.C_L,
                        "" if r.E_T_analytic is None else repr(r.E_T_analytic)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def factorizations(m: int, n: int, dims=None) -> list:
    """All ``(t, s, d)`` with ``ts = m`` and ``sd = n`` (and ``t|T, s|S, d|D`` when dims are given)."""
    out = []
    for s in range(1, gcd(m, n) + 1):
        if m % s or n % s:
            continue
        t, d = m // s, n // s
        if dims is not None:
            T, S, D = dims
            if T % t or S % s or D % d:
                continue
        out.append((t, s, d))
    return out


def family_threshold(family: str, spec: PartitionSpec, p_c: int) -> tuple:
    """``(symbolic P_R, closed-form P_R)`` for one code family."""
    from .psgpd import psgpd_threshold

    if family == "PSGPD":
        if p_c != 1:
            raise Unsupported("the private code only supports p_c = 1")
        a, b = psgpd_maps(spec)
        return max_degree(a, b) + 1, psgpd_threshold(spec)
    if family == "GPD" and p_c != 0:
        raise ValueError("the plain code has p_c = 0")
    plan = plan_augmentation(spec, p_c)
    rep = recovery_threshold(plan, spec)
    return rep.P_R, rep.formula_P_R


def tradeoff_sweep(m: int, n: int, P: int, pc_list=(0,), family: str = "SGPD", dims=(1008, 1008, 1008),
                   model: LatencyModel | None = None) -> SweepResult:
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    T, S, D = dims
    if family == "GPD":
        pc_list = (0,)
    elif family == "PSGPD":
        pc_list = (1,)
    result = SweepResult(T, S, D, P)
    for p_c in pc_list:
        for t, s, d in factorizations(m, n, dims):
            spec = PartitionSpec(T, S, D, t, s, d)
            P_R, formula = family_threshold(family, spec, p_c)
            E_T = analytic_completion_time(model, spec, P, P_R) if model is not None and P_R <= P else None
            result.rows.append(SweepRow(family, t, s, d, p_c, P_R, communication_load(P_R, spec), E_T,
                                        formula_P_R=formula))
    return result


def latency_curve(model: LatencyModel, splits, P: int, p_c: int, dims, rates, family: str = "SGPD") -> list:
    """Analytic ``E[T]`` for each split over a grid of link rates; one dict per (split, rate)."""
    T, S, D = dims
    rows = []
    for t, s, d in splits:
        spec = PartitionSpec(T, S, D, t, s, d)
        P_R, _ = family_threshold(family, spec, p_c)
        for R in rates:
            rows.append({"family": family, "t": t, "s": s, "d": d, "P_C": p_c, "P_R": P_R,
                         "C_L": communication_load(P_R, spec), "R_comm": float(R),
                         "E_T": analytic_completion_time(model.with_rate(float(R)), spec, P, P_R)})
    return rows
