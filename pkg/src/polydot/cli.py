"""Command-line entry point: ``polydot {demo,tradeoff,simulate,audit,latency}``.

Configuration is layered: built-in defaults, then a preset (plus its per-command
section), then a ``--config`` JSON file, then explicit flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from importlib import resources

import numpy as np

from .audit import (
    FAIL,
    PASS,
    AuditConfig,
    privacy_audit,
    private_secrecy_audit,
    secrecy_audit,
    threshold_failure_check,
)
from .errors import PolydotError
from .field import DEFAULT_MODULUS, PrimeField, make_rng
from .gpd import decode_product, encode_shares, make_code, worker_multiply
from .latency import (
    CSV_HEADER,
    FAMILIES,
    LatencyModel,
    family_threshold,
    latency_curve,
    run_pipeline_timed,
    simulate_completion,
    tradeoff_sweep,
)
from .partition import PartitionSpec
from .psgpd import PublicLibrary, build_queries, encode_a_masked, make_private_code, psgpd_decode, worker_compute

COMMANDS = ("demo", "tradeoff", "simulate", "audit", "latency")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    family: str = "SGPD"
    field: int = DEFAULT_MODULUS
    dims: tuple | None = None
    split: tuple = (2, 2, 2)
    splits: tuple = ()
    P: int = 12
    pc: tuple = (0,)
    L: int = 1
    kappa: int = 1
    seed: int = 0
    trials: int = 100_000
    pr: int | None = None
    m: int = 36
    n: int = 36
    mu: float | None = None
    T_min: float = 1.0
    R_comm: float = math.inf
    rcomm_grid: tuple = (1e4, 1e12, 33)
    sabotage: bool = False
    out: str | None = None

    @property
    def dimensions(self) -> tuple:
        if self.dims is not None:
            return self.dims
        return (1008, 1008, 1008) if self.command in ("tradeoff", "latency") else (4, 4, 4)

    @property
    def spec(self) -> PartitionSpec:
        return PartitionSpec(*self.dimensions, *self.split)

    @property
    def model(self) -> LatencyModel:
        if self.mu is None:
            raise ConfigError("--mu is required for latency figures")
        return LatencyModel(self.T_min, self.mu, self.R_comm)

    @property
    def p_c(self) -> int:
        return self.pc[0]

    def families(self) -> list:
        fams = [f.strip().upper() for f in self.family.split(",")]
        for f in fams:
            if f not in FAMILIES:
                raise ConfigError(f"unknown family {f!r}; choose from {', '.join(FAMILIES)}")
        return fams


def _ints(text, sep: str, count: int | None, name: str) -> tuple:
    if isinstance(text, (list, tuple)):
        vals = tuple(int(v) for v in text)
    else:
        try:
            vals = tuple(int(v) for v in str(text).split(sep))
        except ValueError:
            raise ConfigError(f"--{name}: expected integers separated by {sep!r}, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"--{name}: expected {count} values, got {len(vals)}")
    return vals


def _grid(text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"--rcomm-grid: expected lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--rcomm-grid: cannot parse {text!r}") from None
    if not 0 < lo <= hi or steps < 1:
        raise ConfigError("--rcomm-grid: need 0 < lo <= hi and steps >= 1")
    return lo, hi, steps


def _splits(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(_ints(s, ",", 3, "splits") for s in text)
    return tuple(_ints(s, ",", 3, "splits") for s in str(text).split(";") if s.strip())


_PARSERS = {
    "dims": lambda v: _ints(v, "x", 3, "dims"),
    "split": lambda v: _ints(v, ",", 3, "split"),
    "splits": _splits,
    "pc": lambda v: _ints(v, ",", None, "pc"),
    "rcomm_grid": _grid,
    "field": int, "P": int, "L": int, "kappa": int, "seed": int, "trials": int, "m": int, "n": int,
    "pr": lambda v: None if v is None else int(v),
    "mu": lambda v: None if v is None else float(v), "T_min": float, "R_comm": float,
    "family": str, "out": str, "sabotage": bool,
}


def load_preset(name: str) -> dict:
    try:
        text = resources.files("polydot").joinpath("presets", f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
    return json.loads(text)


def preset_names() -> list:
    root = resources.files("polydot").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _apply(values: dict, layer: dict, source: str):
    known = {f.name for f in fields(RunConfig)} - {"command"}
    for key, raw in layer.items():
        if key in COMMANDS:
            continue
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{source}: unknown setting {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.preset:
        preset = load_preset(args.preset)
        _apply(values, preset, f"preset {args.preset}")
        _apply(values, preset.get(args.command, {}), f"preset {args.preset}/{args.command}")
    if args.config:
        try:
            with open(args.config) as fh:
                layer = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        _apply(values, layer, args.config)
        _apply(values, layer.get(args.command, {}), f"{args.config}/{args.command}")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "preset", "config") and v is not None}
    if not flags.get("sabotage"):
        flags.pop("sabotage", None)
    _apply(values, flags, "flags")
    cfg = RunConfig(command=args.command, **values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    PrimeField(cfg.field)
    cfg.families()
    if any(v < 0 for v in cfg.pc) or not cfg.pc:
        raise ConfigError("--pc values must be non-negative")
    if cfg.P < 1:
        raise ConfigError("--P must be positive")
    if not 1 <= cfg.kappa <= cfg.L:
        raise ConfigError(f"--kappa must lie in [1, L={cfg.L}]")
    if cfg.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if cfg.command in ("demo", "simulate", "audit"):
        cfg.spec
    if cfg.command in ("simulate", "latency"):
        cfg.model


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _run_secure(cfg: RunConfig, spec: PartitionSpec, f: PrimeField, rng, family: str):
    p_c = 0 if family == "GPD" else cfg.p_c
    if family == "GPD" and cfg.p_c != 0:
        raise ConfigError("the plain code has no protection; use --pc 0 or --family SGPD")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code = make_code(spec, cfg.P, p_c, f, seed=cfg.seed)
    if cfg.P < code.threshold:
        raise ConfigError(f"--P {cfg.P} is below the recovery threshold {code.threshold}")
    A = f.random_matrix(rng, (spec.T, spec.S))
    B = f.random_matrix(rng, (spec.S, spec.D))
    shares = encode_shares(A, B, code, seed=int(rng.integers(2**62)))
    results = [worker_multiply(sh) for sh in shares]
    chosen = sorted(int(w) for w in rng.permutation(cfg.P)[:code.threshold])
    C = decode_product([results[w] for w in chosen], code)
    return code, C, f.matmul(A, B), [w + 1 for w in chosen], p_c


def _run_private(cfg: RunConfig, spec: PartitionSpec, f: PrimeField, rng):
    code = make_private_code(spec, cfg.P, f)
    if cfg.P < code.threshold:
        raise ConfigError(f"--P {cfg.P} is below the recovery threshold {code.threshold}")
    A = f.random_matrix(rng, (spec.T, spec.S))
    library = PublicLibrary([f.random_matrix(rng, (spec.S, spec.D)) for _ in range(cfg.L)])
    queries = build_queries(f, cfg.L, cfg.kappa, cfg.P, int(rng.integers(2**62)))
    encs, mask = encode_a_masked(A, code, queries, cfg.kappa, seed=int(rng.integers(2**62)))
    results = [worker_compute(e, q, library, code) for e, q in zip(encs, queries)]
    chosen = sorted(int(w) for w in rng.permutation(cfg.P)[:code.threshold])
    C = psgpd_decode([results[w] for w in chosen], code, library, queries, cfg.kappa, encs, mask)
    return code, C, f.matmul(A, library[cfg.kappa]), [w + 1 for w in chosen], 1


def cmd_demo(cfg: RunConfig) -> int:
    f, spec = PrimeField(cfg.field), cfg.spec
    family = cfg.families()[0]
    rng = make_rng(cfg.seed)
    if family == "PSGPD":
        code, C, expected, used, p_c = _run_private(cfg, spec, f, rng)
    else:
        code, C, expected, used, p_c = _run_secure(cfg, spec, f, rng, family)
    ok = bool(np.array_equal(C, expected))
    lines = [
        f"family: {family}",
        f"field: {f.modulus}",
        f"dims: {spec.T}x{spec.S}x{spec.D}",
        f"split: {spec.t},{spec.s},{spec.d}",
        f"P_C: {p_c}",
        f"P: {cfg.P}",
        f"P_R: {code.threshold}",
    ]
    if family == "PSGPD":
        lines += [f"L: {cfg.L}", f"kappa: {cfg.kappa}"]
    lines += [f"workers used: {','.join(map(str, used))}", f"C == A*B: {str(ok).lower()}"]
    _emit(cfg, "\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_tradeoff(cfg: RunConfig) -> int:
    model = cfg.model if cfg.mu is not None else None
    buf = io.StringIO()
    first = True
    for family in cfg.families():
        result = tradeoff_sweep(cfg.m, cfg.n, cfg.P, cfg.pc, family, cfg.dimensions, model)
        text = result.to_csv()
        buf.write(text if first else text.split("\n", 1)[1])
        first = False
    _emit(cfg, buf.getvalue())
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    f, spec = PrimeField(cfg.field), cfg.spec
    family = cfg.families()[0]
    rng = make_rng(cfg.seed)
    A = f.random_matrix(rng, (spec.T, spec.S))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if family == "PSGPD":
            code = make_private_code(spec, cfg.P, f)
            library = PublicLibrary([f.random_matrix(rng, (spec.S, spec.D)) for _ in range(cfg.L)])
            B = library[cfg.kappa]
        else:
            code = make_code(spec, cfg.P, 0 if family == "GPD" else cfg.p_c, f, seed=cfg.seed)
            library, B = None, f.random_matrix(rng, (spec.S, spec.D))
    if cfg.P < code.threshold:
        raise ConfigError(f"--P {cfg.P} is below the recovery threshold {code.threshold}")
    run = run_pipeline_timed(code, A, B, cfg.model, cfg.seed, library=library, kappa=cfg.kappa)
    ok = bool(np.array_equal(run.C, f.matmul(A, B)))
    P_R = cfg.pr if cfg.pr is not None else code.threshold
    mc = simulate_completion(cfg.model, spec, cfg.P, P_R, cfg.trials, cfg.seed)
    report = {
        "family": family,
        "split": list(spec.split),
        "P": cfg.P,
        "pipeline": {
            "correct": ok,
            "P_R": code.threshold,
            "completion_time": run.completion_time,
            "workers_used": sorted(run.workers_used),
        },
        "monte_carlo": {
            "P_R": P_R,
            "trials": cfg.trials,
            "mean": mc.mean,
            "std": mc.std,
            "analytic": mc.analytic,
            "relative_error": mc.relative_error,
        },
        "seed": cfg.seed,
    }
    _emit(cfg, _dump(report))
    return 0 if ok else 1


def _check_field(cfg: RunConfig, need: int) -> PrimeField:
    # exhaustive audits use a tiny field; decodability needs more points than that
    return PrimeField(cfg.field) if cfg.field > need + 1 else PrimeField(101 if need < 100 else DEFAULT_MODULUS)


def _distinct_pair(f: PrimeField, rng, shape) -> tuple:
    """Two different random matrices; equal inputs would make any audit pass trivially."""
    first = f.random_matrix(rng, shape)
    while True:
        second = f.random_matrix(rng, shape)
        if not np.array_equal(first, second):
            return first, second


def cmd_audit(cfg: RunConfig) -> int:
    spec = cfg.spec
    family = cfg.families()[0]
    rng = make_rng(cfg.seed)
    f = PrimeField(cfg.field)
    checks = []
    if family == "PSGPD":
        config = AuditConfig(cfg.field, spec, p_c=1, colluders=(1,))
        A1, A2 = _distinct_pair(f, rng, (spec.T, spec.S))
        library = PublicLibrary([f.random_matrix(rng, (spec.S, spec.D)) for _ in range(cfg.L)])
        checks.append(private_secrecy_audit(config, A1, A2, cfg.L, cfg.kappa, library, zero_mask=cfg.sabotage))
        for k in range(2, cfg.L + 1):
            checks.append(privacy_audit(config, cfg.L, 1, k, A1, library,
                                        fixed_target=1 if cfg.sabotage else None))
        need = make_private_code(spec, 1, f).threshold
        fc = _check_field(cfg, need)
        code = make_private_code(spec, need, fc)
    else:
        p_c = 0 if family == "GPD" else cfg.p_c
        config = AuditConfig(cfg.field, spec, p_c=p_c, colluders=tuple(range(1, p_c + 1)))
        A1, A2 = _distinct_pair(f, rng, (spec.T, spec.S))
        B1, B2 = _distinct_pair(f, rng, (spec.S, spec.D))
        checks.append(secrecy_audit(config, A1, B1, A2, B2, zero_keys=cfg.sabotage))
        need = family_threshold("SGPD", spec, p_c)[0]
        fc = _check_field(cfg, need)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = make_code(spec, need, p_c, fc, seed=cfg.seed)
    for count in (need - 1, need):
        checks.append(threshold_failure_check(code, count, seed=cfg.seed, L=max(cfg.L, 2), kappa=cfg.kappa))
    verdict = PASS if all(c.passed for c in checks) else FAIL
    _emit(cfg, _dump({"family": family, "sabotage": cfg.sabotage, "verdict": verdict,
                      "checks": [asdict(c) for c in checks]}))
    if verdict == FAIL:
        failed = [c.check for c in checks if not c.passed]
        sys.stderr.write(json.dumps({"error": "verdict FAIL", "failed_checks": failed}) + "\n")
        return 1
    return 0


def cmd_latency(cfg: RunConfig) -> int:
    splits = cfg.splits or (cfg.split,)
    lo, hi, steps = cfg.rcomm_grid
    rates = np.geomspace(lo, hi, steps) if steps > 1 else np.array([lo])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER + ("R_comm",))
    family = cfg.families()[0]
    p_c = 1 if family == "PSGPD" else (0 if family == "GPD" else cfg.p_c)
    for row in latency_curve(cfg.model, splits, cfg.P, p_c, cfg.dimensions, rates, family):
        w.writerow([row[k] for k in CSV_HEADER] + [row["R_comm"]])
    _emit(cfg, buf.getvalue())
    return 0


HANDLERS = {"demo": cmd_demo, "tradeoff": cmd_tradeoff, "simulate": cmd_simulate,
            "audit": cmd_audit, "latency": cmd_latency}


def dispatch(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": message, "type": "usage"}) + "\n")
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--preset", help="bundled parameter set (%s)" % ", ".join(preset_names()))
    common.add_argument("--config", help="JSON file of settings; flags override it")
    common.add_argument("--family", help="GPD, SGPD or PSGPD (comma list for tradeoff)")
    common.add_argument("--field", type=int, help="prime modulus")
    common.add_argument("--dims", help="matrix dimensions TxSxD")
    common.add_argument("--split", help="block counts t,s,d")
    common.add_argument("--splits", help="several splits for latency, t,s,d;t,s,d")
    common.add_argument("--P", type=int, help="number of workers")
    common.add_argument("--pc", help="collusion set size(s), comma separated")
    common.add_argument("--L", type=int, help="library size")
    common.add_argument("--kappa", type=int, help="requested library index (1-based)")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="Monte-Carlo trials")
    common.add_argument("--pr", type=int, help="override P_R for the Monte-Carlo run")
    common.add_argument("--m", type=int, help="ts for tradeoff sweeps")
    common.add_argument("--n", type=int, help="sd for tradeoff sweeps")
    common.add_argument("--mu", type=float, help="computation rate")
    common.add_argument("--T-min", dest="T_min", type=float, help="minimum computation time")
    common.add_argument("--R-comm", dest="R_comm", type=float, help="link rate, symbols per second")
    common.add_argument("--rcomm-grid", dest="rcomm_grid", help="log-spaced link rates lo:hi:steps")
    common.add_argument("--sabotage", action="store_true", help="audit a deliberately broken encoder")
    common.add_argument("--out", help="write the artifact here instead of stdout")

    parser = _Parser(prog="polydot", description="Secure and private coded matrix multiplication.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "demo": "encode, compute, decode and verify one product",
        "tradeoff": "threshold and load sweep as CSV",
        "simulate": "timed pipeline plus Monte-Carlo completion statistics",
        "audit": "exhaustive secrecy, privacy and threshold verdicts as JSON",
        "latency": "analytic completion time over a grid of link rates as CSV",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return dispatch(cfg)
    except (ConfigError, PolydotError, ValueError, NotImplementedError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "type": type(exc).__name__}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
