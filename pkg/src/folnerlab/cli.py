"""Command-line experiment runner.

Every subcommand reads an optional JSON config (validated; unknown keys are
rejected), applies command-line overrides, and writes CSV tables plus a
JSON manifest into the output directory::

    folnerlab realize --map cocycle --eps 0.1 --seed 0 --out runs/cocycle
    folnerlab certify --map birkhoff:const=1 --error zero
    folnerlab certify --map counterexample --riesz-error l1budget=10

Exit status: 0 when the run passes, 2 when a certification fails (a witness
is written), 1 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from typing import Any, Sequence

import jsonschema
import numpy as np

from . import __version__
from ._parallel import default_threads
from .additivity import (CombinedPartitions, ErrorMap, GridPartitions, IntervalCompositions, SingletonPartitions,
                         TilingPartitions, certify_almost_additive, certify_riesz_family, divergence_partial_sum,
                         riesz_budget_family)
from .folner import CofinalScale, DEFAULT_LEVEL_CAP, box_folner
from .gallery import DEFAULT_A0, DEFAULT_A1, GALLERY, describe, gallery_entry, parse_map_spec
from .lattice import Box
from .realization import DEFAULT_TILE_CAP, NoAdmissibleTile, extract_realization, verify_realization
from .sequences import (ErrorSequence, cocycle_constant, erdos_approximant, lyapunov_profile, matrix_cocycle_seq)
from .shift import CylinderFunction
from .ergodic import ShiftSystem, pointwise_experiment

SUBCOMMANDS = ("certify", "realize", "lyapunov", "erdos", "converge", "gallery")
SAMPLED_MAPS = ("cocycle", "weak-gibbs", "bernoulli-birkhoff")

_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_pos_int = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "dim": {"type": "integer", "enum": [1, 2]},
        "threads": _pos_int,
        "out": {"type": "string"},
        "map": {"type": "string"},
        "map_params": {
            "type": "object", "additionalProperties": False,
            "properties": {"samples": _pos_int, "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        },
        "error": {"type": "string"},
        "riesz_error": {"type": "string"},
        "partitions": {"type": "array", "items": {"type": "string"}},
        "family": {
            "type": "object", "additionalProperties": False,
            "properties": {"max_side": _pos_int, "sizes": {"type": "array", "items": _pos_int}},
        },
        "tiling": {"type": "object", "additionalProperties": False, "properties": {"m": _pos_int}},
        "scale": {"type": "object", "additionalProperties": False, "properties": {"cap": _pos_int}},
        "epsilon0": {"type": "number", "exclusiveMinimum": 0},
        "tile_cap": _pos_int,
        "phi_condition": {"type": "boolean"},
        "battery": {
            "type": "object", "additionalProperties": False,
            "properties": {"grid": {"type": "integer", "minimum": 0}, "n_random": {"type": "integer", "minimum": 0}},
        },
        "n_max": _pos_int,
        "schedule": {"type": "array", "minItems": 1, "items": _pos_int},
        "samples": _pos_int,
        "matrices": {"type": "array", "minItems": 1, "maxItems": 2, "items": _matrix},
        "error_sequence": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["zero", "constant", "power"]},
                           "c": {"type": "number", "minimum": 0}, "a": {"type": "number"}},
        },
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "terms": _pos_int,
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "trials": _pos_int,
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "required_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

# keys that may not change any table; they are left out of the config hash
_RUNTIME_KEYS = ("threads", "out")


class UsageError(Exception):
    """Bad flags, bad config, or an unusable output directory (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# formatting ----------------------------------------------------------------------

def fmt(x) -> str:
    """One CSV cell; floats carry 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating, Fraction)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def dump_json(obj) -> str:
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


class Table:
    """Named columns, per-column units, and rows."""

    def __init__(self, columns: Sequence[str], units: Sequence[str], title: str = ""):
        if len(columns) != len(units):
            raise ValueError("one unit per column")
        self.columns = list(columns)
        self.units = list(units)
        self.title = title
        self.rows: list = []

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")
        self.rows.append(row)

    def render(self) -> str:
        buf = io.StringIO()
        if self.title:
            buf.write(f"# {self.title}\n")
        for c, u in zip(self.columns, self.units):
            buf.write(f"# {c}: {u}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(x) for x in r])
        return buf.getvalue()


class Run:
    """Collects the files of one invocation before they are written."""

    def __init__(self):
        self.tables: dict[str, Table] = {}
        self.documents: dict[str, Any] = {}
        self.status = 0
        self.messages: list[str] = []

    def say(self, msg: str):
        self.messages.append(msg)


# config --------------------------------------------------------------------------

def _field_path(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise UsageError(f"config error at {_field_path(e)}: {e.message}")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config error at <root>: expected a JSON object")
    return cfg


def config_hash(cfg: dict, subcommand: str) -> str:
    body = {k: v for k, v in cfg.items() if k not in _RUNTIME_KEYS}
    text = json.dumps({"subcommand": subcommand, "config": body}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def effective_config(args) -> dict:
    cfg = copy.deepcopy(load_config(args.config))
    validate_config(cfg)
    overrides = {
        "seed": args.seed, "threads": args.threads, "out": args.out,
        "map": getattr(args, "map", None), "error": getattr(args, "error", None),
        "riesz_error": getattr(args, "riesz_error", None), "epsilon0": getattr(args, "eps", None),
        "epsilon": getattr(args, "epsilon", None), "n_max": getattr(args, "n_max", None),
        "trials": getattr(args, "trials", None), "samples": getattr(args, "samples", None),
        "tile_cap": getattr(args, "tile_cap", None), "dim": getattr(args, "dim", None),
    }
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    if getattr(args, "no_phi_condition", False):
        cfg["phi_condition"] = False
    validate_config(cfg)
    return cfg


def _require_seed(cfg: dict, why: str) -> int:
    if "seed" not in cfg:
        raise UsageError(f"a seed is required for {why}; pass --seed N or set \"seed\" in the config")
    return int(cfg["seed"])


def _threads(cfg: dict) -> int:
    return int(cfg["threads"]) if "threads" in cfg else default_threads()


def _powers_of_two(n_max: int) -> list[int]:
    out, n = [], 1
    while n <= n_max:
        out.append(n)
        n *= 2
    return out


def _entry(cfg: dict, default: str):
    name = cfg.get("map", default)
    base = name.partition(":")[0]
    kw = {}
    if base in SAMPLED_MAPS:
        kw["seed"] = _require_seed(cfg, f"the sampled map {base!r}")
        kw.update(cfg.get("map_params", {}))
    elif cfg.get("map_params"):
        raise UsageError(f"config error at map_params: map {base!r} takes no sampling parameters")
    try:
        return parse_map_spec(name, dim=cfg.get("dim", 1), **kw)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0] if exc.args else exc)) from exc


def _parse_kv(text: str) -> tuple[str, dict]:
    head, _, rest = text.partition(":")
    if "=" in head and not rest:
        head, rest = "", text
    params = {}
    for item in filter(None, (t.strip() for t in rest.split(","))):
        if "=" not in item:
            raise UsageError(f"expected key=value in {text!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return head, params


def _error_map(spec: str | None, entry) -> tuple[ErrorMap, tuple | None]:
    """The error map and, when known, the declared constants (b_sup, φ_sup)."""
    if spec is None or spec == "default":
        if entry.b is None:
            raise UsageError(f"map {entry.name!r} has no error map; pass --error")
        return entry.b, entry.constants
    head, params = _parse_kv(spec)
    if head == "zero" or (not head and not params):
        return ErrorMap.zero(), (0.0, entry.phi_sup)
    if head == "stated":
        return ErrorMap.counterexample_stated(), None
    if head == "valid":
        return ErrorMap.counterexample_valid(), None
    try:
        if "const" in params:
            c = float(params["const"])
            return ErrorMap.constant(c), (c, entry.phi_sup)
        if "sqrt" in params:
            c = float(params["sqrt"])
            return ErrorMap.sqrt_size(c), (c, entry.phi_sup)
    except ValueError as exc:
        raise UsageError(f"bad error-map parameter in {spec!r}") from exc
    raise UsageError(f"unknown error map {spec!r}; use zero, stated, valid, const=C or sqrt=C")


def _generator(cfg: dict, default: Sequence[str]):
    gens = []
    for spec in cfg.get("partitions", default):
        head, params = _parse_kv(spec)
        if head == "grid":
            gens.append(GridPartitions(all_offsets=params.get("offsets") == "all"))
        elif head == "tiling":
            m = int(params.get("m", cfg.get("tiling", {}).get("m", 2)))
            gens.append(TilingPartitions(m))
        elif head == "singleton":
            gens.append(SingletonPartitions())
        elif head == "compositions":
            gens.append(IntervalCompositions(int(params.get("max", 12))))
        else:
            raise UsageError(f"unknown partition generator {spec!r}")
    if not gens:
        raise UsageError("config error at partitions: at least one generator is needed")
    return gens[0] if len(gens) == 1 else CombinedPartitions(*gens)


def _family(cfg: dict, dim: int, default_sizes: Sequence[int] = ()) -> list[Box]:
    fam = cfg.get("family", {})
    sides = set(range(1, fam.get("max_side", 16) + 1)) if "max_side" in fam or not default_sizes else set()
    sides |= set(fam.get("sizes", default_sizes))
    return [Box.cube(s, dim) for s in sorted(sides)]


def _witness(report) -> dict | None:
    if report.witness is None:
        return None
    F, pid, pieces = report.witness
    return {"lo": [int(x) for x in F.lo], "hi": [int(x) for x in F.hi], "size": F.size,
            "partition_id": pid, "pieces": len(pieces), "violation": report.max_violation}


# subcommands ---------------------------------------------------------------------

def run_certify(cfg: dict, run: Run) -> None:
    entry = _entry(cfg, "counterexample")
    dim = entry.phi.dim
    scale = CofinalScale(dim)
    n_cap = cfg.get("scale", {}).get("cap", DEFAULT_LEVEL_CAP)
    threads = _threads(cfg)
    if "riesz_error" in cfg:
        head, params = _parse_kv(cfg["riesz_error"])
        if head not in ("", "l1budget") and "l1budget" not in params:
            raise UsageError(f"unknown Riesz error family {cfg['riesz_error']!r}; use l1budget=B[,nmax=N]")
        try:
            budget = float(params.get("l1budget", 10))
            n_max = int(params.get("nmax", 2000))
        except ValueError as exc:
            raise UsageError(f"bad Riesz error parameters in {cfg['riesz_error']!r}") from exc
        xis = riesz_budget_family(budget, n_max)
        gen = _generator(cfg, ["singleton"])
        family = _family(cfg, dim, _powers_of_two(2 * n_max) + [2 * n_max])
        results = certify_riesz_family(entry.phi, xis, gen, family, scale, threads)
        table = Table(["xi", "size", "partition_id", "lhs", "budget", "margin"],
                      ["error-map label", "lattice points", "generator label", "L1 norm of |phi(F) - sum phi(E)|",
                       "L1 norm of sum xi(E)", "-(ess sup of |phi(F) - sum phi(E)| - sum xi(E))"],
                      f"riesz certification of {entry.name}")
        summary = []
        for xi, rep in results:
            for r in rep.rows:
                table.add(xi.name, r.size, r.partition_id, r.lhs, r.budget, r.margin)
            summary.append({"xi": xi.name, "l1_at_point": xi.l1_at_point(dim), "passed": rep.passed,
                            "partitions": rep.partitions, "skipped": rep.skipped,
                            "max_violation": rep.max_violation, "witness": _witness(rep)})
        any_pass = any(rep.passed for _, rep in results)
        run.tables["certify.csv"] = table
        run.documents["summary.json"] = {
            "map": entry.name, "mode": "riesz", "l1_budget": budget, "candidates": summary,
            "passed": any_pass, "divergence_partial_sum": {"N": n_max, "value": divergence_partial_sum(n_max)},
        }
        run.status = 0 if any_pass else 2
        run.say(f"riesz: {sum(r.passed for _, r in results)}/{len(results)} candidates pass")
        if not any_pass:
            w = next((s["witness"] for s in summary if s["witness"]), None)
            run.say(f"witness: {w['partition_id']} of [{w['lo']}, {w['hi']}) violation {fmt(w['violation'])}")
        return
    b, _ = _error_map(cfg.get("error"), entry)
    gen = _generator(cfg, ["grid", "singleton"])
    family = _family(cfg, dim)
    rep = certify_almost_additive(entry.phi, b, gen, family, scale, n_cap, keep_rows=True, threads=threads)
    table = Table(["size", "partition_id", "lhs", "budget", "margin"],
                  ["lattice points", "generator label", "norm of phi(F) - sum phi(E)", "sum b(E)",
                   "budget - lhs"], f"almost-additive certification of {entry.name} with b = {b.name}")
    for r in rep.rows:
        table.add(r.size, r.partition_id, r.lhs, r.budget, r.margin)
    run.tables["certify.csv"] = table
    mv = rep.max_violation if rep.partitions else 0
    run.documents["summary.json"] = {
        "map": entry.name, "mode": "norm", "error": b.name, "passed": rep.passed, "windows": rep.windows,
        "partitions": rep.partitions, "skipped": rep.skipped, "exact": rep.exact,
        "max_violation": max(mv, 0) if rep.passed else mv, "witness": None if rep.passed else _witness(rep),
    }
    run.status = 0 if rep.passed else 2
    run.say(rep.summary())


def run_realize(cfg: dict, run: Run) -> None:
    entry = _entry(cfg, "counterexample")
    b, constants = _error_map(cfg.get("error"), entry)
    eps0 = cfg.get("epsilon0", 0.1)
    seed = cfg.get("seed", 0)
    battery = cfg.get("battery", {})
    threads = _threads(cfg)
    try:
        cert = extract_realization(entry.phi, b, eps0, constants=constants, m_cap=cfg.get("tile_cap", DEFAULT_TILE_CAP),
                                   seed=seed, grid=battery.get("grid", 3), n_random=battery.get("n_random", 100),
                                   threads=threads, phi_condition=cfg.get("phi_condition", True))
    except NoAdmissibleTile as exc:
        run.documents["failure.json"] = {"map": entry.name, "error": b.name, "epsilon0": eps0,
                                         "reason": str(exc), "diagnostics": exc.diagnostics}
        run.status = 2
        run.say(f"no admissible tile: {exc}")
        return
    run.documents["certificate.json"] = cert.to_dict()
    bat = Table(["kind", "lo", "hi", "size", "defect", "invariant", "residual"],
                ["grid or random", "lower corner", "upper corner (exclusive)", "lattice points",
                 "|KF sym-diff F| / |F|", "defect <= delta", "norm of phi(F)/|F| - A_F v"],
                f"certificate battery for {entry.name}, epsilon0 = {fmt(eps0)}")
    for r in cert.rows:
        bat.add(r.kind, " ".join(map(str, r.lo)), " ".join(map(str, r.hi)), r.size, r.defect, r.invariant, r.residual)
    run.tables["battery.csv"] = bat
    n_max = cfg.get("n_max", 1024)
    schedule = cfg.get("schedule", _powers_of_two(n_max))
    seq = verify_realization(entry.phi, cert.v, box_folner(entry.phi.dim), max(schedule), schedule, threads)
    res = Table(["n", "residual", "tail_sup"],
                ["box side of [0,n)^d", "norm of phi(F_n)/|F_n| - A_{F_n} v", "sup of residual over evaluated k >= n"],
                f"realization residuals for {entry.name}")
    for n, r, t in seq.rows():
        res.add(n, r, t)
    run.tables["residuals.csv"] = res
    run.status = 0 if cert.passed else 2
    run.say(f"m = {cert.m}, max residual {fmt(cert.max_residual)}, violations {len(cert.violations)}")


def _matrices(cfg: dict):
    mats = cfg.get("matrices", [DEFAULT_A0, DEFAULT_A1])
    arrs = [np.asarray(M, dtype=float) for M in mats]
    for k, A in enumerate(arrs):
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise UsageError(f"config error at matrices.{k}: expected a square matrix")
    if len(arrs) == 2 and arrs[0].shape != arrs[1].shape:
        raise UsageError("config error at matrices: matrices must have equal shapes")
    return (arrs[0], arrs[0]) if len(arrs) == 1 else (arrs[0], arrs[1])


def run_lyapunov(cfg: dict, run: Run) -> None:
    A0, A1 = _matrices(cfg)
    seed = _require_seed(cfg, "sampled Lyapunov estimates")
    try:
        fseq = matrix_cocycle_seq(A0, A1)
    except ValueError as exc:
        raise UsageError(f"config error at matrices: {exc}") from exc
    schedule = cfg.get("schedule", _powers_of_two(cfg.get("n_max", 1024)))
    prof = lyapunov_profile(fseq, schedule, samples=cfg.get("samples", 10_000), seed=seed)
    t = Table(["n", "f_n_over_n", "regime"],
              ["word length", "mean of log ||A_{x_0} ... A_{x_{n-1}}|| / n (max-row-sum norm), nats",
               "exact (all words) or sampled"], "Lyapunov profile")
    for row in prof:
        t.add(*row)
    run.tables["lyapunov.csv"] = t
    summary = {"matrices": [A0.tolist(), A1.tolist()], "schedule": list(schedule), "last": prof[-1][1]}
    if np.array_equal(A0, A1):
        ref = float(np.log(np.max(np.abs(np.linalg.eigvals(A0)))))
        summary["reference_log_spectral_radius"] = ref
        summary["abs_error_last"] = abs(prof[-1][1] - ref)
        if "tolerance" in cfg:
            summary["passed"] = summary["abs_error_last"] <= cfg["tolerance"]
            run.status = 0 if summary["passed"] else 2
    run.documents["summary.json"] = summary
    run.say(f"f_n/n at n = {prof[-1][0]}: {fmt(prof[-1][1])}")


def _error_sequence(cfg: dict, A0, A1) -> ErrorSequence:
    spec = cfg.get("error_sequence")
    if spec is None:
        return ErrorSequence.constant(cocycle_constant(A0, A1))
    if spec["kind"] == "zero":
        return ErrorSequence.zero()
    if "c" not in spec:
        raise UsageError("config error at error_sequence.c: required for this kind")
    if spec["kind"] == "constant":
        return ErrorSequence.constant(spec["c"])
    if "a" not in spec:
        raise UsageError("config error at error_sequence.a: required for power laws")
    return ErrorSequence.power_law(spec["c"], spec["a"])


def run_erdos(cfg: dict, run: Run) -> None:
    A0, A1 = _matrices(cfg)
    seed = _require_seed(cfg, "sampled Erdős bounds")
    try:
        fseq = matrix_cocycle_seq(A0, A1)
    except ValueError as exc:
        raise UsageError(f"config error at matrices: {exc}") from exc
    Cseq = _error_sequence(cfg, A0, A1)
    if not Cseq.summable:
        raise UsageError("config error at error_sequence: sum C_n/n^2 diverges")
    schedule = cfg.get("schedule", list(range(1, 15)) + [64, 256, 512])
    try:
        rep = erdos_approximant(fseq, Cseq, cfg.get("epsilon", 1.0), schedule=schedule,
                                samples=cfg.get("samples", 10_000), seed=seed, terms=cfg.get("terms", 10 ** 7))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t = Table(["m", "K", "Ctilde_m", "n", "lhs_over_n", "bound", "regime", "claim_applies"],
              ["surrogate length", "corrector sup norm", "tail constant at m", "word length",
               "||f_n - S_n(f_m/m)||_inf / n", "5K/n + Ctilde_n/n + Ctilde_m/m", "exact or sampled", "n >= n0"],
              "Erdős–de Bruijn approximant")
    for r in rep.rows:
        t.add(rep.m, rep.K, rep.Ctilde_m, r.n, r.lhs, r.bound, r.regime, r.claim_applies)
    run.tables["erdos.csv"] = t
    run.documents["summary.json"] = {
        "m": rep.m, "K": rep.K, "K_regime": rep.K_regime, "Ctilde_m": rep.Ctilde_m, "n0": rep.n0,
        "epsilon": rep.epsilon, "violations": [r.n for r in rep.violations],
        "claim_violations": [r.n for r in rep.claim_violations],
        "passed": not rep.violations and not rep.claim_violations,
    }
    run.status = 0 if run.documents["summary.json"]["passed"] else 2
    run.say(f"m = {rep.m}, K = {fmt(rep.K)}, n0 = {rep.n0}, violations {len(rep.violations)}")


def run_converge(cfg: dict, run: Run) -> None:
    seed = _require_seed(cfg, "pointwise trials")
    p = cfg.get("p", 0.5)
    dim = cfg.get("dim", 1)
    N = cfg.get("n_max", 10_000)
    trials = cfg.get("trials", 100)
    system = ShiftSystem.bernoulli(p, dim, seed, trials)
    f = CylinderFunction.coordinate(0, dim)
    schedule = cfg.get("schedule")
    if schedule is not None and max(schedule) > N:
        raise UsageError("config error at schedule: entries must not exceed n_max")
    table = pointwise_experiment(f, system, box_folner(dim), N, schedule=schedule, threads=_threads(cfg))
    t = Table(["trial", "n", "residual"], ["sample index", "box side of [0,n)^d", "|A_{F_n} f(omega) - integral f|"],
              f"pointwise averages of x_0 under Bernoulli({fmt(p)})")
    for row in table.rows():
        t.add(*row)
    run.tables["converge.csv"] = t
    tol = cfg.get("tolerance", 3 * math.sqrt(p * (1 - p) / N ** dim))
    need = cfg.get("required_fraction", 0.95)
    frac = table.fraction_within(tol)
    run.documents["quantiles.json"] = {"mean": table.mean, "exact_mean": table.exact_mean, "trials": trials,
                                       "tolerance": tol, "fraction_within": frac, "required_fraction": need,
                                       "passed": frac >= need, "quantiles": table.quantiles()}
    run.status = 0 if frac >= need else 2
    run.say(f"{fmt(100 * frac)}% of {trials} trials within {fmt(tol)} at n = {table.ns[-1]}")


def run_gallery(cfg: dict, run: Run) -> None:
    t = Table(["name", "error_map", "b_sup", "phi_sup", "domain", "space", "action"],
              ["gallery key", "error-map label", "declared sup of |b(F)|/|F|", "declared sup of ||phi(F)||/|F|",
               "windows accepted", "value space", "group action"], "gallery maps")
    docs = {}
    for name in GALLERY:
        e = gallery_entry(name, seed=cfg.get("seed", 0))
        d = describe(e)
        docs[name] = d
        t.add(name, d["b"], d["b_sup"], d["phi_sup"], d["domain"], d["space"], d["action"])
    run.tables["gallery.csv"] = t
    run.documents["gallery.json"] = docs
    run.say(f"{len(GALLERY)} maps")


RUNNERS = {"certify": run_certify, "realize": run_realize, "lyapunov": run_lyapunov, "erdos": run_erdos,
           "converge": run_converge, "gallery": run_gallery}


# persistence ---------------------------------------------------------------------

def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_outputs(out: str, subcommand: str, cfg: dict, run: Run, elapsed: float) -> dict:
    files = {name: t.render() for name, t in run.tables.items()}
    files.update({name: dump_json(doc) for name, doc in run.documents.items()})
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config_sha256": config_hash(cfg, subcommand),
        "config": {k: v for k, v in cfg.items() if k not in _RUNTIME_KEYS},
        "exit_status": run.status,
        "tables": {name: _sha256(text) for name, text in sorted(files.items())},
        "wall_clock_seconds": elapsed,
    }
    try:
        os.makedirs(out, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(dump_json(manifest))
    except OSError as exc:
        raise UsageError(f"cannot write to output directory {out}: {exc.strerror}") from exc
    return manifest


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="seed for sampled computations (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads (default: FOLNERLAB_THREADS or 1)")
    common.add_argument("--out", metavar="DIR", help="output directory (default: folnerlab-out/<subcommand>)")

    parser = _Parser(prog="folnerlab", description="Følner averaging and almost-additive set-map experiments.")
    parser.add_argument("--version", action="version", version=f"folnerlab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", parents=[common], help="certify almost additivity over partitions")
    p.add_argument("--map", help="gallery name or birkhoff:const=c")
    p.add_argument("--error", help="error map: default, zero, stated, valid, const=C, sqrt=C")
    p.add_argument("--riesz-error", dest="riesz_error", help="Riesz budget family, e.g. l1budget=10")
    p.add_argument("--dim", type=int)

    p = sub.add_parser("realize", parents=[common], help="extract an additive realization with a certificate")
    p.add_argument("--map", help="gallery name or birkhoff:const=c")
    p.add_argument("--error", help="error map (default: the map's own)")
    p.add_argument("--eps", type=float, help="target accuracy epsilon0")
    p.add_argument("--tile-cap", dest="tile_cap", type=int)
    p.add_argument("--n-max", dest="n_max", type=int, help="largest n in the residual table")
    p.add_argument("--no-phi-condition", action="store_true",
                   help="select the tile by the error-map condition alone")

    p = sub.add_parser("lyapunov", parents=[common], help="f_n/n for a matrix cocycle")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("erdos", parents=[common], help="Erdős–de Bruijn additive approximant")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("converge", parents=[common], help="pointwise ergodic averages over seeded trials")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--trials", type=int)

    sub.add_parser("gallery", parents=[common], help="list the gallery maps")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        out = cfg.get("out", os.path.join("folnerlab-out", args.subcommand))
        run = Run()
        start = time.perf_counter()
        RUNNERS[args.subcommand](cfg, run)
        write_outputs(out, args.subcommand, cfg, run, time.perf_counter() - start)
    except UsageError as exc:
        print(f"folnerlab: {exc}", file=sys.stderr)
        return 1
    for msg in run.messages:
        print(msg)
    print(f"wrote {', '.join(sorted(run.tables) + sorted(run.documents))}, manifest.json to {out}")
    return run.status


if __name__ == "__main__":
    sys.exit(main())
