"""Experiment runner: subcommands, seeding, persistence, reproduction.

Every command writes one JSON envelope {config, version, wall_time_s,
results}; sweeps additionally write a flat CSV. The results field is a pure
function of (config, seed), byte-identical across runs and worker counts.
Exit codes: 0 ok, 1 bad configuration, 2 infeasible, 3 retries exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys as _sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import worker_count
from ._rng import child_seed, substream
from .coset import (
    as_mask,
    cardinality_audit,
    convolution_identity,
    find_coset,
    optimality_certificate,
)
from .empirical import moment_deviation, scaling_study
from .entropy import packing_ratio_ellipsoid, packing_ratio_l2, packing_ratio_maxpair
from .errors import ConfigError, InfeasibleError, RetryExhaustedError
from .metrics import MixSpace, VectorSet
from .selection import isometry_check, kashin_split, p_auto, ratio_search, rho_bound
from .systems import gen_walsh, parse_system_spec, save_system, validate_system

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_RETRY = 0, 1, 2, 3


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except Exception:
        pass
    return __version__


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps round-trips."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(v) for v in np.linspace(float(start), float(stop), int(num))]
    return [float(v) for v in text.split(",")]


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _space_args(parser):
    parser.add_argument("--p", default="auto", help="exponent in (1,2), or 'auto'")
    parser.add_argument("--rho", type=float, default=None,
                        help="mixed-norm scale; default: the theory value")
    parser.add_argument("--delta", type=float, default=0.5)


def _resolve_p(args, n, k, L) -> float:
    if args.p == "auto":
        return p_auto(n, k, L)
    p = float(args.p)
    if not 1.0 < p < 2.0:
        raise ConfigError("p must lie in (1, 2)")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kashinsplit",
        description="Randomized L1/L2 splitting of bounded orthonormal systems",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate and validate a system")
    g.add_argument("--system", required=True, help="walsh:N | fourier:n | file:PATH")
    g.add_argument("--validate", action="store_true")
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--out", help="write the table to this path")

    s = sub.add_parser("split", help="run the full selection pipeline")
    s.add_argument("--system", required=True)
    _space_args(s)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-retries", type=int, default=100)
    s.add_argument("--c-window", type=float, default=3.0)
    s.add_argument("--require-nonvacuous", action="store_true",
                   help="treat an empty concentration slice as infeasible")

    c = sub.add_parser("certify", help="ratio evidence for a given index set")
    c.add_argument("--system", required=True)
    c.add_argument("--indices", required=True,
                   help="comma-separated indices or @FILE with a JSON list")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--restarts", type=int, default=6)
    c.add_argument("--iters", type=int, default=300)

    k = sub.add_parser("coset", help="extract a subgroup coset from a dense set")
    k.add_argument("--N", type=int, required=True)
    k.add_argument("--density", type=float, default=None)
    k.add_argument("--set-file", default=None,
                   help="newline-separated hex words instead of a random set")
    k.add_argument("--seed", type=int, default=None)
    k.add_argument("--emit-witness", action="store_true")
    k.add_argument("--extend", action="store_true")

    d = sub.add_parser("deviation", help="sign-process and moment deviation estimates")
    d.add_argument("--mode", choices=["signs", "moment"], default="signs")
    d.add_argument("--m-grid", default="16,32,64",
                   help="family sizes (powers of two, Walsh families)")
    d.add_argument("--p", type=float, default=1.5)
    d.add_argument("--rho", type=float, default=None)
    d.add_argument("--k", type=int, default=None, help="draws per trial in moment mode")
    d.add_argument("--trials", type=int, default=48)
    d.add_argument("--restarts", type=int, default=6)
    d.add_argument("--seed", type=int, required=True)

    e = sub.add_parser("entropy", help="greedy packing ratios of the mixed ball")
    e.add_argument("--system", required=True)
    e.add_argument("--metric", choices=["linf_m", "ellipsoid", "l2"], default="linf_m")
    e.add_argument("--eps-grid", default="0.1:1.0:10")
    e.add_argument("--p", type=float, default=1.5)
    e.add_argument("--rho", type=float, default=1.0)
    e.add_argument("--budget", type=int, default=2000)
    e.add_argument("--seed", type=int, required=True)

    for p_ in sub.choices.values():
        p_.add_argument("--json", dest="json_out", default=None, help="envelope path")
        p_.add_argument("--csv", dest="csv_out", default=None, help="flat table path")
        p_.add_argument("--workers", type=int, default=None)
    return ap


def _cmd_gen(args) -> tuple[dict, list | None]:
    system = parse_system_spec(args.system)
    results = {"system": {"n": system.n, "m0": system.m0, "linf_bound": system.linf_bound,
                          "label": system.label}}
    if args.validate:
        rep = validate_system(system, args.tol)
        results["validation"] = rep.to_dict()
        if not rep.passed:
            raise ConfigError(f"system failed validation: {rep.to_dict()}")
    if args.out:
        save_system(system, args.out)
        results["written"] = args.out
    return results, None


def _cmd_split(args) -> tuple[dict, list | None]:
    system = parse_system_spec(args.system)
    n = system.n
    k = round(n * math.log(2.0))
    p = _resolve_p(args, n, k, system.linf_bound)
    res = kashin_split(
        system, p=p, delta=args.delta, seed=args.seed,
        max_retries=args.max_retries, c_window=args.c_window,
    )
    if args.require_nonvacuous and res.selected.vacuous:
        raise InfeasibleError(
            "the concentration slice is empty at the theory rho; "
            "pass a smaller --rho via the library API for a non-vacuous check"
        )
    results = res.to_dict()
    results["mu"] = system.linf_bound * math.sqrt(n / k) * math.sqrt(math.log(k))
    rows = [
        {"side": s["side"], "cardinality": s["cardinality"],
         "ratio_search": s["ratio_search_value"], "coset_ratio": s["coset_ratio"]}
        for s in (results["selected"], results["complement"])
    ]
    return results, rows


def _cmd_certify(args) -> tuple[dict, list | None]:
    system = parse_system_spec(args.system)
    if args.indices.startswith("@"):
        idx = json.loads(Path(args.indices[1:]).read_text())
    else:
        idx = _parse_int_list(args.indices)
    rs = ratio_search(system, idx, restarts=args.restarts, iters=args.iters,
                      seed=args.seed)
    results = {"ratio_search": rs.to_dict()}
    if system.group_xor:
        try:
            results["coset"] = optimality_certificate(system, idx, system.n - len(idx)).to_dict()
        except ConfigError as exc:
            results["coset"] = {"skipped": str(exc)}
    return results, None


def _cmd_coset(args) -> tuple[dict, list | None]:
    n = 1 << args.N
    if args.set_file:
        words = [int(w, 16) for w in Path(args.set_file).read_text().split()]
        mask = as_mask(words, args.N)
        density = args.density if args.density is not None else mask.sum() / n
    else:
        if args.density is None or args.seed is None:
            raise ConfigError("random sets need --density and --seed")
        density = args.density
        size = int(density * n)
        idx = substream(args.seed, 16).choice(n, size=size, replace=False)
        mask = as_mask(idx, args.N)
    cert = find_coset(mask, args.N, min(density, mask.sum() / n), extend=args.extend)
    ok, rows = cardinality_audit(cert.sizes, n)
    results = {
        "certificate": cert.to_dict(),
        "audit_ok": ok,
        "convolution_identity": convolution_identity(mask, args.N),
    }
    if args.emit_witness:
        results["witness"] = [int(x) for x in np.sort(cert.elements)]
    return results, rows


def _cmd_deviation(args) -> tuple[dict, list | None]:
    sizes = _parse_int_list(args.m_grid)
    systems = []
    for m in sizes:
        N = m.bit_length() - 1
        if 1 << N != m:
            raise ConfigError("family sizes must be powers of two")
        systems.append(gen_walsh(N))
    workers = worker_count(args.workers)

    def auto_rho(n):
        k = max(2, round(n * math.log(2.0)))
        return rho_bound(n, k, 1.0, args.p, 0.5)

    rho = args.rho if args.rho is not None else auto_rho
    if args.mode == "signs":
        study = scaling_study(systems, args.p, rho, sign_trials=args.trials,
                              restarts=args.restarts, seed=args.seed, workers=workers)
        return study.to_dict(), [r.to_dict() for r in study.rows]
    rows = []
    for j, system in enumerate(systems):
        k = args.k or round(system.n * math.log(2.0))
        r = rho(system.n) if callable(rho) else rho
        rep = moment_deviation(system, k, MixSpace(args.p, r), trials=args.trials,
                               restarts=args.restarts, seed=child_seed(args.seed, j),
                               workers=workers)
        row = rep.to_dict()
        row["m"] = system.n
        row["k"] = k
        rows.append(row)
    return {"rows": rows}, rows


def _cmd_entropy(args) -> tuple[dict, list | None]:
    system = parse_system_spec(args.system)
    xs = VectorSet.from_system(system)
    space = MixSpace(args.p, args.rho)
    rows = []
    for i, eps in enumerate(_parse_grid(args.eps_grid)):
        seed = child_seed(args.seed, 17, i)
        if args.metric == "linf_m":
            rep = packing_ratio_maxpair(xs, space, system, eps, args.budget, seed)
        elif args.metric == "ellipsoid":
            u = system.values[0] / math.sqrt(xs.m)  # unit pairing mass
            rep = packing_ratio_ellipsoid(xs, u, space, system, eps, args.budget, seed)
        else:
            rep = packing_ratio_l2(xs, space, system, eps, args.budget, seed)
        rows.append(rep.to_dict())
    return {"rows": rows, "metric": args.metric}, rows


_COMMANDS = {
    "gen": _cmd_gen,
    "split": _cmd_split,
    "certify": _cmd_certify,
    "coset": _cmd_coset,
    "deviation": _cmd_deviation,
    "entropy": _cmd_entropy,
}


def run(argv: list[str]) -> tuple[int, dict]:
    """Parse argv, execute, and return (exit_code, envelope)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return EXIT_CONFIG, {"error": "argument parsing failed"}
    config = {k: v for k, v in sorted(vars(args).items())}
    start = time.perf_counter()
    try:
        results, rows = _COMMANDS[args.command](args)
        code = EXIT_OK
        error = None
    except ConfigError as exc:
        results, rows, code, error = None, None, EXIT_CONFIG, str(exc)
    except InfeasibleError as exc:
        results, rows, code, error = None, None, EXIT_INFEASIBLE, str(exc)
    except RetryExhaustedError as exc:
        results, rows, code = None, None, EXIT_RETRY
        error = {"message": str(exc), "report": jsonable(exc.report)}
    envelope = {
        "config": jsonable(config),
        "version": version_string(),
        "wall_time_s": time.perf_counter() - start,
        "results": jsonable(results),
    }
    if error is not None:
        envelope["error"] = error
    if code == EXIT_OK:
        if args.json_out:
            Path(args.json_out).write_text(json.dumps(envelope, indent=2, sort_keys=True))
        if args.csv_out and rows:
            _write_csv(args.csv_out, rows)
    return code, envelope


def _write_csv(path, rows: list[dict]) -> None:
    rows = [jsonable(r) for r in rows]
    fields: list[str] = []
    for r in rows:
        for key in r:
            if key not in fields:
                fields.append(key)
    flat = []
    for r in rows:
        flat.append({k: (json.dumps(v) if isinstance(v, (dict, list)) else v)
                     for k, v in r.items()})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(flat)


def main(argv: list[str] | None = None) -> int:
    code, envelope = run(_sys.argv[1:] if argv is None else argv)
    print(json.dumps(envelope, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
