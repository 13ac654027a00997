"""Command-line driver: ``dense-goldbach <command> [options]``.

Every command writes one JSON document (or a CSV table with ``--format csv``)
that echoes its full configuration.  Exit codes: 0 all checks passed,
1 a check failed, 2 usage error or infeasible request.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import reports
from .errors import HypothesisError, InfeasibleError, TransferenceFailure
from .goldbach import goldbach_scan
from .primes import (
    PrimeSubset,
    PrimeTable,
    WTrickContext,
    all_primes,
    class_density_table,
    counterexample_subset,
    explicit_subset,
    interval_union_subset,
    majorant,
    primorial,
    random_subset,
    relative_density,
    sieve,
    weighted_subset,
)
from .spectral import CyclicFunction, dft, lp_spectral_norm
from .sumset import SquarefreeModulus, goldbach_threshold, sharp_cardinality, verify_local_theorem
from .transference import TransferenceParams, run_transference

log = logging.getLogger("dense_goldbach")

CACHE_ENV = "DENSE_GOLDBACH_CACHE"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# keys that control where/how output goes rather than what is computed
_OUTPUT_KEYS = {"command", "out", "format", "config", "cache_dir", "sidecar", "verbose", "handler"}


class UsageError(Exception):
    pass


def load_table(limit: int, cache_dir: str | None) -> PrimeTable:
    """Smallest cached table covering ``limit``, else a fresh sieve."""
    if cache_dir:
        found = []
        for path in Path(cache_dir).glob("primes-*.bin"):
            try:
                found.append((int(path.stem.split("-")[1]), path))
            except ValueError:
                continue
        for cached_limit, path in sorted(found):
            if cached_limit >= limit:
                log.info("loading prime table from %s", path)
                return PrimeTable.load(path)
    return sieve(max(limit, 2))


def _modulus(m: int) -> SquarefreeModulus:
    try:
        return SquarefreeModulus.from_int(m)
    except ValueError as exc:
        raise UsageError(f"--m {m}: {exc}") from None


def subset_table_limit(cfg: dict) -> int:
    need = cfg.get("limit") or 0
    if cfg.get("subset") == "intervals":
        need = max(need, *cfg["cutoffs"])
    if cfg.get("subset") == "explicit" and cfg.get("primes"):
        need = max(need, *cfg["primes"])
    return need


def make_subset(cfg: dict, table: PrimeTable) -> PrimeSubset:
    kind = cfg.get("subset", "all")
    if kind == "all":
        return all_primes(table)
    if kind == "counterexample":
        return counterexample_subset(_modulus(cfg["m"]), table)
    if kind == "intervals":
        try:
            return interval_union_subset(cfg["alpha"], cfg["cutoffs"], table)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if kind == "random":
        return random_subset(table, cfg["density"], cfg["seed"])
    if kind == "explicit":
        return explicit_subset(table, cfg.get("primes") or [])
    raise UsageError(f"unknown subset kind {kind!r}")


def cmd_local_check(cfg: dict) -> tuple[dict, list[dict]]:
    mod = _modulus(cfg["m"])
    if cfg.get("sample"):
        report = verify_local_theorem(mod, "sampled", samples=cfg["sample"], seed=cfg["seed"])
    else:
        report = verify_local_theorem(mod, "exhaustive")
    result = report.to_dict()
    result["sharp_witness_found"] = bool(report.sharp_witnesses)
    checks = [reports.check("no violations above threshold", report.ok, count=len(report.violations))]
    rows = [{"A": " ".join(map(str, a)), "B": " ".join(map(str, b))} for a, b in report.sharp_witnesses]
    return reports.build_document("local-check", cfg, result, checks), rows


def cmd_goldbach_scan(cfg: dict) -> tuple[dict, list[dict]]:
    table = load_table(subset_table_limit(cfg), cfg.get("cache_dir"))
    subset = make_subset(cfg, table)
    modulus = cfg.get("residue_mod") or (cfg["m"] if cfg.get("subset") == "counterexample" else None)
    report = goldbach_scan(subset, cfg["limit"], modulus)
    if cfg.get("sidecar"):
        reports.write_sidecar(cfg["sidecar"], report.exceptional)
    result = report.to_dict(full=cfg.get("full", False))
    if report.by_residue is not None:
        rows = [{"residue": r, "exceptional": c} for r, c in report.by_residue.items()]
    else:
        rows = [{"n": int(n)} for n in report.exceptional]
    return reports.build_document("goldbach-scan", cfg, result), rows


def cmd_counterexample(cfg: dict) -> tuple[dict, list[dict]]:
    mod = _modulus(cfg["m"])
    if not mod.primes:
        raise UsageError("--m must have at least one prime factor")
    limit = cfg["limit"]
    table = load_table(limit, cfg.get("cache_dir"))
    subset = counterexample_subset(mod, table)
    x = (mod.largest_prime - 1) // 2
    local_size = sharp_cardinality(mod, x)
    expected = local_size / mod.phi
    measured = relative_density(subset, 1, 0, limit)

    rows = []
    class_table = {}
    for W in cfg["W"]:
        dens = class_density_table(subset, W, [limit])
        class_table[str(W)] = {str(b): row[0] for b, row in dens.items()}
        rows.extend({"W": W, "b": b, "M": limit, "density": row[0]} for b, row in dens.items())

    scan = goldbach_scan(subset, limit, mod.m)
    missed = np.arange(4, limit + 1, 2)
    missed = missed[missed % mod.m == 1 % mod.m]
    all_missed = bool(np.isin(missed, scan.exceptional).all())
    checks = [
        reports.check(
            "global density matches closed form",
            abs(measured - expected) <= cfg["density_tol"],
            measured=measured,
            expected=expected,
            tolerance=cfg["density_tol"],
        ),
        reports.check(
            "class 1 mod m entirely exceptional", all_missed, evens_in_class=int(missed.size)
        ),
        reports.check(
            "exceptional density among evens >= 1/m - tol",
            scan.density_among_evens >= 1 / mod.m - cfg["class_tol"],
            measured=scan.density_among_evens,
            bound=1 / mod.m - cfg["class_tol"],
        ),
    ]
    result = {
        "local_set": subset.descriptor["classes"],
        "local_set_size": local_size,
        "phi": mod.phi,
        "threshold": str(goldbach_threshold(mod)),
        "closed_form_density": expected,
        "global_density": measured,
        "class_densities": class_table,
        "scan": scan.to_dict(),
    }
    return reports.build_document("counterexample", cfg, result, checks), rows


def _interval_indicator(N: int, start: float, length: float) -> CyclicFunction:
    n = np.arange(N)
    lo = math.floor(start * N)
    hi = lo + round(length * N)
    return CyclicFunction((((n - lo) % N) < hi - lo).astype(float))


def transfer_inputs(cfg: dict) -> tuple[list[CyclicFunction], list[CyclicFunction], dict]:
    family = cfg["family"]
    extra: dict = {}
    if family == "intervals":
        N = cfg["N"]
        fs = [_interval_indicator(N, o, fr) for o, fr in zip(cfg["offsets"], cfg["fractions"])]
        nus = [CyclicFunction.constant(N)] * 2
    elif family == "random":
        N = cfg["N"]
        rng = np.random.default_rng(cfg["seed"])
        fs = [CyclicFunction((rng.random(N) < fr).astype(float)) for fr in cfg["fractions"]]
        nus = [CyclicFunction.constant(N)] * 2
    elif family == "prime":
        W = cfg["W"] if cfg.get("W") else primorial(cfg["z"])
        cap = cfg["cap"] if cfg.get("cap") is not None else 1 - cfg["delta"] ** 5
        M = cfg["M"] if cfg.get("M") else W * cfg["N"] + W - 1
        ctxs = [WTrickContext(W, b, M, cap, cfg.get("z")) for b in (cfg["b1"], cfg["b2"])]
        table = load_table(max(W * ctxs[0].N + max(cfg["b1"], cfg["b2"]), M), cfg.get("cache_dir"))
        subset = make_subset({**cfg, "limit": M}, table)
        fs = [weighted_subset(ctx, subset) for ctx in ctxs]
        nus = [majorant(ctx, table) for ctx in ctxs]
        extra = {"contexts": [c.to_dict() for c in ctxs], "subset": subset.descriptor}
    else:
        raise UsageError(f"unknown family {family!r}")
    return fs, nus, extra


def cmd_transfer_demo(cfg: dict) -> tuple[dict, list[dict]]:
    params = TransferenceParams(
        delta=cfg["delta"], eta=cfg["eta"], p=cfg["p"], M=cfg["M_bound"], c=cfg["c"], eps=cfg.get("eps")
    )
    (f1, f2), (nu1, nu2), extra = transfer_inputs(cfg)
    report = run_transference(f1, f2, nu1, nu2, params, force=cfg.get("force", False))
    result = report.to_dict()
    result["fhat_l3"] = [lp_spectral_norm(dft(f), 3) for f in (f1, f2)]
    result["bohr_density"] = [d.bohr.density() for d in report.decompositions]
    result["g_sup"] = [d.g_sup for d in report.decompositions]
    result.update(extra)
    if cfg["family"] == "prime" and cfg.get("subset") == "counterexample":
        W, N = extra["contexts"][0]["W"], report.N
        lifted = W * np.where(report.exceptional == 0, N, report.exceptional) + cfg["b1"] + cfg["b2"]
        counts = np.bincount(lifted % cfg["m"], minlength=cfg["m"])
        result["exceptional_by_class"] = {str(r): int(c) for r, c in enumerate(counts) if c}
    checks = []
    if report.hypotheses.passed:
        checks.append(reports.check("alpha <= eta", report.alpha <= params.eta, alpha=report.alpha))
    row = {
        "family": cfg["family"],
        "N": report.N,
        "delta1": report.delta1,
        "delta2": report.delta2,
        "decay1": report.decay1,
        "decay2": report.decay2,
        "mv1": report.mv1,
        "mv2": report.mv2,
        "bohr_density1": result["bohr_density"][0],
        "bohr_density2": result["bohr_density"][1],
        "g_sup1": result["g_sup"][0],
        "g_sup2": result["g_sup"][1],
        "alpha": report.alpha,
        "forced": report.forced,
    }
    return reports.build_document("transfer-demo", cfg, result, checks), [row]


def cmd_density_profile(cfg: dict) -> tuple[dict, list[dict]]:
    heights = cfg.get("heights")
    if not heights and cfg.get("subset") == "intervals":
        heights = [math.floor(cfg["alpha"] * c) for c in cfg["cutoffs"]]
    if not heights:
        top = cfg["limit"]
        heights = [top // 100, top // 10, top]
    heights = sorted(int(h) for h in heights)
    table = load_table(max(heights[-1], subset_table_limit(cfg)), cfg.get("cache_dir"))
    subset = make_subset(cfg, table)
    rows = []
    for W in cfg["W"]:
        for b, row in class_density_table(subset, W, heights).items():
            rows.extend({"W": W, "b": b, "M": h, "density": d} for h, d in zip(heights, row))
    inf_by_height = {str(h): min(r["density"] for r in rows if r["M"] == h) for h in heights}
    sup_by_height = {str(h): max(r["density"] for r in rows if r["M"] == h) for h in heights}
    result = {
        "heights": heights,
        "subset": subset.descriptor,
        "cells": len(rows),
        "infimum_by_height": inf_by_height,
        "supremum_by_height": sup_by_height,
        "minimum_over_sweep": min(inf_by_height.values()),
        "table": rows,
    }
    checks = []
    if cfg.get("expect") is not None:
        worst = max(abs(r["density"] - cfg["expect"]) for r in rows)
        checks.append(
            reports.check("densities within tol of expect", worst <= cfg["tol"], worst_deviation=worst)
        )
    return reports.build_document("density-profile", cfg, result, checks), rows


def cmd_sieve_cache(cfg: dict) -> tuple[dict, list[dict]]:
    cache_dir = cfg.get("cache_dir")
    if not cache_dir:
        raise UsageError(f"sieve-cache needs --cache-dir or ${CACHE_ENV}")
    table = sieve(cfg["limit"])
    path = Path(cache_dir) / f"primes-{cfg['limit']}.bin"
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)
    result = {"path": str(path), "limit": table.limit, "prime_count": table.count()}
    return reports.build_document("sieve-cache", {k: v for k, v in cfg.items() if k != "cache_dir"}, result), [
        {"limit": table.limit, "prime_count": table.count()}
    ]


def _int(text: str) -> int:
    # accept 1e6-style integers
    value = float(text) if any(ch in text for ch in "eE.") else int(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return int(value)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the document here instead of stdout")
    p.add_argument("--format", choices=["doc", "csv"], default="doc")
    p.add_argument("--config", help="reuse the config block of an earlier report as defaults")
    p.add_argument("--cache-dir", default=os.environ.get(CACHE_ENV), help=f"prime table cache (env {CACHE_ENV})")
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _subset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--subset", choices=["all", "counterexample", "intervals", "random", "explicit"], default="all")
    p.add_argument("--m", type=_int, default=15, help="modulus for --subset counterexample")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--cutoffs", type=_int, nargs="+", default=[10_000, 300_000])
    p.add_argument("--density", type=float, default=0.5, help="keep probability for --subset random")
    p.add_argument("--primes", type=_int, nargs="*", help="members for --subset explicit")


def _transfer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--M-bound", dest="M_bound", type=float, default=10.0, help="mean-value bound")
    p.add_argument("--c", type=float, default=1e-2)
    p.add_argument("--eps", type=float, help="override the spectral cutoff")
    p.add_argument("--force", action="store_true", help="run even if hypotheses fail")


COMMANDS: dict[str, Callable[[dict], tuple[dict, list[dict]]]] = {
    "local-check": cmd_local_check,
    "goldbach-scan": cmd_goldbach_scan,
    "counterexample": cmd_counterexample,
    "transfer-demo": cmd_transfer_demo,
    "density-profile": cmd_density_profile,
    "sieve-cache": cmd_sieve_cache,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="dense-goldbach", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["local-check"] = sub.add_parser("local-check", help="verify the local sumset threshold over Z_m")
    p.add_argument("--m", type=_int, default=15)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="enumerate all subset pairs (default)")
    mode.add_argument("--sample", type=_int, help="number of random pairs above the threshold")
    _common(p)

    p = subs["goldbach-scan"] = sub.add_parser("goldbach-scan", help="exceptional evens for a prime subset")
    p.add_argument("--limit", type=_int, default=10**6)
    p.add_argument("--residue-mod", type=_int, help="break exceptional counts down mod this")
    p.add_argument("--full", action="store_true", help="list every exceptional even in the document")
    p.add_argument("--sidecar", help="also write every exceptional even to this text file")
    _subset_flags(p)
    _common(p)

    p = subs["counterexample"] = sub.add_parser("counterexample", help="dense prime subset with a missed class")
    p.add_argument("--m", type=_int, default=15)
    p.add_argument("--limit", type=_int, default=10**6)
    p.add_argument("--W", type=_int, nargs="+", default=[1, 2, 4])
    p.add_argument("--density-tol", type=float, default=0.05)
    p.add_argument("--class-tol", type=float, default=1e-3)
    _common(p)

    p = subs["transfer-demo"] = sub.add_parser("transfer-demo", help="run the transference pipeline")
    p.add_argument("--family", choices=["intervals", "random", "prime"], default="intervals")
    p.add_argument("--N", type=_int, default=10007)
    p.add_argument("--fractions", type=float, nargs=2, default=[0.8, 0.8])
    p.add_argument("--offsets", type=float, nargs=2, default=[0.0, 0.0])
    p.add_argument("--W", type=_int, help="modulus of the W-trick (default: primorial of --z)")
    p.add_argument("--z", type=_int, default=2)
    p.add_argument("--b1", type=_int, default=1)
    p.add_argument("--b2", type=_int, default=1)
    p.add_argument("--M", type=_int, help="height; default W N + W - 1")
    p.add_argument("--cap", type=float, help="truncation factor; default 1 - delta^5")
    _subset_flags(p)
    _transfer_flags(p)
    _common(p)

    p = subs["density-profile"] = sub.add_parser("density-profile", help="relative densities per class")
    p.add_argument("--W", type=_int, nargs="+", default=[1, 2, 6, 30])
    p.add_argument("--heights", type=_int, nargs="*", help="heights M (default: trough heights or limit sweep)")
    p.add_argument("--limit", type=_int, default=10**6)
    p.add_argument("--expect", type=float, help="check every cell is within --tol of this value")
    p.add_argument("--tol", type=float, default=0.1)
    _subset_flags(p)
    _common(p)

    p = subs["sieve-cache"] = sub.add_parser("sieve-cache", help="sieve once and store the table")
    p.add_argument("--limit", type=_int, default=10**6)
    _common(p)
    return parser, subs


def parse_config(argv: list[str] | None = None) -> tuple[argparse.Namespace, dict]:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        previous = reports.load_document(args.config)
        if previous.get("command") != args.command:
            parser.error(f"--config document is for {previous.get('command')!r}, not {args.command!r}")
        subs[args.command].set_defaults(**previous["config"])
        args = parser.parse_args(argv)
    cfg = {k: v for k, v in vars(args).items() if k not in _OUTPUT_KEYS}
    if args.cache_dir:
        cfg["cache_dir"] = args.cache_dir
    if getattr(args, "sidecar", None):
        cfg["sidecar"] = args.sidecar
    return args, cfg


def main(argv: list[str] | None = None) -> int:
    try:
        args, cfg = parse_config(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    run = COMMANDS[args.command]
    try:
        doc, rows = run(cfg)
    except (UsageError, InfeasibleError) as exc:
        print(f"dense-goldbach {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisError as exc:
        print(f"dense-goldbach {args.command}: {exc} (pass --force to run anyway)", file=sys.stderr)
        return EXIT_USAGE
    except TransferenceFailure as exc:
        print(f"dense-goldbach {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    # sidecar/cache paths are run-local and stay out of the echoed config
    doc["config"] = {k: v for k, v in doc["config"].items() if k not in _OUTPUT_KEYS}
    doc["input_hash"] = reports.config_hash({"command": doc["command"], "config": doc["config"]})
    text = reports.dumps_csv(rows) if args.format == "csv" else reports.dumps_document(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for c in doc["checks"]:
        log.info("%s %s", "PASS" if c["passed"] else "FAIL", c["name"])
    return EXIT_OK if doc["status"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
