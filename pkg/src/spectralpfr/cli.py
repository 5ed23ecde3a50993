"""Command-line interface.

Every command prints a versioned JSON report (or writes it with ``-o``).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import kernels
from .dichotomy import PRESETS, LedgerConfig
from .harness import (Report, analyze, iterate_report, polybog_report, resolve_instance, scan_for_violations,
                      toy_example, to_csv)
from .harness.scanner import bsg_oracle_scan, resolve_workers


def _config(args) -> LedgerConfig:
    cfg = LedgerConfig.preset(args.preset) if args.preset else LedgerConfig()
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if args.preset and "preset" not in data:
            data["preset"] = args.preset
        cfg = LedgerConfig.from_dict(data)
    return cfg


def _emit(report: Report, args) -> None:
    text = report.dumps()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args, cfg):
    G, A, mod = resolve_instance(args.group, args.set)
    return analyze(G, A, cfg, tau=args.tau, modeling=mod)


def cmd_iterate(args, cfg):
    if args.gamma is not None:
        cfg = LedgerConfig.from_dict({**cfg.to_dict(), "gamma": args.gamma})
    G, A, _ = resolve_instance(args.group, args.set)
    return iterate_report(G, A, cfg, args.budget)


def cmd_scan(args, cfg):
    t0 = time.perf_counter()
    res = scan_for_violations(cfg, seed=args.seed, exhaustive=args.exhaustive, samples=args.samples)
    summary = dict(res.summary)
    if args.bsg:
        summary["bsg_oracle"] = bsg_oracle_scan()
    rep = Report("scan", cfg.to_dict(), {"workers": resolve_workers()}, [r.as_dict() for r in res.findings],
                 summary)
    rep.timing = {"seconds": time.perf_counter() - t0}
    return rep


def cmd_toy(args, cfg):
    return toy_example(cfg, alpha=args.alpha, k=args.k)


def cmd_polybog(args, cfg):
    G, A, _ = resolve_instance(args.group, args.set)
    return polybog_report(G, A, cfg)


def cmd_report(args, cfg):
    rep = Report.loads(Path(args.input).read_text())
    if args.csv:
        text = to_csv(rep)
    else:
        lines = [f"{rep.kind} report (schema v{rep.version})"]
        lines += [f"  {k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(rep.summary.items())]
        sev = {}
        for f in rep.findings:
            sev[f.get("severity")] = sev.get(f.get("severity"), 0) + 1
        lines.append(f"  findings: {len(rep.findings)} {json.dumps(sev, sort_keys=True)}")
        text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectralpfr", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with LedgerConfig fields (may name a preset)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named constant ledger")
    p.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default=argparse.SUPPRESS, help="write to this file instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="one PSL step with every audit")
    a.add_argument("group", help='cyclic factors such as "97" or "3,3,3"; "Z" models an integer set first')
    a.add_argument("set", help='elements, e.g. "0..23" or "1,0;0,2"')
    a.add_argument("--tau", type=float, help="spectral threshold (default K^-c0)")
    a.set_defaults(func=cmd_analyze)

    it = sub.add_parser("iterate", parents=[common], help="iterate the PSL step with the potential audit")
    it.add_argument("group")
    it.add_argument("set")
    it.add_argument("--gamma", type=float, help="potential exponent (default 4C + 8)")
    it.add_argument("--budget", type=int, help="step budget (default ceil(K0^(C+1)), capped)")
    it.set_defaults(func=cmd_iterate)

    sc = sub.add_parser("scan", parents=[common], help="search small instances for violations")
    mode = sc.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="all subsets of the small cyclic groups")
    mode.add_argument("--samples", type=int, default=200, help="random instances (default 200)")
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--bsg", action="store_true", help="also run the BSG oracle sweep")
    sc.set_defaults(func=cmd_scan)

    t = sub.add_parser("toy", parents=[common], help="interval toy example in Z/97")
    t.add_argument("--alpha", type=float, default=24 / 97)
    t.add_argument("--k", type=int, choices=(3, 5), default=3)
    t.set_defaults(func=cmd_toy)

    pb = sub.add_parser("polybog", parents=[common], help="regular Bohr set inside 4A - 4A")
    pb.add_argument("group")
    pb.add_argument("set")
    pb.set_defaults(func=cmd_polybog)

    r = sub.add_parser("report", parents=[common], help="summarise a saved report")
    r.add_argument("input")
    r.add_argument("--csv", action="store_true", help="export the (K, alpha, I) ledger or the findings")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kernels.set_backend(args.backend)
    try:
        cfg = _config(args)
        rep = args.func(args, cfg)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"spectralpfr: error: {exc}", file=sys.stderr)
        return 2
    if rep is not None:
        _emit(rep, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
