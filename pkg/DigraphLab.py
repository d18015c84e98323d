#!/usr/bin/env python3
"""
DigraphLab.py

The central entry point for DigraphLab.
Samples random d-regular digraphs, certifies singularity of their adjacency
matrices, runs the property and anti-concentration experiments and replays
recorded runs.

Exit codes: 0 success, 1 other failure, 2 config/input error,
3 infeasible frozen columns, 4 replay divergence, 5 cap or budget refusal,
130 interrupted.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from core import __version__
from core.config import apply_config_to_paths, ensure_config, resolve_workers
from core.errors import ConfigError, LabError
from core.logging import DEFAULT_LOG_FILENAME, get_logger, init_logger, read_jsonl_tail

# subcommand -> experiment name
EXPERIMENT_COMMANDS = {
    "psing": "psing-sweep",
    "properties": "property-suite",
    "anticonc": "anticonc",
    "lo": "lo-suite",
    "shuffle": "shuffle-suite",
    "enumerate": "enumerate",
}


# ---------------------------------------------------------
# Sub-Command Handlers
# ---------------------------------------------------------
def cmd_show_paths(paths):
    """Debug: Print all resolved system paths."""
    print("\n[Resolved Application Paths]")
    print(f"  OS Name       : {paths.os_name}")
    print(f"  Config File   : {paths.config_file}")
    print(f"  Data Dir      : {paths.data_dir}")
    print(f"  Logs Dir      : {paths.logs_dir}")
    print(f"  Runs Dir      : {paths.runs_dir}")
    print(f"  Run Index     : {paths.run_index}")
    print()
    return 0


def cmd_tail_logs(paths, n=20):
    """Debug: Print the last N lines of the JSON log."""
    log_path = paths.logs_dir / DEFAULT_LOG_FILENAME
    logs = read_jsonl_tail(log_path, max_lines=n)
    if not logs:
        print("(Log file is empty or missing)")
        return 0
    for item in logs:
        ts = item.get("ts", "")
        level = item.get("level", "INFO")
        msg = item.get("msg", "")
        meta = item.get("meta")
        print(f"[{ts}] {level}: {msg}" + (f" {json.dumps(meta, sort_keys=True)}" if meta else ""))
    return 0


def cmd_sample(cfg, args):
    """Draw graphs and print them (or save one file per graph under --out)."""
    from core.sampler import ChainConfig, sample_many, stream_switch_chain
    from core.rng import make_rng
    from core.storage import save_graph
    from core.graph import format_graph

    sampler = ChainConfig(
        method=args.method or cfg["sampler"]["method"],
        burn_in_factor=cfg["sampler"]["burn_in_factor"],
        thinning=cfg["sampler"]["thinning"],
    )
    if args.stream:
        # consecutive thinned states of one chain: correlated, for inspection only
        graphs = stream_switch_chain(args.n, args.d, sampler, make_rng(args.seed or 0), args.count)
    else:
        graphs = sample_many(args.n, args.d, args.count, sampler, args.seed or 0,
                             retry_budget=cfg["sampler"]["retry_budget"])
    for k, g in enumerate(graphs):
        if args.out:
            save_graph(Path(args.out) / f"graph_{k:05d}.txt", g)
        else:
            if k:
                print()
            print(format_graph(g), end="")
    if args.out:
        print(f"Wrote {args.count} graph(s) to {args.out}")
    return 0


def cmd_rank(cfg, args):
    """Singularity certificate for a graph file; --verify re-checks a saved one."""
    from core.rank import RankCertificate, eac_event, is_singular, verify_certificate
    from core.storage import load_graph, read_json

    g = load_graph(Path(args.graph))
    if args.verify:
        cert = RankCertificate.from_dict(read_json(Path(args.verify)))
        ok = verify_certificate(g, cert)
        print(json.dumps({"verified": ok}, sort_keys=True))
        return 0 if ok else 1

    rank_cfg = cfg["rank"]
    cert = is_singular(
        g, rng=args.seed or 0, prime_count=rank_cfg["prime_count"],
        prime_low=rank_cfg["prime_low"], prime_high=rank_cfg["prime_high"],
    )
    out = {"certificate": cert.to_dict()}
    if args.eac:
        out["eac"] = eac_event(g, args.eac, rng=args.seed or 0,
                               budget=rank_cfg["eac_budget"], coeff=rank_cfg["eac_coeff"]).to_dict()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _experiment_config(cfg, args, experiment):
    """--config document, or one built from --grid/--samples."""
    from core.harness import ExperimentConfig, load_experiment_config

    if args.config:
        exp = load_experiment_config(Path(args.config), cfg)
        if exp.experiment != experiment:
            raise ConfigError(f"{args.config} describes {exp.experiment!r}, not {experiment!r}")
    else:
        raw = {"experiment": experiment, "grid": args.grid or [], "n_samples": args.samples}
        exp = ExperimentConfig.from_dict(raw, cfg)
    if args.seed is not None:
        exp.master_seed = args.seed
    if args.out:
        exp.output_dir = args.out
    return exp


def _print_report(report):
    rows = report.point_rows
    print(f"\n[{report.config.experiment}] {len(report.rows)} row(s) in {report.runtime_ms} ms")
    for r in rows[:40]:
        shown = {k: v for k, v in r.items() if k not in ("advisory",) and v is not None}
        print("  " + json.dumps(shown, sort_keys=True))
    if len(rows) > 40:
        print(f"  ... {len(rows) - 40} more")
    if report.folder is not None:
        print(f"Run folder: {report.folder}")


def cmd_experiment(paths, cfg, args, workers):
    from core.harness import run_experiment

    exp = _experiment_config(cfg, args, EXPERIMENT_COMMANDS[args.command])
    report = run_experiment(exp, workers=workers, runs_dir=paths.runs_dir, run_index=paths.run_index)
    _print_report(report)
    return 0


def cmd_replay(args, workers):
    from core.harness import replay

    report = replay(Path(args.manifest), workers=workers)
    print(f"Replay identical: {len(report.rows)} row(s) match {args.manifest}")
    return 0


def _parse_point(text):
    try:
        n, d = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid point must look like N,D (got {text!r})")
    return [n, d]


# ---------------------------------------------------------
# Main Entry Point
# ---------------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(
        prog="DigraphLab",
        description="DigraphLab - singularity and structure of random d-regular digraphs.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    grp_run = parser.add_argument_group("Run Options")
    grp_run.add_argument("--config", metavar="FILE", help="Experiment config (.json or .toml)")
    grp_run.add_argument("--seed", type=int, metavar="N", help="Master seed (overrides the config)")
    grp_run.add_argument("--workers", type=int, metavar="N", help="Worker processes (overrides DL_WORKERS)")
    grp_run.add_argument("--out", metavar="DIR", help="Output folder (default: a new folder under runs_dir)")
    grp_run.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Console log level")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("sample", help="Draw uniform random d-regular digraphs")
    p.add_argument("n", type=int)
    p.add_argument("d", type=int)
    p.add_argument("--count", type=int, default=1, metavar="N")
    p.add_argument("--method", choices=["auto", "configuration", "switch"])
    p.add_argument("--stream", action="store_true", help="Thinned states of a single switch chain (correlated)")

    p = sub.add_parser("rank", help="Certify (non)singularity of a graph file")
    p.add_argument("graph", metavar="GRAPH_FILE")
    p.add_argument("--verify", metavar="CERT_JSON", help="Re-check a saved certificate instead")
    p.add_argument("--eac", metavar="P", help="Also run the almost-constant kernel test at level P")

    for name, experiment in EXPERIMENT_COMMANDS.items():
        p = sub.add_parser(name, help=f"Run the {experiment} experiment")
        p.add_argument("--grid", type=_parse_point, nargs="+", metavar="N,D", help="Grid points (without --config)")
        p.add_argument("--samples", type=int, default=1000, metavar="N", help="Samples per point (without --config)")

    p = sub.add_parser("replay", help="Re-run a recorded run and compare rows")
    p.add_argument("manifest", metavar="MANIFEST", help="manifest.json or its run folder")

    p = sub.add_parser("logs", help="Show the last log entries")
    p.add_argument("-n", type=int, default=20, metavar="N")

    sub.add_parser("paths", help="Display all resolved file paths")
    return parser


def main(argv=None):
    # REGISTER THE HOOK IMMEDIATELY
    from core.logging import global_exception_hook
    sys.excepthook = global_exception_hook

    from core.paths import get_app_paths

    argv = argv if argv is not None else sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 0

    # Bootstrap: OS paths first, then config may move data/logs/runs
    bootstrap_paths = get_app_paths(ensure=False)
    try:
        cfg = ensure_config(bootstrap_paths.config_dir)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    paths = apply_config_to_paths(bootstrap_paths, cfg).ensure()

    init_logger(paths.logs_dir, level=args.log_level or cfg["harness"]["log_level"])
    logger = get_logger("cli")

    if args.command == "paths":
        return cmd_show_paths(paths)
    if args.command == "logs":
        return cmd_tail_logs(paths, args.n)

    try:
        workers = resolve_workers(cfg, args.workers)
        if args.command == "sample":
            return cmd_sample(cfg, args)
        if args.command == "rank":
            return cmd_rank(cfg, args)
        if args.command == "replay":
            return cmd_replay(args, workers)
        return cmd_experiment(paths, cfg, args, workers)
    except LabError as e:
        logger.error("command_failed", extra={"meta": {
            "command": args.command, "error": type(e).__name__, "message": str(e), **e.meta,
        }})
        print(f"error: {e}", file=sys.stderr)
        diff = getattr(e, "diff", None)
        if diff:
            for entry in diff:
                print(f"  row {entry['row']}:\n    recorded: {entry['recorded']}\n    replayed: {entry['replayed']}",
                      file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nAborted by user.")
        sys.exit(130)
