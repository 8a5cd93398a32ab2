"""Command line entry point: ``esadapt run|rank|report|replay``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from . import analysis, ranking
from .advisor import TranscriptFormatError, format_float, read_transcripts
from .harness import ConfigError, execute, load_config
from .records import RecordFormatError, find_record_files, load_runs

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

EXPECTED_LAYOUT = "<records_dir>/f<ID>_d<DIM>/<strategy>/run<NNN>.csv (as written by `esadapt run`)"


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def cmd_run(config_path: str | Path, jobs: int = 1, output_dir: str | Path | None = None) -> int:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    if output_dir is not None:
        config.output_dir = Path(output_dir)
    try:
        outcomes = execute(config, jobs=jobs)
    except (OSError, ValueError) as exc:
        _error(str(exc))
        return EXIT_CONFIG
    counts = Counter(o.status for o in outcomes)
    print(
        f"{len(outcomes)} cells: {counts['done']} executed, {counts['skipped']} already complete, "
        f"{counts['failed']} failed -> {config.records_dir}"
    )
    failed = [o for o in outcomes if o.status == "failed"]
    for o in failed:
        print(f"  FAILED {o.cell.path}: {o.message}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def _load(records_dir: str | Path):
    if not find_record_files(records_dir):
        raise FileNotFoundError(f"no run records under {records_dir}; expected layout {EXPECTED_LAYOUT}")
    return load_runs(records_dir)


def cmd_rank(
    records_dir: str | Path,
    dimension: int,
    rounds: int,
    seed: int,
    out_dir: str | Path | None = None,
    budget: int | None = None,
) -> int:
    try:
        runs = [r for r in _load(records_dir) if r.dimension == dimension]
        if not runs:
            raise ValueError(f"no records for dimension {dimension} under {records_dir}")
        rows = ranking.rank_runs(runs, rounds, seed, budget=budget)
    except (FileNotFoundError, RecordFormatError, ValueError, KeyError) as exc:
        _error(str(exc).strip("'\""))
        return EXIT_CONFIG
    out = Path(out_dir) if out_dir is not None else Path(records_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = ranking.write_table(rows, out / f"ranking_{dimension}.csv")
    print(f"{'method':<24}{'rating':>9}{'dev':>8}{'vol':>9}{'games':>7}{'W':>6}{'D':>5}{'L':>6}")
    for r in rows:
        print(
            f"{r.method:<24}{r.rating:>9.0f}{r.deviation:>8.1f}{r.volatility:>9.4f}"
            f"{r.games:>7}{r.wins:>6}{r.draws:>5}{r.losses:>6}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_report(records_dir: str | Path, out_dir: str | Path, rounds: int = 25, seed: int = 0) -> int:
    try:
        runs = _load(records_dir)
    except (FileNotFoundError, RecordFormatError) as exc:
        _error(str(exc))
        return EXIT_CONFIG
    try:
        trajectories = analysis.trajectories_by_method(runs)
    except ValueError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    tables = {}
    for dim in sorted({r.dimension for r in runs}):
        try:
            tables[dim] = ranking.rank_runs(runs, rounds, seed, dimension=dim)
        except (KeyError, ValueError) as exc:
            print(f"warning: no ranking for dimension {dim}: {str(exc).strip(chr(39))}", file=sys.stderr)
    try:
        manifest = analysis.export_report(runs, trajectories, tables, out_dir)
    except OSError as exc:
        _error(str(exc))
        return EXIT_PARTIAL
    for name, path in manifest.items():
        print(f"wrote {path}")
    return EXIT_OK


def cmd_replay(transcript_file: str | Path, full: bool = False) -> int:
    try:
        transcripts = read_transcripts(transcript_file)
    except OSError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    except TranscriptFormatError as exc:
        _error(f"malformed transcript: {exc}")
        return EXIT_CONFIG
    for i, t in enumerate(transcripts, start=1):
        print(f"## exchange {i} (generation {t.generation}, {t.latency_ms:g} ms)")
        if t.parsed_sigma is not None:
            note = " [clamped]" if t.clamped else ""
            print(f"   recommended step size: {format_float(t.parsed_sigma)}{note}")
        if t.failure:
            print(f"   !! FAILURE: {t.failure}")
        if full:
            print("   system:")
            print("\n".join("     " + line for line in t.rendered_system.split("\n")))
            print("   user:")
            print("\n".join("     " + line for line in t.rendered_user.split("\n")))
        else:
            print(f"   prompt: {len(t.rendered_user)} chars")
        print("   response:")
        print("\n".join("     " + line for line in t.raw_response.split("\n")))
    print(f"{len(transcripts)} exchanges")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esadapt", description="Step-size adaptation experiments for the (1+1)-ES.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute every cell of an experiment config (resumable)")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p.add_argument("--output-dir", default=None, help="override output_dir from the config")

    p = sub.add_parser("rank", help="Glicko-2 ranking for one dimension")
    p.add_argument("records_dir")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--rounds", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None, help="compare at this many evaluations (default: full runs)")
    p.add_argument("--out", default=None, help="directory for ranking_<dim>.csv (default: records_dir)")

    p = sub.add_parser("report", help="box-plot and trajectory data plus figures")
    p.add_argument("records_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--rounds", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("replay", help="pretty-print an advisor transcript file")
    p.add_argument("file")
    p.add_argument("--full", action="store_true", help="include the rendered prompts")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, jobs=args.jobs, output_dir=args.output_dir)
    if args.command == "rank":
        return cmd_rank(args.records_dir, args.dim, args.rounds, args.seed, out_dir=args.out, budget=args.budget)
    if args.command == "report":
        return cmd_report(args.records_dir, args.out, rounds=args.rounds, seed=args.seed)
    return cmd_replay(args.file, full=args.full)


if __name__ == "__main__":
    sys.exit(main())
