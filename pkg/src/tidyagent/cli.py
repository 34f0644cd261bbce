"""Command-line entry points: run experiments, report, replay, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent import CONDITIONS
from .harness import (
    Measures,
    compute_measures,
    condition_needs_cassette,
    report_csv,
    report_table,
    run_condition,
    save_plot,
)
from .instructor import ScriptGap
from .llm.client import ClientError, MismatchError
from .resources import data_path
from .transcript import EpisodeTranscript, dialogue_view


def default_cassette(condition: str, world_stem: str) -> Path | None:
    if not condition_needs_cassette(condition):
        return None
    slug = condition.replace("+", "_")
    return data_path(f"cassettes/{world_stem}_{slug}.jsonl")


def cmd_run(args: argparse.Namespace) -> int:
    conditions = list(CONDITIONS) if args.condition == "all" else [args.condition]
    world = Path(args.world)
    script = Path(args.script)
    results: list[Measures] = []
    for condition in conditions:
        cassette = (
            Path(args.cassette)
            if args.cassette
            else default_cassette(condition, world.stem)
        )
        _, measures = run_condition(
            condition, world, script, cassette, out_dir=args.out
        )
        results.append(measures)
    table = report_table(results)
    print(table, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(report_csv(results))
        (out / "report.txt").write_text(table)
    if args.plot:
        save_plot(results, args.plot)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    paths = sorted(Path(args.results).glob("*_measures.json"))
    if not paths:
        print(f"no *_measures.json files under {args.results}", file=sys.stderr)
        return 1
    loaded = [Measures(**json.loads(p.read_text())) for p in paths]
    order = {name: i for i, name in enumerate(CONDITIONS)}
    loaded.sort(key=lambda m: order.get(m.condition, len(order)))
    print(report_csv(loaded) if args.csv else report_table(loaded), end="")
    if args.plot:
        save_plot(loaded, args.plot)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    transcript = EpisodeTranscript.load(args.transcript)
    if args.dialogue:
        for line in dialogue_view(transcript.events):
            print(line)
        return 0
    print(report_table([compute_measures(transcript)]), end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .session import serve

    return serve(
        world_path=args.world,
        condition=args.condition,
        cassette_path=args.cassette or default_cassette(args.condition, Path(args.world).stem),
        host=args.host,
        port=args.port,
        terminal=args.terminal,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tidyagent",
        description="Interactive one-shot task learning for household tidying.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one condition (or all) and report measures")
    run.add_argument(
        "--condition",
        default="all",
        choices=["all", *CONDITIONS],
        help="experimental condition (default: all)",
    )
    run.add_argument(
        "--world", default=str(data_path("worlds/kitchen.json")), help="world fixture JSON"
    )
    run.add_argument(
        "--script",
        default=str(data_path("scripts/kitchen.json")),
        help="instructor script JSON",
    )
    run.add_argument(
        "--cassette",
        default=None,
        help="replay cassette JSONL (default: shipped cassette for the condition)",
    )
    run.add_argument("--out", default=None, help="directory for transcripts and reports")
    run.add_argument("--plot", default=None, help="write a summary bar chart to this file")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="re-render a report from measures files")
    report.add_argument("--results", required=True, help="directory of *_measures.json")
    report.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    report.add_argument("--plot", default=None, help="write a summary bar chart to this file")
    report.set_defaults(func=cmd_report)

    replay = sub.add_parser("replay", help="recompute measures from a transcript")
    replay.add_argument("transcript", help="transcript JSON file")
    replay.add_argument(
        "--dialogue", action="store_true", help="print the dialogue view instead"
    )
    replay.set_defaults(func=cmd_replay)

    serve = sub.add_parser("serve", help="serve a live session for the console")
    serve.add_argument(
        "--world", default=str(data_path("worlds/plate.json")), help="world fixture JSON"
    )
    serve.add_argument(
        "--condition",
        default="instruction+search2+llm",
        choices=list(CONDITIONS),
        help="condition gating the live session",
    )
    serve.add_argument("--cassette", default=None, help="replay cassette JSONL")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument(
        "--terminal",
        action="store_true",
        help="answer questions in the terminal instead of serving the console",
    )
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScriptGap as exc:
        print(f"script gap: {exc}", file=sys.stderr)
        return 2
    except MismatchError as exc:
        print(f"cassette mismatch: {exc}", file=sys.stderr)
        return 2
    except ClientError as exc:
        print(f"llm client error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
