"""Experiment harness: run conditions, compute measures, render reports.

A condition run wires a world fixture, a replay cassette, and an instructor
script into one learning session, then reduces the transcript to the five
summary measures. Everything is deterministic given the input files, so two
runs of the same condition produce byte-identical transcripts.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .agent import CONDITIONS, SessionConfig, learn_task
from .instructor import InstructorScript, ScriptedInstructor
from .knowledge import KnowledgeStore
from .llm.client import Cassette, ReplayClient
from .transcript import EpisodeTranscript
from .world import load_world

REPORT_COLUMNS = (
    "condition",
    "completion_rate",
    "relevance_pct",
    "n_instructions",
    "n_words",
    "n_yesno",
)

TABLE_HEADERS = (
    "Condition",
    "Completion Rate (%)",
    "Relevant LLM Responses (%)",
    "# of Instruct.",
    "# of Words",
    "# Yes/No Inst.",
)


@dataclass(frozen=True)
class Measures:
    """The five summary measures of one condition run."""

    condition: str
    completion_rate: float
    relevance_pct: float | None
    n_instructions: int
    n_words: int
    n_yesno: int

    def to_dict(self) -> dict:
        return asdict(self)


def compute_measures(transcript: EpisodeTranscript) -> Measures:
    """Pure reduction of a transcript to Measures.

    completion_rate is achieved/outcomes as a percent (0 when the transcript
    has no outcomes at all); relevance_pct is yes/yesno as a percent and is
    None when no yes/no question was ever asked; instructions count typed
    utterances plus yes/no answers.
    """
    outcomes = transcript.outcome_count
    completion = 100.0 * transcript.achieved_count / outcomes if outcomes else 0.0
    yesno = transcript.yesno_count
    relevance = 100.0 * transcript.yes_count / yesno if yesno else None
    return Measures(
        condition=str(transcript.meta.get("condition", "")),
        completion_rate=completion,
        relevance_pct=relevance,
        n_instructions=transcript.instruction_count,
        n_words=transcript.word_total,
        n_yesno=yesno,
    )


def condition_needs_cassette(condition: str) -> bool:
    _, llm_goals, llm_actions, _ = CONDITIONS[condition]
    return llm_goals or llm_actions


def run_condition(
    condition: str,
    world_path: str | Path,
    script_path: str | Path,
    cassette_path: str | Path | None = None,
    out_dir: str | Path | None = None,
    *,
    knowledge: KnowledgeStore | None = None,
) -> tuple[EpisodeTranscript, Measures]:
    """Run one condition end-to-end from files; optionally write artifacts.

    The world file may carry a "truth" section (per-object destination
    categories and the list of closable location categories) used to judge
    outcomes; without it the agent's own satisfaction check is the judge.
    """
    config = SessionConfig.from_condition(condition)
    raw_world = json.loads(Path(world_path).read_text())
    world = load_world(raw_world)
    assertions = raw_world.get("truth")
    script = InstructorScript.load(script_path)
    client = None
    if condition_needs_cassette(condition):
        if cassette_path is None:
            raise ValueError(f"condition {condition} needs a cassette")
        client = ReplayClient(Cassette.load(cassette_path))
    meta = {
        "condition": condition,
        "world": Path(world_path).name,
        "script": Path(script_path).name,
        "cassette": Path(cassette_path).name if cassette_path else "",
    }
    transcript = learn_task(
        world,
        config,
        ScriptedInstructor(script),
        client,
        knowledge if knowledge is not None else KnowledgeStore(),
        assertions=assertions,
        meta=meta,
    )
    measures = compute_measures(transcript)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        slug = condition.replace("+", "_")
        transcript.save(out / f"{slug}_transcript.json")
        (out / f"{slug}_measures.json").write_text(
            json.dumps(measures.to_dict(), indent=2, sort_keys=True) + "\n"
        )
    return transcript, measures


def format_percent(value: float | None) -> str:
    return "--" if value is None else f"{value:.1f}"


def report_csv(results: list[Measures]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for m in results:
        writer.writerow(
            [
                m.condition,
                format_percent(m.completion_rate),
                format_percent(m.relevance_pct),
                m.n_instructions,
                m.n_words,
                m.n_yesno,
            ]
        )
    return buffer.getvalue()


def report_table(results: list[Measures]) -> str:
    rows = [list(TABLE_HEADERS)]
    for m in results:
        rows.append(
            [
                m.condition,
                format_percent(m.completion_rate),
                format_percent(m.relevance_pct),
                str(m.n_instructions),
                str(m.n_words),
                str(m.n_yesno),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_HEADERS))]
    lines = []
    for index, row in enumerate(rows):
        cells = [
            row[i].ljust(widths[i]) if i == 0 else row[i].rjust(widths[i])
            for i in range(len(row))
        ]
        lines.append("  ".join(cells).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def save_plot(results: list[Measures], path: str | Path) -> None:
    """Bar chart of completion/relevance per condition (optional extra)."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on extras
        raise RuntimeError(
            "plotting requires the 'plots' extra (matplotlib)"
        ) from exc
    conditions = [m.condition for m in results]
    completion = [m.completion_rate for m in results]
    relevance = [m.relevance_pct if m.relevance_pct is not None else 0.0 for m in results]
    positions = range(len(conditions))
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.bar([p - 0.2 for p in positions], completion, width=0.4, label="Completion (%)")
    ax.bar([p + 0.2 for p in positions], relevance, width=0.4, label="Relevance (%)")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(conditions, rotation=20, ha="right")
    ax.set_ylim(0, 105)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


__all__ = [
    "Measures",
    "REPORT_COLUMNS",
    "TABLE_HEADERS",
    "compute_measures",
    "condition_needs_cassette",
    "format_percent",
    "report_csv",
    "report_table",
    "run_condition",
    "save_plot",
]
