"""Command-line interface: subcommands, defaults, and failure exit codes."""

from __future__ import annotations

import json

import pytest

from helpers import plate_script, write_plate_bundle
from tidyagent.cli import default_cassette, main
from tidyagent.resources import data_path


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    return write_plate_bundle(tmp_path_factory.mktemp("cli-plate"))


def test_run_single_condition_prints_table(bundle, capsys):
    world, script, cassettes = bundle
    rc = main(
        [
            "run",
            "--condition",
            "instruction+search2+llm",
            "--world",
            str(world),
            "--script",
            str(script),
            "--cassette",
            str(cassettes["instruction+search2+llm"]),
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("Condition")
    row = lines[2].split()
    assert row == ["instruction+search2+llm", "100.0", "40.0", "8", "36", "5"]


def test_run_writes_artifacts(bundle, tmp_path, capsys):
    world, script, cassettes = bundle
    out_dir = tmp_path / "results"
    rc = main(
        [
            "run",
            "--condition",
            "instruction",
            "--world",
            str(world),
            "--script",
            str(script),
            "--out",
            str(out_dir),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    assert (out_dir / "instruction_transcript.json").exists()
    measures = json.loads((out_dir / "instruction_measures.json").read_text())
    assert measures["condition"] == "instruction"
    assert measures["completion_rate"] == 100.0
    assert (out_dir / "report.csv").read_text().splitlines()[1].startswith(
        "instruction,100.0,--,"
    )
    assert (out_dir / "report.txt").read_text().startswith("Condition")


def test_report_renders_measures_directory(bundle, tmp_path, capsys):
    world, script, cassettes = bundle
    out_dir = tmp_path / "results"
    for condition in ("instruction", "instruction+search2+llm"):
        cassette = cassettes.get(condition)
        args = [
            "run",
            "--condition",
            condition,
            "--world",
            str(world),
            "--script",
            str(script),
            "--out",
            str(out_dir),
        ]
        if cassette:
            args += ["--cassette", str(cassette)]
        assert main(args) == 0
    capsys.readouterr()
    assert main(["report", "--results", str(out_dir)]) == 0
    table = capsys.readouterr().out.splitlines()
    # rows come back in canonical condition order, instruction first
    assert table[2].split()[0] == "instruction"
    assert table[3].split()[0] == "instruction+search2+llm"
    assert main(["report", "--results", str(out_dir), "--csv"]) == 0
    csv_out = capsys.readouterr().out
    assert csv_out.startswith("condition,completion_rate,")
    assert "instruction+search2+llm,100.0,40.0,8,36,5" in csv_out


def test_report_empty_directory_fails(tmp_path, capsys):
    rc = main(["report", "--results", str(tmp_path)])
    assert rc == 1
    assert "measures" in capsys.readouterr().err


def test_replay_recomputes_measures(bundle, tmp_path, capsys):
    world, script, cassettes = bundle
    out_dir = tmp_path / "results"
    condition = "instruction+search2+llm"
    main(
        [
            "run",
            "--condition",
            condition,
            "--world",
            str(world),
            "--script",
            str(script),
            "--cassette",
            str(cassettes[condition]),
            "--out",
            str(out_dir),
        ]
    )
    capsys.readouterr()
    transcript_path = out_dir / "instruction_search2_llm_transcript.json"
    assert main(["replay", str(transcript_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[2].split() == [
        "instruction+search2+llm",
        "100.0",
        "40.0",
        "8",
        "36",
        "5",
    ]
    assert main(["replay", str(transcript_path), "--dialogue"]) == 0
    dialogue = capsys.readouterr().out
    assert dialogue.startswith("Instructor: The task is to tidy the kitchen.")
    assert "Agent: [LM] For the ceramic-plate should I 'Open dishwasher'?" in dialogue


def test_missing_world_file_exits_nonzero(capsys):
    rc = main(["run", "--condition", "instruction", "--world", "/nope/x.json"])
    assert rc == 1
    assert "missing file" in capsys.readouterr().err


def test_cassette_mismatch_exits_two(bundle, capsys):
    world, script, cassettes = bundle
    rc = main(
        [
            "run",
            "--condition",
            "instruction+search2+llm",
            "--world",
            str(world),
            "--script",
            str(script),
            "--cassette",
            str(cassettes["search+llm"]),
        ]
    )
    assert rc == 2
    assert "cassette mismatch" in capsys.readouterr().err


def test_script_gap_exits_two(bundle, tmp_path, capsys):
    world, _, _ = bundle
    script = plate_script()
    script.actions.clear()
    gappy = tmp_path / "gappy.json"
    script.save(gappy)
    rc = main(
        ["run", "--condition", "instruction", "--world", str(world), "--script", str(gappy)]
    )
    assert rc == 2
    assert "script gap" in capsys.readouterr().err


def test_unknown_condition_rejected_by_parser(bundle):
    world, script, _ = bundle
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--condition", "mystery", "--world", str(world), "--script", str(script)])
    assert excinfo.value.code == 2


def test_default_cassette_paths():
    assert default_cassette("instruction", "kitchen") is None
    assert default_cassette("instruction+search", "kitchen") is None
    path = default_cassette("instruction+search4+llm", "kitchen")
    assert path == data_path("cassettes/kitchen_instruction_search4_llm.jsonl")
    assert default_cassette("search+llm", "plate").name == "plate_search_llm.jsonl"
