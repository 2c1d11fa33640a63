"""End-to-end tests of the command line pipeline."""

import json

import pandas as pd
import pytest

import main
from cer_engine.workloads import BUY_SELL_PATTERN, buy_sell_stream, trade_schema, write_schema, write_stream_csv

STREAMING_BUY_SELL = '{true}* ; {type=="B"}:mark->r1 ; {true}* ; {type=="S" && id==r1.id}:mark within 2'


@pytest.fixture
def files(tmp_path):
    schema = trade_schema()
    paths = {
        "schema": write_schema(schema, tmp_path / "trades.schema"),
        "stream": write_stream_csv(buy_sell_stream(), schema, tmp_path / "trades.csv"),
        "pattern": tmp_path / "buy_sell.sremo",
        "streaming": tmp_path / "streaming.sremo",
    }
    paths["pattern"].write_text(BUY_SELL_PATTERN + "\n", encoding="utf-8")
    paths["streaming"].write_text(STREAMING_BUY_SELL + "\n", encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}


def _run(capsys, *argv):
    code = main.main(list(argv))
    out, err = capsys.readouterr()
    return code, [line for line in out.splitlines() if line], err


def _with_stream(command, files, pattern="pattern"):
    return [command, "--pattern", files[pattern], "--schema", files["schema"], "--stream", files["stream"]]


def test_match(files, capsys):
    code, lines, _ = _run(capsys, *_with_stream("match", files))
    assert code == 0
    assert sorted(lines) == ["4\t1,4", "4\t2,4", "5\t1,5", "5\t2,5"]


def test_match_json(files, capsys):
    code, lines, _ = _run(capsys, *_with_stream("match", files), "--format", "json")
    assert code == 0
    records = sorted((r["detection"], tuple(r["indices"])) for r in map(json.loads, lines))
    assert records == [(4, (1, 4)), (4, (2, 4)), (5, (1, 5)), (5, (2, 5))]


def test_match_window_override(files, capsys):
    code, lines, _ = _run(capsys, *_with_stream("match", files), "--window", "4")
    assert code == 0
    assert sorted(lines) == ["4\t1,4", "4\t2,4", "5\t2,5"]


def test_match_strategy(files, tmp_path, capsys):
    pattern = tmp_path / "adjacent.sremo"
    pattern.write_text('{type=="B"}:mark->r1 ; {type=="S" && id==r1.id}:mark', encoding="utf-8")
    files = dict(files, adjacent=str(pattern))

    code, lines, _ = _run(capsys, *_with_stream("match", files, "adjacent"))
    assert code == 0
    assert lines == []

    code, lines, _ = _run(capsys, *_with_stream("match", files, "adjacent"), "--strategy", "any")
    assert code == 0
    assert sorted(lines) == ["4\t1,4", "4\t2,4", "5\t1,5", "5\t2,5"]


def test_compile(files, tmp_path, capsys):
    dot = tmp_path / "buy_sell.dot"
    code, lines, _ = _run(
        capsys, "compile", "--pattern", files["pattern"], "--schema", files["schema"], "--dot", str(dot)
    )
    assert code == 0
    assert lines[0].startswith("states=")
    assert "registers=r1" in lines
    assert "window=-" in lines
    assert dot.read_text(encoding="utf-8").startswith("digraph")


def test_determinize(files, capsys):
    code, lines, _ = _run(capsys, "determinize", "--pattern", files["streaming"], "--schema", files["schema"])
    assert code == 0
    assert "states=3" in lines
    assert "window=2" in lines


def test_determinize_needs_a_window(files, capsys):
    code, lines, err = _run(capsys, "determinize", "--pattern", files["pattern"], "--schema", files["schema"])
    assert code == 2
    assert lines == []
    assert "determinize failed in compile_node" in err
    assert "window required for determinization" in err


def test_complement_check(files, capsys):
    code, lines, _ = _run(capsys, *_with_stream("complement-check", files, "streaming"))
    assert code == 0
    assert lines == ["PASS checked=6"]


def test_bench(files, tmp_path, capsys):
    report = tmp_path / "bench.csv"
    code, lines, _ = _run(capsys, *_with_stream("bench", files), "--repeat", "1", "--csv", str(report))
    assert code == 0
    assert "events_consumed=6" in lines
    assert "matches_emitted=4" in lines
    frame = pd.read_csv(report)
    assert len(frame) == 1
    assert frame.loc[0, "events_consumed"] == 6


def test_exit_codes(files, tmp_path, capsys):
    broken = tmp_path / "broken.sremo"
    broken.write_text('{type=="B"', encoding="utf-8")
    bad_stream = tmp_path / "bad.csv"
    bad_stream.write_text("B,1,22,300\nB,x,24,225\n", encoding="utf-8")

    test_cases = [
        (dict(files, pattern=str(broken)), 2),
        (dict(files, stream=str(tmp_path / "missing.csv")), 3),
        (dict(files, stream=str(bad_stream)), 1),
    ]
    for case_files, expected in test_cases:
        code, _, err = _run(capsys, *_with_stream("match", case_files))
        assert code == expected, case_files
        assert "match failed" in err


def test_unwritable_dot_file(files, tmp_path, capsys):
    dot = tmp_path / "no_such_dir" / "buy_sell.dot"
    code, _, err = _run(
        capsys, "compile", "--pattern", files["pattern"], "--schema", files["schema"], "--dot", str(dot)
    )
    assert code == 3
    assert "cannot write DOT file" in err


def test_empty_stream(files, tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    code, lines, err = _run(capsys, *_with_stream("match", dict(files, stream=str(empty))))
    assert code == 0
    assert lines == []
    assert "failed" not in err
