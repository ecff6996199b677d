import csv
import json

import pytest

from chainpatch.cli import main
from chainpatch.errors import ChainpatchError, StageError
from chainpatch.minilang import TestCase, TestSuite, save_suite
from chainpatch.pipeline import (
    BUNDLED_CORPUS,
    EXIT_ERROR,
    EXIT_FULL,
    EXIT_NONE,
    CorpusEntry,
    PipelineConfig,
    aggregate,
    load_corpus,
    run_benchmark,
    run_pipeline,
)

EXTRAS = BUNDLED_CORPUS.parent / "extras"


def entry_files(name, root=BUNDLED_CORPUS):
    d = root / name
    return str(d / "program.acdc"), str(d / "suite.json")


def test_corpus_loads_and_is_well_formed():
    entries = load_corpus(BUNDLED_CORPUS)
    assert len(entries) >= 12
    assert len({e.name.split("_")[0] for e in entries}) >= 4
    assert [e.name for e in entries] == sorted(e.name for e in entries)


def test_empty_corpus_dir_is_an_error(tmp_path):
    with pytest.raises(ChainpatchError):
        load_corpus(tmp_path)
    with pytest.raises(ChainpatchError):
        load_corpus(tmp_path / "missing")


def test_scenario1_entry_full_patch(tmp_path):
    entry = CorpusEntry.from_dir(BUNDLED_CORPUS / "grade_v2")
    report, code = run_pipeline(entry, PipelineConfig(), tmp_path)
    assert code == EXIT_FULL and report["status"] == "FULL" and report["scenario"] == 1
    assert (tmp_path / report["patch"]).exists()
    assert "XOR shouldNegate(" in (tmp_path / report["patched_source"]).read_text()
    assert report["accuracy"][-1]["fraction"] == 1.0 and report["accuracy"][-1]["accuracy"] == 1.0


def test_unrepairable_entry_exits_3():
    entry = CorpusEntry.from_dir(EXTRAS / "grade_const")
    report, code = run_pipeline(entry)
    assert code == EXIT_NONE and report["search"]["solutions"] == []


def test_no_failing_tests_is_a_stage_error(tmp_path):
    prog = tmp_path / "p.acdc"
    prog.write_text("func main(a:int){ if (a > 0) { print(1); } }")
    save_suite(TestSuite((TestCase((1,), "1\n"),)), tmp_path / "s.json")
    with pytest.raises(StageError) as exc:
        run_pipeline(CorpusEntry.from_files(prog, tmp_path / "s.json"))
    assert exc.value.stage == "localize"
    assert "nothing to localize" in str(exc.value)


def test_summary_is_recomputable_from_reports(tmp_path):
    summary, reports = run_benchmark(BUNDLED_CORPUS, PipelineConfig(fractions=(0.4, 1.0)), tmp_path)
    again = aggregate([json.loads(p.read_text()) for p in sorted((tmp_path / "reports").glob("*.json"))])
    for key in ("counts", "pattern_histogram", "scenario_distribution", "accuracy_by_fraction",
                "rows", "buggy_in_pred_list"):
        assert again[key] == summary[key]
    rows = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert len(rows) == summary["entries"]


def test_cli_run_and_exit_codes(tmp_path, capsys):
    prog, suite = entry_files("grade_v2")
    out = tmp_path / "r.json"
    assert main(["run", prog, suite, "--train-fractions", "1.0", "-o", str(out)]) == EXIT_FULL
    assert json.loads(out.read_text())["status"] == "FULL"
    prog, suite = entry_files("grade_const", EXTRAS)
    assert main(["search", prog, suite]) == EXIT_NONE
    capsys.readouterr()


def test_cli_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.acdc"
    bad.write_text("func main(){ print(1) }")
    _, suite = entry_files("grade_v2")
    assert main(["localize", str(bad), suite]) == EXIT_ERROR
    assert "bad.acdc:1:" in capsys.readouterr().err


def test_cli_localize_dumps(tmp_path, capsys):
    prog, suite = entry_files("lookup_v1")
    dot, trace = tmp_path / "g.dot", tmp_path / "t.ndjson"
    assert main(["localize", prog, suite, "--dump-cdg", str(dot), "--dump-trace", str(trace)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["pred_list_susp"]
    assert dot.read_text().startswith("digraph")
    assert all(json.loads(line)["type"] in ("cd-event", "snapshot")
               for line in trace.read_text().splitlines())


def test_cli_train_then_patch(tmp_path, capsys):
    prog, suite = entry_files("grade_v2")
    patch = tmp_path / "grade.patch.json"
    assert main(["train", prog, suite, "--patch", str(patch)]) == 0
    capsys.readouterr()
    src = tmp_path / "patched.acdc"
    code = main(["patch", prog, suite, str(patch), "--emit-source", str(src)])
    doc = json.loads(capsys.readouterr().out)
    assert code == 0 and doc["passed"] == doc["tests"]
    assert "shouldNegate" in src.read_text()


def test_cli_eval(capsys):
    prog, suite = entry_files("grade_v2")
    assert main(["eval", prog, suite, "--train-fractions", "0.4,1.0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["fraction"] for r in doc["accuracy"]] == [0.4, 1.0]


def test_cli_bad_fraction(capsys):
    prog, suite = entry_files("grade_v2")
    with pytest.raises(SystemExit):
        main(["eval", prog, suite, "--train-fractions", "0,2"])
    capsys.readouterr()


def test_cli_bench_and_report(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for name in ("grade_v2", "lookup_v1"):
        (corpus / name).symlink_to(BUNDLED_CORPUS / name)
    out = tmp_path / "bench"
    assert main(["bench", str(corpus), "--out", str(out), "--train-fractions", "0.4,1.0"]) == 0
    capsys.readouterr()
    figs = tmp_path / "figs"
    assert main(["report", str(out / "summary.json"), "--out", str(figs)]) == 0
    printed = capsys.readouterr().out.split()
    assert len(printed) == 6
    for name in ("pattern_histogram", "scenario_distribution", "accuracy_by_fraction"):
        assert (figs / f"{name}.csv").exists() and (figs / f"{name}.png").exists()
    rows = list(csv.reader((figs / "accuracy_by_fraction.csv").open()))
    assert rows[0] == ["fraction", "entries", "mean", "min", "max"] and len(rows) == 3
