"""End-to-end repair pipeline and the corpus benchmark."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from chainpatch import __version__
from chainpatch.errors import ChainpatchError, StageError
from chainpatch.learner.svm import SvmConfig
from chainpatch.learner.training import DEFAULT_FRACTIONS, collect_training_data, evaluate, train_all
from chainpatch.localizer import LocalizerConfig, localize
from chainpatch.minilang import load_suite, parse_file
from chainpatch.patcher import build_patch, emit_patched_source, save_patch
from chainpatch.runtime import RunConfig, baseline
from chainpatch.search import FULL, PATTERNS, SCENARIOS, search

log = logging.getLogger(__name__)

EXIT_FULL = 0
EXIT_PARTIAL = 2
EXIT_NONE = 3
EXIT_ERROR = 1

BUNDLED_CORPUS = Path(__file__).resolve().parent / "corpus" / "bench"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    program_path: Path
    suite_path: Path
    description: str = ""
    buggy_predicate: Optional[int] = None
    expected_scenario: Optional[int] = None

    @classmethod
    def from_dir(cls, path) -> "CorpusEntry":
        path = Path(path)
        meta_file = path / "entry.json"
        if not meta_file.is_file():
            raise ChainpatchError(f"{path} is not a corpus entry: entry.json is missing")
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
        entry = cls(
            name=meta.get("name", path.name),
            program_path=path / meta.get("program", "program.acdc"),
            suite_path=path / meta.get("suite", "suite.json"),
            description=meta.get("description", ""),
            buggy_predicate=meta.get("buggy_predicate"),
            expected_scenario=meta.get("expected_scenario"),
        )
        entry.check_files()
        return entry

    @classmethod
    def from_files(cls, program, suite, name=None) -> "CorpusEntry":
        entry = cls(name or Path(program).stem, Path(program), Path(suite))
        entry.check_files()
        return entry

    def check_files(self) -> None:
        for p in (self.program_path, self.suite_path):
            if not p.is_file():
                raise ChainpatchError(f"corpus entry {self.name}: {p} does not exist")


def load_corpus(path) -> list:
    path = Path(path)
    if not path.is_dir():
        raise ChainpatchError(f"corpus directory {path} does not exist")
    entries = [CorpusEntry.from_dir(d) for d in sorted(path.iterdir())
               if d.is_dir() and (d / "entry.json").is_file()]
    if not entries:
        raise ChainpatchError(f"corpus directory {path} contains no entries")
    return entries


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    fractions: tuple = DEFAULT_FRACTIONS
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)

    @property
    def run(self) -> RunConfig:
        return self.localizer.run


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ChainpatchError, ValueError, ArithmeticError, OSError) as exc:
        raise StageError(name, exc) from exc


def pid_taus(program, fits) -> dict:
    """Causal effect of each predicate statement that was fitted, keyed by PredicateId."""
    out = {}
    for sid, fit in fits.items():
        pid = program.pid_of_sid(sid)
        if pid is not None:
            out[pid] = fit.tau
    return out


def run_pipeline(entry: CorpusEntry, config: PipelineConfig = PipelineConfig(),
                 out_dir=None) -> tuple:
    """localize -> search -> collect -> train -> patch -> evaluate.

    Returns (report dict, exit code). Stage failures raise StageError.
    With ``out_dir`` the patch and the annotated source are written there and
    the report names them relative to that directory.
    """
    run_cfg = config.run
    with stage("load"):
        program = parse_file(entry.program_path)
        suite = load_suite(entry.suite_path)
    with stage("baseline"):
        suite = baseline(program, suite, run_cfg)
    with stage("localize"):
        loc = localize(program, suite, config.localizer)
    taus = pid_taus(program, loc.fits)
    with stage("search"):
        sr = search(program, suite, loc.pred_list, run_cfg, taus, loc.profiles)

    report = {
        "entry": entry.name,
        "tool_version": __version__,
        "program_digest": program.digest_hex,
        "seed": config.seed,
        "tests": len(suite),
        "failing": suite.failing,
        "buggy_predicate": entry.buggy_predicate,
        "expected_scenario": entry.expected_scenario,
        "localization": loc.to_json(program),
        "search": sr.to_json(),
    }
    best = sr.best
    if best is None:
        report.update(status="NONE", scenario=None, solution=None, patch=None,
                      patched_source=None, training_sizes={}, accuracy=[])
        report["exit_code"] = EXIT_NONE
        return report, EXIT_NONE

    scenario = sr.scenarios[0]
    with stage("collect"):
        sets = collect_training_data(program, suite, range(len(suite)), best, run_cfg)
    with stage("train"):
        svm_cfg = SvmConfig(**{**vars(config.svm), "seed": config.seed})
        models = train_all(sets, svm_cfg)
    with stage("patch"):
        patch = build_patch(program, best, [models[p] for p in best.predicates],
                            provenance={"scenario": scenario, "fraction": 1.0,
                                        "seed": config.seed, "entry": entry.name})
        patch_name = source_name = None
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            patch_name = f"{entry.name}.patch.json"
            source_name = f"{entry.name}.patched.acdc"
            save_patch(patch, out / patch_name, program)
            (out / source_name).write_text(emit_patched_source(program, best), encoding="utf-8")
    with stage("evaluate"):
        accuracy = [evaluate(program, suite, best, f, config.seed, svm_cfg, run_cfg).to_json()
                    for f in config.fractions]

    code = EXIT_FULL if best.is_full else EXIT_PARTIAL
    report.update(
        status=best.completeness,
        scenario=scenario,
        solution=best.to_json(),
        patch=patch_name,
        patched_source=source_name,
        training_sizes={str(p): [len(ts.ns), len(ts.dns)] for p, ts in sorted(sets.items())},
        accuracy=accuracy,
        exit_code=code,
    )
    return report, code


# -- benchmark -----------------------------------------------------------------

def _bench_one(args) -> dict:
    entry, config, out_dir = args
    try:
        report, _ = run_pipeline(entry, config, out_dir)
    except StageError as exc:
        report = {"entry": entry.name, "status": "ERROR", "error": str(exc), "stage": exc.stage,
                  "exit_code": EXIT_ERROR, "buggy_predicate": entry.buggy_predicate,
                  "expected_scenario": entry.expected_scenario}
    return report


def summarize_report(report: dict) -> dict:
    """One summary row, computed only from a per-entry report."""
    pred_list = (report.get("localization") or {}).get("pred_list_susp", [])
    buggy = report.get("buggy_predicate")
    expected = report.get("expected_scenario")
    scenario = report.get("scenario")
    search_doc = report.get("search") or {}
    return {
        "entry": report["entry"],
        "status": report["status"],
        "exit_code": report["exit_code"],
        "tests": report.get("tests"),
        "failing": len(report.get("failing", [])),
        "buggy_predicate": buggy,
        "pred_list_susp": pred_list,
        "buggy_in_pred_list": None if buggy is None else buggy in pred_list,
        "solution": (report.get("solution") or {}).get("pairs"),
        "full_solutions": search_doc.get("full_count", 0),
        "partial_solutions": search_doc.get("partial_count", 0),
        "scenario": scenario,
        "expected_scenario": expected,
        "scenario_match": None if expected is None else scenario == expected,
        "accuracy": {repr(a["fraction"]): a["accuracy"] for a in report.get("accuracy", [])},
        "error": report.get("error"),
    }


def aggregate(reports: list) -> dict:
    """Benchmark summary from per-entry reports (pure: no execution)."""
    rows = [summarize_report(r) for r in sorted(reports, key=lambda r: r["entry"])]
    counts = {k: sum(1 for r in rows if r["status"] == k) for k in ("FULL", "PARTIAL", "NONE", "ERROR")}
    patterns = {p: 0 for p in PATTERNS}
    for rep in reports:
        for p, n in ((rep.get("search") or {}).get("pattern_histogram") or {}).items():
            patterns[p] += n
    scenarios = {str(k): 0 for k in SCENARIOS}
    for r in rows:
        if r["scenario"] is not None:
            scenarios[str(r["scenario"])] += 1
    fractions = sorted({float(f) for r in rows for f in r["accuracy"]})
    acc_table = []
    for f in fractions:
        vals = [r["accuracy"][repr(f)] for r in rows if repr(f) in r["accuracy"]]
        acc_table.append({"fraction": f, "entries": len(vals),
                          "mean": sum(vals) / len(vals), "min": min(vals), "max": max(vals)})
    return {
        "entries": len(rows),
        "counts": counts,
        "buggy_in_pred_list": sum(1 for r in rows if r["buggy_in_pred_list"]),
        "scenario_matches": sum(1 for r in rows if r["scenario_match"]),
        "scenario_expected": sum(1 for r in rows if r["expected_scenario"] is not None),
        "pattern_histogram": patterns,
        "scenario_distribution": scenarios,
        "accuracy_by_fraction": acc_table,
        "rows": rows,
    }


def run_benchmark(corpus_dir, config: PipelineConfig = PipelineConfig(), out_dir=None,
                  jobs: int = 1) -> tuple:
    """Run every entry; returns (summary, per-entry reports). Failures become ERROR rows."""
    entries = load_corpus(corpus_dir)
    patch_dir = Path(out_dir) / "patches" if out_dir is not None else None
    work = [(e, config, patch_dir) for e in entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_bench_one, work))
    else:
        reports = [_bench_one(w) for w in work]
    for rep in reports:
        log.info("%s: %s", rep["entry"], rep["status"])
    summary = aggregate(reports)
    summary["tool_version"] = __version__
    summary["seed"] = config.seed
    if out_dir is not None:
        write_benchmark(summary, reports, out_dir)
    return summary, reports


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


SUMMARY_COLUMNS = ("entry", "status", "exit_code", "tests", "failing", "buggy_predicate",
                   "buggy_in_pred_list", "pred_list_susp", "solution", "full_solutions",
                   "partial_solutions", "scenario", "expected_scenario", "scenario_match", "error")


def summary_csv(summary: dict) -> str:
    fractions = [repr(a["fraction"]) for a in summary["accuracy_by_fraction"]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(SUMMARY_COLUMNS) + [f"accuracy@{f}" for f in fractions])
    for r in summary["rows"]:
        cells = []
        for c in SUMMARY_COLUMNS:
            v = r[c]
            cells.append(json.dumps(v) if isinstance(v, list) else ("" if v is None else v))
        cells += [r["accuracy"].get(f, "") for f in fractions]
        w.writerow(cells)
    return buf.getvalue()


def write_benchmark(summary: dict, reports: list, out_dir) -> None:
    out = Path(out_dir)
    (out / "reports").mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (out / "reports" / f"{rep['entry']}.json").write_text(dumps(rep), encoding="utf-8")
    (out / "summary.json").write_text(dumps(summary), encoding="utf-8")
    (out / "summary.csv").write_text(summary_csv(summary), encoding="utf-8")
