"""Command line interface.

    chainpatch run program.acdc suite.json --out results/
    chainpatch bench --out bench-out/ --jobs 4
    chainpatch report bench-out/summary.json --out figures/
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from chainpatch import __version__
from chainpatch.errors import ChainpatchError, ParseError, StageError
from chainpatch.graphs import to_dot
from chainpatch.learner.svm import KERNELS, SvmConfig
from chainpatch.learner.training import DEFAULT_FRACTIONS, collect_training_data, evaluate, split_suite, train_all
from chainpatch.localizer import LocalizerConfig, localize
from chainpatch.minilang import load_suite, parse_file
from chainpatch.patcher import build_patch, emit_patched_source, load_patch, save_patch
from chainpatch.pipeline import (
    BUNDLED_CORPUS,
    EXIT_ERROR,
    CorpusEntry,
    PipelineConfig,
    dumps,
    pid_taus,
    run_benchmark,
    run_pipeline,
)
from chainpatch.reporting import render_report
from chainpatch.runtime import RunConfig, analysis_of, baseline, dump_trace, execute_with_oracle
from chainpatch.search import search

log = logging.getLogger("chainpatch")


def _fractions(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals or any(not 0 < v <= 1 for v in vals):
        raise argparse.ArgumentTypeError("training fractions must lie in (0, 1]")
    return vals


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--seed", type=int, default=42, help="seed for splits and SMO ordering (default 42)")
    g.add_argument("--jobs", type=int, default=1, help="parallel corpus entries for bench")
    g.add_argument("--step-budget", type=int, default=1_000_000,
                   help="interpreter steps per test run (default 1000000)")
    g.add_argument("--max-chain-length", type=int, default=4)
    g.add_argument("--profile-budget-secs", type=float, default=60.0,
                   help="wall-clock budget for profiling one chain length")
    g.add_argument("--train-fractions", type=_fractions, default=DEFAULT_FRACTIONS,
                   help="comma-separated training fractions for evaluation")
    g.add_argument("--kernel", choices=KERNELS, default="rbf")
    g.add_argument("--svm-c", type=float, default=1.0)
    g.add_argument("--svm-gamma", type=float, default=None,
                   help="kernel width (default 1 / (d * feature variance))")
    g.add_argument("--dump-trace", metavar="FILE",
                   help="write control dependence events and snapshots as NDJSON")
    g.add_argument("-o", "--output", metavar="FILE", help="write the JSON report here instead of stdout")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="chainpatch",
                                 description="Localize and patch faulty predicates in .acdc programs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text, with_suite=True):
        sp = sub.add_parser(name, help=help_text, parents=[common])
        if with_suite:
            sp.add_argument("program", help="program source (.acdc)")
            sp.add_argument("suite", help="test suite (JSON)")
        return sp

    sp = add("localize", "rank suspicious control dependence chains and predicates")
    sp.add_argument("--dump-cdg", metavar="FILE", help="write CFGs and control dependences as DOT")
    add("search", "search for predicate negations that repair failing tests")
    sp = add("train", "train classifiers for the best solution and save the patch")
    sp.add_argument("--patch", metavar="FILE", required=True, help="where to write the patch")
    sp.add_argument("--fraction", type=float, default=1.0,
                    help="train on a stratified fraction of the suite (default: all of it)")
    sp = add("patch", "run the suite under a saved patch")
    sp.add_argument("patch_file", metavar="PATCH")
    sp.add_argument("--emit-source", metavar="FILE",
                    help="also write the program with the patched conditions marked")
    sp = add("run", "full pipeline: localize, search, train, patch, evaluate")
    sp.add_argument("--out", metavar="DIR", help="directory for the patch and patched source")
    add("eval", "classification accuracy per training fraction")
    sp = add("bench", "run the pipeline over a corpus directory", with_suite=False)
    sp.add_argument("corpus", nargs="?", default=str(BUNDLED_CORPUS),
                    help="corpus directory (default: the bundled benchmark)")
    sp.add_argument("--out", metavar="DIR", help="write summary.json, summary.csv and per-entry reports")
    sp = add("report", "CSV tables and figures from a bench summary", with_suite=False)
    sp.add_argument("summary", help="summary.json written by bench")
    sp.add_argument("--out", metavar="DIR", required=True)
    sp.add_argument("--no-figures", action="store_true", help="write the CSV tables only")
    return ap


def pipeline_config(args) -> PipelineConfig:
    run = RunConfig(step_budget=args.step_budget)
    loc = LocalizerConfig(max_chain_length=args.max_chain_length,
                          profile_budget_secs=args.profile_budget_secs, run=run)
    svm = SvmConfig(kernel=args.kernel, C=args.svm_c, gamma=args.svm_gamma, seed=args.seed)
    return PipelineConfig(seed=args.seed, fractions=tuple(args.train_fractions), localizer=loc, svm=svm)


def _emit(args, doc) -> None:
    text = dumps(doc)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args):
    program = parse_file(args.program)
    suite = baseline(program, load_suite(args.suite), RunConfig(step_budget=args.step_budget))
    return program, suite


def _localize(args, cfg, program, suite):
    sink, fh = None, None
    if args.dump_trace:
        fh = open(args.dump_trace, "w", encoding="utf-8")

        def sink(i, res):
            dump_trace(res, i, fh)
    try:
        return localize(program, suite, cfg.localizer, trace_sink=sink)
    finally:
        if fh is not None:
            fh.close()


def _search(args, cfg, program, suite):
    loc = _localize(args, cfg, program, suite)
    sr = search(program, suite, loc.pred_list, cfg.run, pid_taus(program, loc.fits), loc.profiles)
    return loc, sr


def cmd_localize(args, cfg) -> int:
    program, suite = _load(args)
    if args.dump_cdg:
        Path(args.dump_cdg).write_text(to_dot(program, analysis_of(program)), encoding="utf-8")
    loc = _localize(args, cfg, program, suite)
    _emit(args, loc.to_json(program))
    return 0


def cmd_search(args, cfg) -> int:
    program, suite = _load(args)
    loc, sr = _search(args, cfg, program, suite)
    _emit(args, {"pred_list_susp": loc.pred_list, "search": sr.to_json()})
    return 0 if sr.full else (2 if sr.solutions else 3)


def _best(args, cfg, program, suite):
    _, sr = _search(args, cfg, program, suite)
    if sr.best is None:
        raise ChainpatchError("no negation pattern repairs any failing test; nothing to train")
    return sr.best, sr.scenarios[0]


def cmd_train(args, cfg) -> int:
    program, suite = _load(args)
    best, scenario = _best(args, cfg, program, suite)
    if args.fraction >= 1.0:
        train_idx = list(range(len(suite)))
    else:
        train_idx, _ = split_suite(suite, args.fraction, args.seed)
    sets = collect_training_data(program, suite, train_idx, best, cfg.run)
    models = train_all(sets, cfg.svm)
    patch = build_patch(program, best, [models[p] for p in best.predicates],
                        provenance={"scenario": scenario, "fraction": args.fraction, "seed": args.seed})
    save_patch(patch, args.patch, program)
    _emit(args, {"patch": args.patch, "solution": best.to_json(), "scenario": scenario,
                 "training_tests": len(train_idx),
                 "training_sizes": {str(p): [len(ts.ns), len(ts.dns)] for p, ts in sorted(sets.items())}})
    return 0


def cmd_patch(args, cfg) -> int:
    program, suite = _load(args)
    patch = load_patch(args.patch_file)
    rows = []
    for i, case in enumerate(suite.cases):
        res = execute_with_oracle(program, case, patch, cfg.run)
        rows.append({"test": i, "name": case.name, "before": suite.verdicts[i], "after": res.verdict,
                     "failure_kind": res.failure_kind})
    if args.emit_source:
        Path(args.emit_source).write_text(emit_patched_source(program, patch), encoding="utf-8")
    passed = sum(1 for r in rows if r["after"] == "PASS")
    _emit(args, {"patch": args.patch_file, "passed": passed, "tests": len(rows), "results": rows})
    return 0 if passed == len(rows) else 2


def cmd_run(args, cfg) -> int:
    entry = CorpusEntry.from_files(args.program, args.suite)
    report, code = run_pipeline(entry, cfg, args.out)
    _emit(args, report)
    return code


def cmd_eval(args, cfg) -> int:
    program, suite = _load(args)
    best, scenario = _best(args, cfg, program, suite)
    rows = [evaluate(program, suite, best, f, args.seed, cfg.svm, cfg.run).to_json()
            for f in cfg.fractions]
    _emit(args, {"solution": best.to_json(), "scenario": scenario, "accuracy": rows})
    return 0


def cmd_bench(args, cfg) -> int:
    summary, _ = run_benchmark(args.corpus, cfg, args.out, args.jobs)
    _emit(args, summary)
    return 0


def cmd_report(args, cfg) -> int:
    summary = json.loads(Path(args.summary).read_text(encoding="utf-8"))
    written = render_report(summary, args.out, figures=not args.no_figures)
    for path in written:
        print(path)
    return 0


COMMANDS = {
    "localize": cmd_localize, "search": cmd_search, "train": cmd_train, "patch": cmd_patch,
    "run": cmd_run, "eval": cmd_eval, "bench": cmd_bench, "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, pipeline_config(args))
    except ParseError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_ERROR
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return EXIT_ERROR
    except (ChainpatchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
