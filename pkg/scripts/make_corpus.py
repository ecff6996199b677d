"""Regenerate the bundled corpus from the reference programs.

Each entry is a reference program with one predicate mutated. Expected
outputs come from running the reference program, so the suites are oracles
for the intended behavior. Inputs are seeded; rerunning gives the same files.

    python3 scripts/make_corpus.py
"""

import argparse
import json
import random
from pathlib import Path

from chainpatch.minilang import TestCase, TestSuite, parse, save_suite
from chainpatch.runtime import baseline, execute

ROOT = Path(__file__).resolve().parents[1] / "src" / "chainpatch" / "corpus"


def median_inputs(rng):
    fixed = [(0, 0, 0), (2, 2, 2), (1, 2, 3), (3, 2, 1), (2, 1, 3), (1, 3, 2), (3, 1, 2), (2, 3, 1),
             (0, 1, 1), (1, 1, 0)]
    return fixed + [tuple(rng.randint(-6, 6) for _ in range(3)) for _ in range(26)]


def grade_inputs(rng):
    fixed = [-5, -1, 0, 59, 60, 65, 69, 70, 75, 79, 80, 85, 89, 90, 95, 100, 101, 150]
    return [(s,) for s in fixed] + [(rng.randint(0, 100),) for _ in range(18)]


def digits_inputs(rng):
    fixed = [0, 1, 7, 9, 10, 42, 100, 905, -3, -40, -128]
    return [(n,) for n in fixed] + [(rng.randint(-99999, 99999),) for _ in range(19)]


def lookup_inputs(rng):
    out = [(1, 1, 2, 3, 4, 5), (5, 1, 2, 3, 4, 5), (9, 1, 2, 3, 4, 5), (0, 0, 0, 0, 0, 0)]
    for _ in range(28):
        out.append(tuple(rng.randint(0, 6) for _ in range(6)))
    return out


def triangle_inputs(rng):
    fixed = [(3, 3, 3), (1, 1, 1), (3, 4, 5), (5, 4, 3), (2, 2, 3), (2, 3, 2), (3, 2, 2),
             (1, 2, 3), (3, 1, 2), (2, 3, 1), (1, 1, 2), (0, 1, 1), (-1, 2, 2), (1, 2, 4),
             (5, 5, 9), (4, 6, 5)]
    return fixed + [tuple(rng.randint(0, 7) for _ in range(3)) for _ in range(20)]


def joiner_inputs(rng):
    fixed = [(0, 1, 2, 3), (1, 1, 2, 3), (2, 4, 5, 6), (1, 0, 0, 0)]
    return fixed + [(rng.randint(0, 2), rng.randint(-9, 9), rng.randint(-9, 9), rng.randint(-9, 9))
                    for _ in range(22)]


def squares_inputs(rng):
    return [(n,) for n in range(-2, 9)] + [(rng.randint(0, 30),) for _ in range(6)]


PROGRAMS = {
    "median": median_inputs,
    "grade": grade_inputs,
    "digits": digits_inputs,
    "lookup": lookup_inputs,
    "triangle": triangle_inputs,
    "joiner": joiner_inputs,
    "squares": squares_inputs,
}

# name, program, original text, mutated text, bug kind, description, expected scenario
BENCH = [
    ("median_v1", "median", "if (b <= c) {\n      return b;", "if (b >= c) {\n      return b;",
     "wrong relational operator", "inner comparison of b and c reversed", 2),
    ("median_v2", "median", "  if (a <= c) {\n    return a;", "  if (!(a <= c)) {\n    return a;",
     "negated condition", "second-level comparison of a and c negated", None),
    ("grade_v1", "grade", "score >= 80", "score > 80",
     "off-by-one guard", "B threshold excludes 80", 2),
    ("grade_v2", "grade", "score >= 70", "!(score >= 70)",
     "negated condition", "C threshold negated", 1),
    ("grade_v3", "grade", "score > 100", "score >= 100",
     "off-by-one guard", "validity check rejects 100", 2),
    ("digits_v1", "digits", "while (x > 0)", "while (x > 9)",
     "off-by-one guard", "loop stops before the last digit", 4),
    ("digits_v2", "digits", "if (x < 0)", "if (x > 0)",
     "wrong relational operator", "sign test reversed", 2),
    ("lookup_v1", "lookup", "while (i < 5)", "while (i <= 5)",
     "off-by-one guard", "loop reads one past the end", 3),
    ("triangle_v1", "triangle", "a + b <= c || a + c <= b || b + c <= a",
     "a + b < c || a + c < b || b + c < a",
     "wrong relational operator", "degenerate triangles accepted", 2),
    ("triangle_v2", "triangle", "a == b && b == c", "a == b || b == c",
     "wrong logical operator", "equilateral test accepts two equal sides", 2),
    ("triangle_v3", "triangle", "} else if (a == b || b == c || a == c)",
     "} else if (!(a == b || b == c || a == c))",
     "negated condition", "isosceles test negated", None),
    ("joiner_v1", "joiner", "i > 0 && sep == 1", "i >= 0 && sep == 1",
     "off-by-one guard", "separator printed before the first value", 3),
]

# entries outside the benchmark: name, program, [(original, mutated)], description, scenario
EXTRAS = [
    ("grade_two_bugs", "grade", [("score >= 80", "score > 80"), ("score >= 60", "score > 60")],
     "B and D thresholds both exclude their boundary", 5),
    ("grade_const", "grade", [('print("F")', 'print("E")')],
     "wrong printed constant; no branch decision can produce the right text", None),
    ("squares_v1", "squares", [("r = r + i * i", "r = r + i * 2")],
     "wrong accumulator term; only runs with two or more iterations fail", None),
]


def mutate(source, old, new):
    if source.count(old) != 1:
        raise SystemExit(f"mutation anchor must occur exactly once: {old!r}")
    at = source.index(old)
    diff = next(i for i, (x, y) in enumerate(zip(old, new)) if x != y)
    return source.replace(old, new), at + diff


def buggy_predicate(program, offset):
    for info in program.predicate_table:
        stmt = program.predicate_stmt(info.pid)
        if stmt.lparen <= offset <= stmt.rparen:
            return info.pid
    return None


def build_suite(reference, inputs):
    cases, seen = [], set()
    for args in inputs:
        if args in seen:
            continue
        seen.add(args)
        out = execute(reference, TestCase(args, "")).output
        cases.append(TestCase(args, out, f"t{len(cases)}"))
    return TestSuite(tuple(cases))


def write_entry(dest, name, source, suite, meta):
    d = dest / name
    d.mkdir(parents=True, exist_ok=True)
    (d / "program.acdc").write_text(source, encoding="utf-8")
    save_suite(suite, d / "suite.json")
    doc = {"name": name, "program": "program.acdc", "suite": "suite.json"}
    doc.update(meta)
    (d / "entry.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    suites = {}
    for prog, gen in PROGRAMS.items():
        src = (ROOT / "reference" / f"{prog}.acdc").read_text(encoding="utf-8")
        suites[prog] = (src, build_suite(parse(src, f"{prog}.acdc"), gen(random.Random(args.seed))))

    for name, prog, old, new, kind, desc, scenario in BENCH:
        src, suite = suites[prog]
        buggy_src, at = mutate(src, old, new)
        buggy = parse(buggy_src, f"{name}.acdc")
        verdicts = baseline(buggy, suite).verdicts
        n_fail = verdicts.count("FAIL")
        if n_fail == 0:
            raise SystemExit(f"{name}: mutant passes every test")
        pid = buggy_predicate(buggy, at)
        if pid is None:
            raise SystemExit(f"{name}: mutation does not touch a predicate")
        meta = {"description": desc, "bug_kind": kind, "reference": prog, "buggy_predicate": pid}
        if scenario is not None:
            meta["expected_scenario"] = scenario
        write_entry(ROOT / "bench", name, buggy_src, suite, meta)
        print(f"{name}: {len(suite)} tests, {n_fail} failing, "
              f"buggy predicate {meta['buggy_predicate']}")

    for name, prog, edits, desc, scenario in EXTRAS:
        src, suite = suites[prog]
        buggy_src, pids = src, []
        for old, new in edits:
            buggy_src, at = mutate(buggy_src, old, new)
            pids.append(buggy_predicate(parse(buggy_src), at))
        buggy = parse(buggy_src, f"{name}.acdc")
        n_fail = baseline(buggy, suite).verdicts.count("FAIL")
        meta = {"description": desc, "reference": prog,
                "buggy_predicates": [p for p in pids if p is not None]}
        if scenario is not None:
            meta["expected_scenario"] = scenario
        write_entry(ROOT / "extras", name, buggy_src, suite, meta)
        print(f"extra {name}: {len(suite)} tests, {n_fail} failing")


if __name__ == "__main__":
    main()
