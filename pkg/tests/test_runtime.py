import io
import json

import pytest

from chainpatch.errors import ChainpatchError, DigestMismatchError
from chainpatch.graphs import analyze
from chainpatch.learner.svm import ClassifierModel
from chainpatch.minilang import TestCase, parse
from chainpatch.patcher import PatchEntry, TrainedPatch
from chainpatch.runtime import (
    ALL,
    RUNTIME_ERROR,
    STEP_LIMIT,
    WRONG_OUTPUT,
    NegationPlan,
    RunConfig,
    count_occurrences,
    dump_trace,
    execute,
    execute_with_negation,
    execute_with_oracle,
)

EV = RunConfig(record_events=True)
MAX_BUGGY = "func main(a:int, b:int){ if (a < b) { print(a); } else { print(b); } }"
LOOP = "func main(n:int){ var i:int = 0; while (i < n) { if (i == 1) { print(i); } i = i + 1; } }"


def run(src, args, expected="", config=None):
    return execute(parse(src), TestCase(tuple(args), expected), config)


def test_print_passes_without_events():
    res = run("func main(a:int){ print(a); }", [7], "7\n", EV)
    assert res.passed and res.failure_kind == "none"
    assert res.events == []


def test_else_branch_event():
    p = parse("func main(a:int){ if (a < 0) { print(0); } else { print(a); } }")
    res = execute(p, TestCase((5,), "5\n"), EV)
    assert res.passed
    assert [(e.parent, e.child) for e in res.events] == [(0, 2)]


def test_step_limit():
    res = run("func main(){ while (true) { } }", [], "", RunConfig(step_budget=1000))
    assert res.verdict == "FAIL" and res.failure_kind == STEP_LIMIT


@pytest.mark.parametrize("src, args", [
    ("func main(a:int){ print(10 / a); }", [0]),
    ("func main(a:int){ print(10 % a); }", [0]),
    ("func main(a:int){ var x:int[3]; x[a] = 1; }", [3]),
    ("func main(a:int){ print(a * a); }", [9223372036854775807]),
    ("func main(a:int){ print(a - 1); }", [-9223372036854775808]),
    ("func f(a:int):int { return f(a); } func main(){ print(f(1)); }", []),
])
def test_runtime_errors_fail_without_raising(src, args):
    res = run(src, args)
    assert res.verdict == "FAIL" and res.failure_kind == RUNTIME_ERROR
    assert res.message


def test_division_truncates_toward_zero():
    res = run("func main(a:int, b:int){ print(a / b); print(a % b); }", [-7, 2], "-3\n-1\n")
    assert res.passed


def test_wrong_output_kind():
    res = run("func main(){ print(1); }", [], "2\n")
    assert res.failure_kind == WRONG_OUTPUT and res.output == "1\n"


def test_occurrence_counts():
    p = parse(LOOP)
    occ = count_occurrences(p, TestCase((3,), ""))
    # guard: 3 true + 1 false; inner if once per iteration
    assert occ.counts == {0: 4, 1: 3}
    assert occ.complete
    straight = count_occurrences(parse("func main(){ print(1); }"), TestCase((), ""))
    assert straight.counts == {}


def test_counts_up_to_failure_are_flagged():
    p = parse("func main(n:int){ var i:int = 3; while (i >= n) { print(10 / i); i = i - 1; } }")
    occ = count_occurrences(p, TestCase((-5,), ""))
    assert not occ.complete and occ.failure_kind == RUNTIME_ERROR
    assert occ.counts == {0: 4}


def test_loop_self_edge_events():
    p = parse(LOOP)
    res = execute(p, TestCase((2,), "1\n"), EV)
    edges = [(e.parent, e.child) for e in res.events]
    assert edges.count((1, 1)) == 2
    # sids: 0 var, 1 while, 2 if, 3 print, 4 assign
    assert {(1, 2), (1, 4), (2, 3)} <= set(edges)
    ts = [e.timestamp for e in res.events]
    assert ts == sorted(ts) and len(set(ts)) == len(ts)
    cdg = analyze(p).cdg
    assert all(e in cdg for e in edges)


def test_empty_plan_is_identity():
    p = parse(LOOP)
    t = TestCase((4,), "1\n")
    assert execute_with_negation(p, t, NegationPlan({}), EV) == execute(p, t, EV)


def test_negating_buggy_max_repairs_it():
    p = parse(MAX_BUGGY)
    t = TestCase((1, 2), "2\n")
    assert not execute(p, t).passed
    assert execute_with_negation(p, t, NegationPlan({0: ALL})).passed
    # p runs once, so asking for its second occurrence changes nothing
    res = execute_with_negation(p, t, NegationPlan({0: {2}}))
    assert not res.passed and res.output == "1\n"


def test_plan_validation():
    with pytest.raises(ValueError):
        NegationPlan({0: {0}})
    with pytest.raises(ChainpatchError):
        execute_with_negation(parse(MAX_BUGGY), TestCase((1, 2), ""), NegationPlan({5: ALL}))


def test_negation_induced_divergence_is_step_limit():
    # skipping the exit at i == n leaves i != n true forever
    p = parse("func main(n:int){ var i:int = 0; while (i != n) { i = i + 1; } print(i); }")
    res = execute_with_negation(p, TestCase((3,), "3\n"), NegationPlan({0: {4}}),
                                RunConfig(step_budget=5000))
    assert res.failure_kind == STEP_LIMIT


def test_double_negation_restores_output():
    p = parse(LOOP)
    t = TestCase((4,), "1\n")
    once = NegationPlan({1: {2}})
    changed = execute_with_negation(p, t, once)
    assert changed.output != execute(p, t).output

    class Twice:
        program_digest = p.source_digest
        predicates = (1,)

        def decide(self, snap):
            return once.selects(snap.predicate, snap.occurrence) != once.selects(
                snap.predicate, snap.occurrence)

    assert execute_with_oracle(p, t, Twice()).output == execute(p, t).output


class Memorizer:
    """Lookup-table oracle; deliberately not marked stateless."""

    def __init__(self, program, plan):
        self.program_digest = program.source_digest
        self.plan = plan
        self.predicates = tuple(sorted(plan.selections))

    def decide(self, snap):
        return self.plan.selects(snap.predicate, snap.occurrence)


@pytest.mark.parametrize("sel", [ALL, {1}, {2, 3}, {5}])
def test_memorizing_oracle_matches_plan(sel):
    p = parse(LOOP)
    t = TestCase((3,), "1\n")
    plan = NegationPlan({1: sel})
    a = execute_with_oracle(p, t, Memorizer(p, plan))
    b = execute_with_negation(p, t, plan)
    assert (a.output, a.verdict, a.steps) == (b.output, b.verdict, b.steps)
    assert [s.negated for s in a.snapshots] == [plan.selects(1, s.occurrence) for s in a.snapshots]


def _constant_patch(program, pids, negate):
    entries = tuple(PatchEntry(p, "all", ClassifierModel.constant_model(
        negate, len(program.predicate_table) and 1)) for p in pids)
    return TrainedPatch(program.source_digest, entries)


def test_constant_patches():
    p = parse(MAX_BUGGY)
    t = TestCase((1, 2), "2\n")
    never = execute_with_oracle(p, t, _constant_patch(p, [0], False))
    assert never.output == execute(p, t).output
    always = execute_with_oracle(p, t, _constant_patch(p, [0], True))
    assert always.output == execute_with_negation(p, t, NegationPlan({0: ALL})).output == "2\n"


def test_digest_mismatch_refuses():
    p = parse(MAX_BUGGY)
    src = p.source
    flipped = parse(src.replace("print(b)", "print(a)"))
    with pytest.raises(DigestMismatchError):
        execute_with_oracle(flipped, TestCase((1, 2), ""), _constant_patch(p, [0], False))


def test_cycle_detection_agrees_with_full_budget():
    src = "func main(n:int){ var i:int = 0; var j:int = 0; while (i < n) { j = (j + 1) % 5; } }"
    p = parse(src)
    t = TestCase((1,), "")
    cfg = RunConfig(step_budget=20_000)
    patch = _constant_patch(p, [0], False)
    fast = execute_with_oracle(p, t, patch, cfg)

    class Slow:
        program_digest = patch.program_digest
        predicates = patch.predicates
        decide = patch.decide

    slow = execute_with_oracle(p, t, Slow(), cfg)
    assert fast.failure_kind == slow.failure_kind == STEP_LIMIT
    assert fast.verdict == slow.verdict and fast.output == slow.output
    assert fast.steps < slow.steps


def test_cycle_detection_lets_terminating_loops_finish():
    p = parse("func main(n:int){ var i:int = 0; while (i < n) { i = i + 1; } print(i); }")
    res = execute_with_oracle(p, TestCase((50,), "50\n"), _constant_patch(p, [0], False))
    assert res.passed


def test_determinism_and_trace_dump():
    p = parse(LOOP)
    t = TestCase((3,), "1\n")
    cfg = RunConfig(record_events=True)
    a = execute(p, t, cfg, capture=(1,))
    b = execute(p, t, cfg, capture=(1,))
    assert a == b
    buf = io.StringIO()
    dump_trace(a, 0, buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert sum(1 for x in lines if x["type"] == "cd-event") == len(a.events)
    assert sum(1 for x in lines if x["type"] == "snapshot") == 3
