"""Deterministic instrumented interpreter.

Every run counts predicate evaluations per PredicateId (occurrences are 1-based
and global to the run, across call frames). A run may additionally

* record dynamic control-dependence events: when statement ``s`` starts, its
  dynamic parent is the static Cdg parent (in the same frame) whose most recent
  outcome selects ``s``; ties go to the most recently evaluated parent;
* negate predicate outcomes, either from a fixed :class:`NegationPlan` or from a
  decider consulted at each evaluation (the trained-patch oracle);
* capture :class:`StateSnapshot` vectors at chosen predicates.

Snapshots are taken after the condition is evaluated (so values returned by
calls inside the condition are available) and before the branch is taken.
"""

from __future__ import annotations

import sys
import weakref
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from chainpatch.errors import ChainpatchError, DigestMismatchError
from chainpatch.graphs import StaticAnalysis, analyze
from chainpatch.minilang import INT_MAX, INT_MIN, Program, TestCase
from chainpatch.minilang import nodes as ast
from chainpatch.minilang.suite import FAIL, PASS

DEFAULT_STEP_BUDGET = 1_000_000
MAX_CALL_DEPTH = 200

NONE = "none"
WRONG_OUTPUT = "wrong-output"
RUNTIME_ERROR = "runtime-error"
STEP_LIMIT = "step-limit"

ALL = "ALL"

if sys.getrecursionlimit() < 10_000:
    sys.setrecursionlimit(10_000)


class CdEvent(NamedTuple):
    timestamp: int
    parent: int
    child: int


class StateSnapshot(NamedTuple):
    predicate: int
    occurrence: int
    values: tuple
    negated: bool


@dataclass(frozen=True)
class RunConfig:
    step_budget: int = DEFAULT_STEP_BUDGET
    record_events: bool = False
    record_coverage: bool = False
    max_call_depth: int = MAX_CALL_DEPTH


@dataclass(frozen=True)
class NegationPlan:
    """PredicateId -> frozenset of 1-based occurrence indices, or ALL."""

    selections: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for pid, sel in self.selections.items():
            if sel == ALL:
                clean[int(pid)] = ALL
                continue
            sel = frozenset(int(i) for i in sel)
            if any(i < 1 for i in sel):
                raise ValueError(f"occurrence indices are 1-based, got {sorted(sel)}")
            clean[int(pid)] = sel
        object.__setattr__(self, "selections", clean)

    def selects(self, pid: int, occurrence: int) -> bool:
        sel = self.selections.get(pid)
        if sel is None:
            return False
        return sel == ALL or occurrence in sel

    def validate(self, program: Program) -> None:
        n = len(program.predicate_table)
        bad = [p for p in self.selections if not 0 <= p < n]
        if bad:
            raise ChainpatchError(f"plan references unknown predicates {bad}")

    def __bool__(self):
        return any(sel == ALL or sel for sel in self.selections.values())


@dataclass
class ExecutionResult:
    verdict: str
    output: str
    steps: int
    failure_kind: str
    message: str = ""
    occurrences: dict = field(default_factory=dict)  # PredicateId -> evaluation count
    events: Optional[list] = None
    coverage: Optional[frozenset] = None  # executed StatementIds
    snapshots: Optional[list] = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS


@dataclass(frozen=True)
class OccurrenceCounts:
    counts: dict
    complete: bool  # False when the run stopped early (runtime error / step limit)
    failure_kind: str = NONE


# -- static data cached per program --------------------------------------------

_CACHE: "weakref.WeakKeyDictionary[Program, dict]" = weakref.WeakKeyDictionary()


def static_info(program: Program) -> dict:
    info = _CACHE.get(program)
    if info is None:
        an = analyze(program)
        pred_calls = {}
        for pinfo in program.predicate_table:
            stmt = program.statements[pinfo.sid]
            pred_calls[pinfo.pid] = tuple(e.uid for e in ast.walk_expr(stmt.cond)
                                          if isinstance(e, ast.Call))
        info = {
            "analysis": an,
            "parents": an.cdg.parents,
            "pred_calls": pred_calls,
            "call_uids": frozenset(u for us in pred_calls.values() for u in us),
            "schemas": {},
        }
        _CACHE[program] = info
    return info


def analysis_of(program: Program) -> StaticAnalysis:
    return static_info(program)["analysis"]


def schema_of(program: Program, pid: int):
    from chainpatch.learner.features import build_schema

    schemas = static_info(program)["schemas"]
    if pid not in schemas:
        schemas[pid] = build_schema(program, pid)
    return schemas[pid]


# -- interpreter ---------------------------------------------------------------

class _Fault(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind
        self.message = message


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Frame:
    __slots__ = ("vars", "last", "callvals")

    def __init__(self, variables):
        self.vars = variables
        self.last = {}  # predicate sid -> (outcome, timestamp)
        self.callvals = {}


def render_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _check(v):
    if v < INT_MIN or v > INT_MAX:
        raise _Fault(RUNTIME_ERROR, "integer overflow")
    return v


def _div(a, b):
    if b == 0:
        raise _Fault(RUNTIME_ERROR, "division by zero")
    q = abs(a) // abs(b)
    return _check(q if (a < 0) == (b < 0) else -q)


def _mod(a, b):
    if b == 0:
        raise _Fault(RUNTIME_ERROR, "division by zero")
    return a - b * _div(a, b)


_ARITH = {
    "+": lambda a, b: _check(a + b),
    "-": lambda a, b: _check(a - b),
    "*": lambda a, b: _check(a * b),
    "/": _div,
    "%": _mod,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


class Interpreter:
    def __init__(self, program: Program, config: RunConfig,
                 decider: Optional[Callable] = None, decider_pids=frozenset(),
                 capture_pids=frozenset()):
        self.program = program
        self.config = config
        self.budget = config.step_budget
        info = static_info(program)
        self.parents = info["parents"] if config.record_events else None
        self.pred_calls = info["pred_calls"]
        self.call_uids = info["call_uids"]
        self.decider = decider
        self.decider_pids = frozenset(decider_pids)
        self.capture_pids = frozenset(capture_pids)
        self.schemas = {pid: schema_of(program, pid)
                        for pid in self.decider_pids | self.capture_pids}
        self.steps = 0
        self.depth = 0
        self.output = []
        self.occ = {}
        self.events = [] if config.record_events else None
        self.coverage = set() if config.record_coverage else None
        self.snapshots = [] if self.capture_pids else None
        self.globals = {}
        for g in program.globals:
            self.globals[g.name] = _initial(g.decl_type, g.init)
        self._stmt = {
            ast.VarDecl: self._decl, ast.Assign: self._assign,
            ast.IndexAssign: self._index_assign, ast.If: self._if,
            ast.While: self._while, ast.Return: self._return,
            ast.Print: self._print, ast.ExprStmt: self._expr_stmt,
        }
        self._expr = {
            ast.IntLit: lambda e, f: e.value, ast.BoolLit: lambda e, f: e.value,
            ast.StrLit: lambda e, f: e.value, ast.Var: self._var,
            ast.Index: self._index, ast.Call: self._call,
            ast.Unary: self._unary, ast.Binary: self._binary,
        }

    # -- driver --------------------------------------------------------------

    def run(self, args) -> tuple:
        main = self.program.main
        try:
            if len(args) != len(main.params):
                raise _Fault(RUNTIME_ERROR,
                             f"main expects {len(main.params)} arguments, got {len(args)}")
            for a in args:
                _check(a)
            self._invoke(main, list(args))
            kind, msg = NONE, ""
        except _Fault as fault:
            kind, msg = fault.kind, fault.message
        except RecursionError:
            kind, msg = RUNTIME_ERROR, "interpreter recursion limit"
        return kind, msg

    def _invoke(self, fn, args):
        self.depth += 1
        if self.depth > self.config.max_call_depth:
            raise _Fault(RUNTIME_ERROR, "call depth exceeded")
        frame = _Frame({p.name: a for p, a in zip(fn.params, args)})
        try:
            self._block(fn.body, frame)
        except _Return as r:
            self.depth -= 1
            return r.value
        self.depth -= 1
        if fn.return_type != ast.VOID:
            raise _Fault(RUNTIME_ERROR, f"function '{fn.name}' ended without returning a value")
        return None

    # -- statements ----------------------------------------------------------

    def _enter(self, stmt, frame):
        self.steps += 1
        if self.steps > self.budget:
            raise _Fault(STEP_LIMIT, f"step budget of {self.budget} exhausted")
        if self.coverage is not None:
            self.coverage.add(stmt.sid)
        if self.parents is not None:
            cands = self.parents.get(stmt.sid)
            if cands:
                best, best_ts = None, -1
                last = frame.last
                for parent, labels in cands:
                    rec = last.get(parent)
                    if rec is not None and rec[0] in labels and rec[1] > best_ts:
                        best, best_ts = parent, rec[1]
                if best is not None:
                    self.events.append(CdEvent(self.steps, best, stmt.sid))

    def _block(self, block, frame):
        table = self._stmt
        for stmt in block:
            self._enter(stmt, frame)
            table[type(stmt)](stmt, frame)

    def _decl(self, stmt, frame):
        if isinstance(stmt.init, ast.Expr):
            frame.vars[stmt.name] = self._eval(stmt.init, frame)
        else:
            frame.vars[stmt.name] = _initial(stmt.decl_type, stmt.init)

    def _assign(self, stmt, frame):
        value = self._eval(stmt.value, frame)
        if stmt.scope == "global":
            self.globals[stmt.name] = value
        else:
            frame.vars[stmt.name] = value

    def _index_assign(self, stmt, frame):
        arr = self.globals[stmt.name] if stmt.scope == "global" else frame.vars[stmt.name]
        i = self._eval(stmt.index, frame)
        value = self._eval(stmt.value, frame)
        if not 0 <= i < len(arr):
            raise _Fault(RUNTIME_ERROR, f"array index {i} out of bounds for '{stmt.name}'")
        arr[i] = value

    def _branch(self, stmt, frame) -> bool:
        pid = stmt.pid
        watched = pid in self.decider_pids or pid in self.capture_pids
        if watched:
            for uid in self.pred_calls[pid]:
                frame.callvals.pop(uid, None)
        value = self._eval(stmt.cond, frame)
        occ = self.occ.get(pid, 0) + 1
        self.occ[pid] = occ
        if watched:
            values = self.schemas[pid].read(frame, self.globals)
            negate = False
            if pid in self.decider_pids:
                negate = bool(self.decider(StateSnapshot(pid, occ, values, False)))
            if self.snapshots is not None and pid in self.capture_pids:
                self.snapshots.append(StateSnapshot(pid, occ, values, negate))
            if negate:
                value = not value
        frame.last[stmt.sid] = (value, self.steps)
        return value

    def _if(self, stmt, frame):
        if self._branch(stmt, frame):
            self._block(stmt.then, frame)
        else:
            self._block(stmt.orelse, frame)

    def _while(self, stmt, frame):
        while self._branch(stmt, frame):
            self._block(stmt.body, frame)
            # each re-evaluation of the guard is a statement execution of its own
            self._enter(stmt, frame)

    def _return(self, stmt, frame):
        raise _Return(None if stmt.value is None else self._eval(stmt.value, frame))

    def _print(self, stmt, frame):
        self.output.append(render_value(self._eval(stmt.value, frame)))

    def _expr_stmt(self, stmt, frame):
        self._eval(stmt.value, frame)

    # -- expressions ---------------------------------------------------------

    def _eval(self, e, frame):
        return self._expr[type(e)](e, frame)

    def _var(self, e, frame):
        if e.scope == "global":
            return self.globals[e.name]
        return frame.vars[e.name]

    def _index(self, e, frame):
        arr = self.globals[e.name] if e.scope == "global" else frame.vars[e.name]
        i = self._eval(e.index, frame)
        if not 0 <= i < len(arr):
            raise _Fault(RUNTIME_ERROR, f"array index {i} out of bounds for '{e.name}'")
        return arr[i]

    def _call(self, e, frame):
        fn = self.program.function_map[e.name]
        args = [self._eval(a, frame) for a in e.args]
        value = self._invoke(fn, args)
        if e.uid in self.call_uids:
            frame.callvals[e.uid] = value
        return value

    def _unary(self, e, frame):
        v = self._eval(e.operand, frame)
        return _check(-v) if e.op == "-" else not v

    def _binary(self, e, frame):
        op = e.op
        if op == "&&":
            return self._eval(e.left, frame) and self._eval(e.right, frame)
        if op == "||":
            return self._eval(e.left, frame) or self._eval(e.right, frame)
        return _ARITH[op](self._eval(e.left, frame), self._eval(e.right, frame))


def _initial(t: ast.Type, init):
    if t.is_array:
        return list(init) if init is not None else [0] * t.length
    if init is not None:
        return init
    return {"int": 0, "bool": False, "string": ""}[t.name]


# -- public entry points -------------------------------------------------------

def _finish(interp: Interpreter, test: TestCase, kind: str, msg: str) -> ExecutionResult:
    output = "".join(line + "\n" for line in interp.output)
    if kind == NONE and output != test.expected_output:
        kind = WRONG_OUTPUT
    return ExecutionResult(
        verdict=PASS if kind == NONE else FAIL,
        output=output,
        steps=interp.steps,
        failure_kind=kind,
        message=msg,
        occurrences=dict(sorted(interp.occ.items())),
        events=interp.events,
        coverage=frozenset(interp.coverage) if interp.coverage is not None else None,
        snapshots=interp.snapshots,
    )


def _run(program, test, config, decider=None, decider_pids=(), capture_pids=()):
    interp = Interpreter(program, config or RunConfig(), decider, decider_pids, capture_pids)
    kind, msg = interp.run(test.args)
    return _finish(interp, test, kind, msg)


def execute(program: Program, test: TestCase, config: Optional[RunConfig] = None,
            capture=()) -> ExecutionResult:
    """Run ``test`` unmodified; ``capture`` lists predicates to snapshot."""
    return _run(program, test, config, capture_pids=capture)


def count_occurrences(program: Program, test: TestCase,
                      config: Optional[RunConfig] = None) -> OccurrenceCounts:
    res = _run(program, test, config)
    complete = res.failure_kind in (NONE, WRONG_OUTPUT)
    return OccurrenceCounts(res.occurrences, complete, res.failure_kind)


def execute_with_negation(program: Program, test: TestCase, plan: NegationPlan,
                          config: Optional[RunConfig] = None, capture=()) -> ExecutionResult:
    plan.validate(program)
    pids = [p for p, sel in plan.selections.items() if sel == ALL or sel]
    if not pids:
        return _run(program, test, config, capture_pids=capture)

    def decide(snap):
        return plan.selects(snap.predicate, snap.occurrence)

    # plan decisions need no state; schemas are still read when capturing
    interp = _PlanInterpreter(program, config or RunConfig(), decide, pids, capture)
    kind, msg = interp.run(test.args)
    return _finish(interp, test, kind, msg)


class _PlanInterpreter(Interpreter):
    """Plan enforcement without reading state at predicates that are not captured."""

    def _branch(self, stmt, frame) -> bool:
        pid = stmt.pid
        if pid in self.capture_pids:
            return Interpreter._branch(self, stmt, frame)
        value = self._eval(stmt.cond, frame)
        occ = self.occ.get(pid, 0) + 1
        self.occ[pid] = occ
        if pid in self.decider_pids and self.decider(StateSnapshot(pid, occ, (), False)):
            value = not value
        frame.last[stmt.sid] = (value, self.steps)
        return value


class _CycleCheckingInterpreter(Interpreter):
    """Stops loops that provably never end.

    Valid only when every decision is a pure function of program state. While
    one loop runs, the suspended outer frames cannot change, so if the current
    frame's variables and the globals repeat at the guard, the run repeats
    forever. Repeats are found with Brent's method in constant memory.
    """

    def _state(self, frame):
        def freeze(d):
            return tuple((k, tuple(v) if isinstance(v, list) else v) for k, v in d.items())
        return freeze(frame.vars), freeze(self.globals)

    def _while(self, stmt, frame):
        saved, power, lam = None, 1, 0
        while self._branch(stmt, frame):
            self._block(stmt.body, frame)
            self._enter(stmt, frame)
            state = self._state(frame)
            if state == saved:
                raise _Fault(STEP_LIMIT, "loop revisits an earlier state and cannot terminate")
            lam += 1
            if lam == power:
                saved, power, lam = state, power * 2, 0


def execute_with_oracle(program: Program, test: TestCase, patch,
                        config: Optional[RunConfig] = None, capture=()) -> ExecutionResult:
    """Run ``test`` consulting ``patch``'s classifier before each patched predicate.

    ``patch`` needs ``program_digest``, ``predicates`` and ``decide(snapshot)``.
    Every patched predicate's snapshots are recorded in the result. A patch
    whose ``stateless`` attribute is true promises that ``decide`` looks only
    at snapshot values; such runs stop a non-terminating loop as soon as it
    repeats a state, with the same step-limit verdict a full run would reach.
    """
    if patch.program_digest != program.source_digest:
        raise DigestMismatchError(
            f"patch was trained on program {patch.program_digest:016x}, "
            f"refusing to run it on {program.source_digest:016x}")
    pids = tuple(patch.predicates)
    cls = _CycleCheckingInterpreter if getattr(patch, "stateless", False) else Interpreter
    interp = cls(program, config or RunConfig(), patch.decide, pids, tuple(pids) + tuple(capture))
    kind, msg = interp.run(test.args)
    return _finish(interp, test, kind, msg)


def baseline(program: Program, suite, config: Optional[RunConfig] = None):
    """Run every case unmodified and return the suite with verdicts attached."""
    verdicts = [execute(program, case, config).verdict for case in suite.cases]
    return suite.with_verdicts(verdicts)


def dump_trace(result: ExecutionResult, test_index: int, fh) -> None:
    """Append the result's events and snapshots to ``fh`` as newline-delimited JSON."""
    import json

    for ev in result.events or ():
        fh.write(json.dumps({"test": test_index, "type": "cd-event", "timestamp": ev.timestamp,
                             "parent": ev.parent, "child": ev.child}) + "\n")
    for snap in result.snapshots or ():
        fh.write(json.dumps({"test": test_index, "type": "snapshot", "predicate": snap.predicate,
                             "occurrence": snap.occurrence, "values": list(snap.values),
                             "negated": snap.negated}) + "\n")
