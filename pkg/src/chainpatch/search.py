"""Predicate search: which predicates to negate, and at which occurrences.

Single-predicate search tries every (predicate, pattern) pair on every failing
test; multiple-predicate search greedily combines (predicate, pattern) columns
when no single pair repairs every failing test.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from chainpatch.runtime import NegationPlan, RunConfig, count_occurrences, execute_with_negation

PATTERNS = (
    "all", "first", "last", "all-first", "all-last", "all-(first+last)",
    "first+1", "last-1", "first+last", "odd", "even",
)
RANK = {p: i for i, p in enumerate(PATTERNS)}

FULL = "FULL"
PARTIAL = "PARTIAL"

SCENARIOS = (1, 2, 3, 4, 5)


def occurrences_for_pattern(pattern: str, n: int) -> frozenset:
    """1-based occurrence indices a pattern selects in a run with ``n`` evaluations."""
    if n <= 0:
        return frozenset()
    everything = range(1, n + 1)
    if pattern == "all":
        sel = everything
    elif pattern == "first":
        sel = {1}
    elif pattern == "last":
        sel = {n}
    elif pattern == "all-first":
        sel = range(2, n + 1)
    elif pattern == "all-last":
        sel = range(1, n)
    elif pattern == "all-(first+last)":
        sel = range(2, n)
    elif pattern == "first+1":
        sel = {2}
    elif pattern == "last-1":
        sel = {n - 1}
    elif pattern == "first+last":
        sel = {1, n}
    elif pattern == "odd":
        sel = range(1, n + 1, 2)
    elif pattern == "even":
        sel = range(2, n + 1, 2)
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return frozenset(i for i in sel if 1 <= i <= n)


@dataclass
class RepairRecord:
    predicate: int
    repairs: dict = field(default_factory=dict)  # pattern -> frozenset of failing test indices

    def add(self, pattern: str, test: int) -> None:
        self.repairs[pattern] = self.repairs.get(pattern, frozenset()) | {test}

    def to_json(self) -> dict:
        return {"predicate": self.predicate,
                "repairs": {p: sorted(self.repairs[p]) for p in PATTERNS if p in self.repairs}}


@dataclass(frozen=True)
class Solution:
    pairs: tuple  # ((PredicateId, pattern), ...)
    fixed: frozenset
    completeness: str
    pair_fixed: tuple = ()  # failing tests each pair repairs on its own, parallel to pairs

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("a solution needs at least one (predicate, pattern) pair")
        preds = [p for p, _ in self.pairs]
        if len(set(preds)) != len(preds):
            raise ValueError("each predicate may appear at most once in a solution")
        if not self.pair_fixed:
            object.__setattr__(self, "pair_fixed", (self.fixed,) * len(self.pairs))

    @classmethod
    def make(cls, pairs, fixed, t_fail, pair_fixed=()) -> "Solution":
        fixed = frozenset(fixed)
        return cls(tuple((int(p), pat) for p, pat in pairs), fixed,
                   FULL if fixed == frozenset(t_fail) else PARTIAL,
                   tuple(frozenset(f) for f in pair_fixed))

    def responsible_pair(self, test: int):
        """First pair (in selection order) that repairs ``test`` on its own, or None."""
        for pair, fixed in zip(self.pairs, self.pair_fixed):
            if test in fixed:
                return pair
        return None

    @property
    def predicates(self) -> list:
        return [p for p, _ in self.pairs]

    @property
    def is_full(self) -> bool:
        return self.completeness == FULL

    def to_json(self) -> dict:
        return {"pairs": [[p, pat] for p, pat in self.pairs], "fixed": sorted(self.fixed),
                "completeness": self.completeness}


def _tau(taus, p) -> float:
    return (taus or {}).get(p, 0.0)


def failing_counts(program, suite, t_fail, config: Optional[RunConfig] = None) -> dict:
    """Per failing test, occurrence counts from an unmodified pre-run."""
    return {t: count_occurrences(program, suite.cases[t], config).counts for t in t_fail}


def single_predicate_search(program, pred_list, suite, t_fail, config: Optional[RunConfig] = None,
                            counts: Optional[dict] = None, taus: Optional[dict] = None) -> tuple:
    """All FULL and PARTIAL single-pair solutions plus the raw repair records.

    Runs whose pattern selects no occurrence are skipped: they cannot change behavior.
    """
    t_fail = list(t_fail)
    if counts is None:
        counts = failing_counts(program, suite, t_fail, config)
    records = []
    for p in pred_list:
        rec = RepairRecord(p)
        for t in t_fail:
            n = counts[t].get(p, 0)
            tried = {}
            for pattern in PATTERNS:
                sel = occurrences_for_pattern(pattern, n)
                if not sel:
                    continue
                if sel not in tried:
                    res = execute_with_negation(program, suite.cases[t], NegationPlan({p: sel}), config)
                    tried[sel] = res.passed
                if tried[sel]:
                    rec.add(pattern, t)
        records.append(rec)

    solutions = []
    for rec in records:
        for pattern, fixed in rec.repairs.items():
            solutions.append(Solution.make([(rec.predicate, pattern)], fixed, t_fail))
    solutions.sort(key=lambda s: (-len(s.fixed), RANK[s.pairs[0][1]],
                                  -_tau(taus, s.pairs[0][0]), s.pairs[0][0]))
    return solutions, records


def multiple_predicate_search(records, t_fail, taus: Optional[dict] = None) -> Solution:
    """Greedy cover of the failing tests by (predicate, pattern) columns.

    Returns None when no column repairs anything.
    """
    columns = [(rec.predicate, pattern, fixed)
               for rec in records for pattern, fixed in rec.repairs.items() if fixed]
    remaining = set(t_fail)
    chosen, chosen_fixed, used, fixed_all = [], [], set(), set()
    while remaining:
        best, best_key = None, None
        for p, pattern, fixed in columns:
            if p in used:
                continue
            gain = len(fixed & remaining)
            key = (gain, -RANK[pattern], _tau(taus, p), -p)
            if gain > 0 and (best_key is None or key > best_key):
                best, best_key = (p, pattern, fixed), key
        if best is None:
            break
        p, pattern, fixed = best
        chosen.append((p, pattern))
        chosen_fixed.append(fixed)
        used.add(p)
        remaining -= fixed
        fixed_all |= fixed
    if not chosen:
        return None
    return Solution.make(chosen, fixed_all, t_fail, chosen_fixed)


def classify_scenario(solution: Solution, counts: dict, passing_exercised) -> int:
    """Scenario 1-5 of a solution.

    ``counts`` maps failing test -> {PredicateId: occurrences}; ``passing_exercised``
    is the set of predicates evaluated by at least one passing test.
    """
    if len(solution.pairs) > 1:
        return 5
    p, pattern = solution.pairs[0]
    if p not in passing_exercised:
        return 1
    if pattern == "all":
        return 2
    whole = partial = 0
    for t in sorted(solution.fixed):
        n = counts[t].get(p, 0)
        if occurrences_for_pattern(pattern, n) == frozenset(range(1, n + 1)):
            whole += 1
        else:
            partial += 1
    if partial == 0:
        return 2
    if whole == 0:
        return 3
    return 4


@dataclass
class SearchResult:
    solutions: list  # FULL first, then PARTIAL; each with its scenario
    scenarios: list
    records: list
    greedy: Optional[Solution]
    t_fail: list

    @property
    def full(self) -> list:
        return [s for s in self.solutions if s.is_full]

    @property
    def partial(self) -> list:
        return [s for s in self.solutions if not s.is_full]

    @property
    def best(self) -> Optional[Solution]:
        return self.solutions[0] if self.solutions else None

    def pattern_histogram(self, completeness: str = FULL) -> dict:
        c = Counter(s.pairs[0][1] for s in self.solutions
                    if len(s.pairs) == 1 and s.completeness == completeness)
        return {p: c.get(p, 0) for p in PATTERNS}

    def scenario_distribution(self, completeness: str = FULL) -> dict:
        c = Counter(sc for s, sc in zip(self.solutions, self.scenarios)
                    if s.completeness == completeness)
        return {str(k): c.get(k, 0) for k in SCENARIOS}

    def to_json(self) -> dict:
        return {
            "t_fail": self.t_fail,
            "solutions": [dict(s.to_json(), scenario=sc)
                          for s, sc in zip(self.solutions, self.scenarios)],
            "full_count": len(self.full),
            "partial_count": len(self.partial),
            "greedy": self.greedy.to_json() if self.greedy else None,
            "records": [r.to_json() for r in self.records],
            "pattern_histogram": self.pattern_histogram(FULL),
            "pattern_histogram_partial": self.pattern_histogram(PARTIAL),
            "scenario_distribution": self.scenario_distribution(FULL),
        }


def passing_predicates(program, profiles) -> set:
    """Predicates evaluated by at least one passing test, from recorded coverage."""
    out = set()
    for prof in profiles:
        if not prof.failed:
            out |= {program.pid_of_sid(s) for s in prof.coverage if program.is_predicate_sid(s)}
    return out


def search(program, suite, pred_list, config: Optional[RunConfig] = None,
           taus: Optional[dict] = None, profiles=None) -> SearchResult:
    """Run both search algorithms and classify every solution found."""
    t_fail = suite.failing
    counts = failing_counts(program, suite, t_fail, config)
    singles, records = single_predicate_search(program, pred_list, suite, t_fail, config,
                                               counts, taus)
    greedy = None
    if not any(s.is_full for s in singles):
        greedy = multiple_predicate_search(records, t_fail, taus)
    solutions = list(singles)
    if greedy is not None and len(greedy.pairs) > 1:
        solutions.append(greedy)
    solutions.sort(key=lambda s: (not s.is_full, -len(s.fixed)))  # stable within ties

    if profiles is None:
        from chainpatch.localizer.coverage import collect_profiles
        profiles = collect_profiles(program, suite, config)
    exercised = passing_predicates(program, profiles)
    scenarios = [classify_scenario(s, counts, exercised) for s in solutions]
    return SearchResult(solutions, scenarios, records, greedy, list(t_fail))
