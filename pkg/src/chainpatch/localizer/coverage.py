"""Dynamic chain coverage over recorded control-dependence event streams."""

from __future__ import annotations

import time
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from chainpatch.errors import FeasibilityError
from chainpatch.graphs import Chain
from chainpatch.minilang.suite import FAIL
from chainpatch.runtime import RunConfig, execute


def chain_covered(chain: Chain, events) -> tuple:
    """Greedy earliest-match scan: (covered, number of disjoint matches).

    The chain is executed iff its edges occur as a subsequence of the
    timestamp-ordered event stream; matching each edge at its earliest
    possible position never rules out a later completion.
    """
    edges = chain.edges
    k = len(edges)
    j = count = 0
    for ev in events:
        if (ev[1], ev[2]) == edges[j]:
            j += 1
            if j == k:
                count += 1
                j = 0
    return count > 0, count


@dataclass
class TestProfile:
    verdict: str
    coverage: frozenset  # executed StatementIds
    edge_times: dict  # (parent, child) -> sorted timestamps
    n_events: int

    __test__ = False

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL

    def match(self, chain: Chain) -> int:
        """Same result as chain_covered's count, using per-edge timestamp indexes."""
        times = self.edge_times
        lists = []
        for e in chain.edges:
            ts = times.get(e)
            if not ts:
                return 0
            lists.append(ts)
        count, pos = 0, 0
        while True:
            for ts in lists:
                i = bisect_right(ts, pos)
                if i == len(ts):
                    return count
                pos = ts[i]
            count += 1


def collect_profiles(program, suite, config: Optional[RunConfig] = None, trace_sink=None) -> list:
    cfg = config or RunConfig()
    cfg = RunConfig(cfg.step_budget, True, True, cfg.max_call_depth)
    profiles = []
    for i, case in enumerate(suite.cases):
        res = execute(program, case, cfg)
        if trace_sink is not None:
            trace_sink(i, res)
        times = defaultdict(list)
        for ev in res.events:
            times[(ev.parent, ev.child)].append(ev.timestamp)
        profiles.append(TestProfile(res.verdict, res.coverage, dict(times), len(res.events)))
    return profiles


@dataclass
class ChainCoverageMatrix:
    chains: list
    covered: np.ndarray  # bool, chains x tests
    counts: np.ndarray  # int, chains x tests
    failed: np.ndarray  # bool per test

    @property
    def shape(self) -> tuple:
        return self.covered.shape


def profile_suite(chains, profiles, budget_secs: Optional[float] = None,
                  started: Optional[float] = None) -> ChainCoverageMatrix:
    """Coverage of every chain by every profiled test.

    Raises FeasibilityError once wall-clock time since ``started`` exceeds ``budget_secs``.
    """
    started = time.monotonic() if started is None else started
    n, m = len(chains), len(profiles)
    counts = np.zeros((n, m), dtype=np.int64)
    for ci, chain in enumerate(chains):
        for ti, prof in enumerate(profiles):
            counts[ci, ti] = prof.match(chain)
        if budget_secs is not None and time.monotonic() - started > budget_secs:
            raise FeasibilityError(
                f"profiling chains of length {chains[0].length} exceeded {budget_secs:g} s")
    failed = np.array([p.failed for p in profiles], dtype=bool)
    return ChainCoverageMatrix(list(chains), counts > 0, counts, failed)
