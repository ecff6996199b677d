from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from chainpatch.errors import FeasibilityError, LocalizationError
from chainpatch.graphs import MAX_STATIC_CHAINS, enumerate_chains
from chainpatch.localizer.causal import fit_statements, refine
from chainpatch.localizer.coverage import collect_profiles, profile_suite
from chainpatch.localizer.scoring import ochiai
from chainpatch.runtime import RunConfig, analysis_of

SHARING_RULE = ("a chain is discarded when none of its statements is executed by any "
                "passing test (applied only when the suite has passing tests)")
SCOPE_NOTE = "control dependence chains are intraprocedural"


@dataclass(frozen=True)
class LocalizerConfig:
    max_chain_length: int = 4
    profile_budget_secs: float = 60.0
    top_k: int = 10
    score_tolerance: float = 1e-12
    max_static_chains: int = MAX_STATIC_CHAINS
    top_chains: int = 3
    run: RunConfig = field(default_factory=RunConfig)


@dataclass
class LengthSummary:
    length: int
    static_chains: int
    scored_chains: int
    best_M: float
    seconds: float
    outcome: str  # "score-1.0", "deepen", "exhausted" or "infeasible"


@dataclass
class LocalizationResult:
    chains: list  # ChainScore, the suspicious chains returned by deepening
    exit_reason: str  # "score-1.0", "max-length", "exhausted" or "infeasible"
    length: int  # chain length of the returned chains
    fits: dict  # StatementId -> CausalModelFit
    top_chains: list  # ChainScore after causal refinement (at most 3)
    pred_list: list  # PredList_susp, PredicateIds
    lengths: list = field(default_factory=list)
    profiles: list = field(default_factory=list, repr=False)

    def to_json(self, program) -> dict:
        return {
            "exit_reason": self.exit_reason,
            "chain_length": self.length,
            # wall-clock seconds are left out so reports stay reproducible
            "lengths_explored": [{k: v for k, v in vars(s).items() if k != "seconds"}
                                 for s in self.lengths],
            "suspicious_chains": [c.to_json() for c in self.chains],
            "causal_effects": [self.fits[s].to_json() for s in sorted(self.fits)],
            "top_chains": [c.to_json() for c in self.top_chains],
            "pred_list_susp": self.pred_list,
            "pred_list_susp_lines": [program.predicate_table[p].line for p in self.pred_list],
            "notes": {"sharing_rule": SHARING_RULE, "scope": SCOPE_NOTE},
        }


def shares_with_passing(chain, passing_coverage: set) -> bool:
    return any(s in passing_coverage for s in chain.nodes)


def localize(program, suite, config: Optional[LocalizerConfig] = None,
             profiles=None, trace_sink=None) -> LocalizationResult:
    """Iterative-deepening chain profiling with Ochiai scoring and causal refinement.

    ``suite`` must carry baseline verdicts. ``profiles`` may be passed in to
    reuse already recorded traces.
    """
    cfg = config or LocalizerConfig()
    if suite.verdicts is None or not suite.failing:
        raise LocalizationError("nothing to localize: the suite has no failing tests")
    cdg = analysis_of(program).cdg
    if len(cdg) == 0:
        raise LocalizationError("nothing to localize: the program has no control dependences")

    started = time.monotonic()
    if profiles is None:
        profiles = collect_profiles(program, suite, cfg.run, trace_sink)
    passing_cov = set()
    for p in profiles:
        if not p.failed:
            passing_cov |= p.coverage
    any_passing = any(not p.failed for p in profiles)

    lengths, last = [], None
    exit_reason, exit_length, chosen = "max-length", 0, []
    for L in range(1, cfg.max_chain_length + 1):
        t0 = started if L == 1 else time.monotonic()
        try:
            chains = enumerate_chains(cdg, L, cfg.max_static_chains)
            if not chains:
                # the Cdg has no longer paths; deepening cannot find anything new
                exit_reason = "exhausted"
                break
            matrix = profile_suite(chains, profiles, cfg.profile_budget_secs, t0)
        except FeasibilityError:
            lengths.append(LengthSummary(L, 0, 0, 0.0, time.monotonic() - t0, "infeasible"))
            exit_reason = "infeasible"
            break
        scores = [s for s in ochiai(matrix)
                  if s.a_ef + s.a_ep > 0
                  and (not any_passing or shares_with_passing(s.chain, passing_cov))]
        best = scores[0].M if scores else 0.0
        perfect = [s for s in scores if s.M >= 1.0 - cfg.score_tolerance]
        outcome = "score-1.0" if perfect else "deepen"
        if not scores:
            # nothing at this length executes (or survives the sharing rule), and
            # longer chains only extend these; keep the previous length's ranking
            lengths.append(LengthSummary(L, len(chains), 0, 0.0, time.monotonic() - t0,
                                         "exhausted"))
            exit_reason = "exhausted"
            break
        lengths.append(LengthSummary(L, len(chains), len(scores), best,
                                     time.monotonic() - t0, outcome))
        last = (L, scores)
        if perfect:
            exit_reason, exit_length, chosen = "score-1.0", L, perfect
            break
    else:
        exit_reason = "max-length"

    if exit_reason != "score-1.0":
        if last is None:
            raise LocalizationError("no control dependence chain is executed by the suite"
                                    if exit_reason == "exhausted" else
                                    "profiling was infeasible even for chains of length 1")
        exit_length, chosen = last[0], last[1][:cfg.top_k]

    statements = sorted({s for sc in chosen for s in sc.chain.nodes})
    fits = fit_statements(statements, profiles, cdg)
    top, pred_list = refine(chosen, fits, program, cfg.top_chains) if chosen else ([], [])
    return LocalizationResult(chosen, exit_reason, exit_length, fits, top, pred_list,
                              lengths, profiles)
