import math

import numpy as np
import pytest

from chainpatch.errors import LocalizationError
from chainpatch.graphs import Chain, enumerate_chains
from chainpatch.localizer import (
    LocalizerConfig,
    causal_effect,
    chain_covered,
    collect_profiles,
    localize,
    ochiai,
    ochiai_score,
    profile_suite,
    refine,
)
from chainpatch.localizer.causal import CausalModelFit
from chainpatch.localizer.scoring import ChainScore
from chainpatch.minilang import TestCase, TestSuite, load_suite, parse, parse_file
from chainpatch.pipeline import BUNDLED_CORPUS
from chainpatch.runtime import analysis_of, baseline

EXTRAS = BUNDLED_CORPUS.parent / "extras"
# max with the wrong variable in the then-arm: only a < b runs fail
MAX_BUGGY = "func main(a:int, b:int){ if (a < b) { print(a); } else { print(a); } }"


def suite_of(program, rows):
    cases = TestSuite(tuple(TestCase(tuple(a), out) for a, out in rows))
    return baseline(program, cases)


def test_chain_covered_examples():
    assert chain_covered(Chain((0, 1)), [(1, 0, 1)]) == (True, 1)
    p, q, a = 0, 1, 2
    assert chain_covered(Chain((p, q, a)), [(1, q, a), (2, p, q)]) == (False, 0)
    assert chain_covered(Chain((p, q, a)), [(1, p, q), (2, q, a), (3, p, q), (4, q, a)]) == (True, 2)


def test_ochiai_hand_values():
    assert ochiai_score(3, 1, 3) == pytest.approx(3 / math.sqrt(12), abs=1e-12)
    assert ochiai_score(3, 0, 3) == 1.0
    assert ochiai_score(0, 4, 3) == 0.0


def test_max_matrix_splits_branches():
    p = parse(MAX_BUGGY)
    suite = suite_of(p, [((1, 2), "2\n"), ((2, 1), "2\n"), ((0, 0), "0\n")])
    assert list(suite.verdicts) == ["FAIL", "PASS", "PASS"]
    profiles = collect_profiles(p, suite)
    chains = enumerate_chains(analysis_of(p).cdg, 1)
    m = profile_suite(chains, profiles)
    assert [c.nodes for c in m.chains] == [(0, 1), (0, 2)]
    assert m.covered.tolist() == [[True, False, False], [False, True, True]]
    scores = ochiai(m)
    assert scores[0].chain.nodes == (0, 1) and scores[0].M == 1.0
    assert scores[1].M == 0.0


def test_ochiai_needs_a_failure():
    p = parse(MAX_BUGGY)
    suite = suite_of(p, [((2, 1), "2\n")])
    m = profile_suite(enumerate_chains(analysis_of(p).cdg, 1), collect_profiles(p, suite))
    with pytest.raises(LocalizationError):
        ochiai(m)


def test_lone_if_exits_at_length_one():
    p = parse(MAX_BUGGY)
    suite = suite_of(p, [((1, 2), "2\n"), ((2, 1), "2\n"), ((0, 0), "0\n")])
    res = localize(p, suite)
    assert res.exit_reason == "score-1.0" and res.length == 1
    assert [c.chain.nodes for c in res.chains] == [(0, 1)]
    assert res.pred_list == [0]


def test_length_two_needed_for_loop_defect():
    p = parse_file(EXTRAS / "squares_v1" / "program.acdc")
    suite = baseline(p, load_suite(EXTRAS / "squares_v1" / "suite.json"))
    res = localize(p, suite)
    assert res.lengths[0].outcome == "deepen" and res.lengths[0].best_M < 1.0
    assert res.exit_reason == "score-1.0" and res.length == 2
    # failing runs are exactly the ones that iterate twice: while -> while -> body
    assert all(c.chain.nodes[:2] == (2, 2) for c in res.chains)


def test_straight_line_has_nothing_to_localize():
    p = parse("func main(a:int){ print(a + 1); }")
    suite = suite_of(p, [((1,), "3\n")])
    with pytest.raises(LocalizationError, match="nothing to localize"):
        localize(p, suite)


def test_no_failing_tests_is_an_error():
    p = parse(MAX_BUGGY)
    with pytest.raises(LocalizationError):
        localize(p, suite_of(p, [((2, 1), "2\n")]))


def test_median_matrix_dimensions():
    bench = BUNDLED_CORPUS / "median_v1"
    p = parse_file(bench / "program.acdc")
    suite = baseline(p, load_suite(bench / "suite.json"))
    chains = enumerate_chains(analysis_of(p).cdg, 2)
    m = profile_suite(chains, collect_profiles(p, suite))
    assert m.shape == (len(chains), len(suite))
    assert (m.covered == (m.counts >= 1)).all()


def test_causal_perfect_fit_drops_constant_predecessor():
    f = causal_effect(0, [1, 0, 1, 0], [1, 0, 1, 0], [1, 1, 1, 1])
    assert f.tau == pytest.approx(1.0) and f.alpha == pytest.approx(0.0, abs=1e-12)
    assert f.beta is None and "predecessor:constant" in f.dropped


def test_causal_constant_coverage_is_degenerate():
    f = causal_effect(0, [1, 1, 1], [1, 0, 1])
    assert f.degenerate and f.tau == 0.0


def test_causal_collinear_predecessor_dropped():
    f = causal_effect(0, [1, 0, 1, 0], [1, 0, 0, 0], [1, 0, 1, 0])
    assert f.beta is None and "predecessor:collinear" in f.dropped


# e2 -> e_bug -> e3 -> e4 nested coverage; depth d covers the first d statements
DEPTHS = (0, 0, 1, 2, 2, 3, 3, 4)
FAILS = (0, 0, 0, 0, 1, 1, 1, 0)


def coincidental_matrix():
    D = np.array(DEPTHS)
    cov = {k: (D >= k).astype(int).tolist() for k in range(1, 5)}
    return cov, list(FAILS)


def test_causal_ordering_on_coincidental_correctness():
    cov, Y = coincidental_matrix()
    taus = [causal_effect(s, cov[s], Y, cov[s - 1]).tau for s in (2, 3, 4)]
    # frozen from an independent lstsq solve
    assert taus == pytest.approx([0.6, 1 / 6, -1.0], abs=1e-9)
    assert taus[0] > taus[1] > taus[2]


def test_ols_residual_orthogonal():
    cov, Y = coincidental_matrix()
    f = causal_effect(3, cov[3], Y, cov[2])
    X = np.column_stack([np.ones(8), cov[3], cov[2]])
    r = np.array(Y) - X @ np.array([f.alpha, f.tau, f.beta])
    assert np.abs(X.T @ r).max() < 1e-9


class FakeProgram:
    """Every statement below 10 is a predicate whose pid equals its sid."""

    def is_predicate_sid(self, s):
        return s < 10

    def pid_of_sid(self, s):
        return s


def fit(s, tau):
    return CausalModelFit(s, 0.0, tau, None)


def test_refine_single_chain():
    sc = ChainScore(Chain((1, 11)), 1.0, 1, 0)
    top, preds = refine([sc], {1: fit(1, 0.2), 11: fit(11, 0.9)}, FakeProgram())
    assert top == [sc] and preds == [1]


def test_refine_keeps_three_largest():
    scores = [ChainScore(Chain((i, 20 + i)), 0.5, 1, 1) for i in range(5)]
    fits = {}
    for i in range(5):
        fits[i] = fit(i, 0.1 * i)
        fits[20 + i] = fit(20 + i, 0.0)
    top, preds = refine(scores, fits, FakeProgram())
    assert [c.chain.head for c in top] == [4, 3, 2]
    assert preds == [4, 3, 2]


def test_refine_ties_broken_by_M():
    lo = ChainScore(Chain((1, 2)), 0.5, 1, 1)
    hi = ChainScore(Chain((3, 4)), 0.9, 1, 0)
    fits = {1: fit(1, 0.7), 2: fit(2, 0.7), 3: fit(3, 0.7), 4: fit(4, 0.1)}
    top, preds = refine([lo, hi], fits, FakeProgram(), top=1)
    assert top == [hi]
    assert preds == [3, 4]


def test_report_json_is_stable():
    p = parse(MAX_BUGGY)
    suite = suite_of(p, [((1, 2), "2\n"), ((2, 1), "2\n"), ((0, 0), "0\n")])
    a = localize(p, suite, LocalizerConfig()).to_json(p)
    b = localize(p, suite, LocalizerConfig()).to_json(p)
    assert a == b
    assert "seconds" not in a["lengths_explored"][0]
