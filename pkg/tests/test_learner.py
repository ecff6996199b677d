import json

import numpy as np
import pytest

from chainpatch.errors import SuiteSplitError
from chainpatch.learner.features import (
    CATEGORIES,
    UNINITIALIZED,
    array_fold,
    build_schema,
    featurize,
    string_digest,
)
from chainpatch.learner.svm import ClassifierModel, SvmConfig, fit_svm, kernel_matrix, standardize
from chainpatch.learner.training import (
    TrainingSet,
    collect_training_data,
    evaluate,
    split_suite,
    train,
)
from chainpatch.minilang import TestCase, TestSuite, load_suite, parse, parse_file
from chainpatch.pipeline import BUNDLED_CORPUS
from chainpatch.runtime import baseline, execute
from chainpatch.search import Solution


def names_and_cats(schema):
    return [(d.name, CATEGORIES.index(d.category)) for d in schema.descriptors]


def test_schema_of_plain_comparison():
    p = parse("func f(a:int, b:int):int { if (a < b) { return a; } return b; } "
              "func main(){ print(f(1, 2)); }")
    assert names_and_cats(build_schema(p, 0)) == [("a", 0), ("b", 0)]


def test_schema_categories_and_order():
    src = """
    var g: int = 3;
    var tag: string = "x";
    func main(x: int, z: int) {
      var y: int = x + g;
      var arr: int[2];
      if (y > 0) { arr[0] = y; }
      print(tag);
    }
    """
    p = parse(src)
    s = build_schema(p, 0)
    assert names_and_cats(s) == [("y", 0), ("x", 1), ("z", 1), ("g", 2), ("arr", 3), ("tag", 3)]
    assert [d.scope for d in s.descriptors if d.name in ("g", "tag")] == ["global", "global"]


def test_schema_includes_call_result():
    p = parse("func h(x:int):int { return x - 1; } "
              "func main(x:int){ if (h(x) > 0) { print(1); } }")
    s = build_schema(p, 0)
    assert s.descriptors[0].kind == "call" and s.descriptors[0].name == "h(x)"
    snap = execute(p, TestCase((5,), "1\n"), capture=(0,)).snapshots[0]
    assert snap.values == (4, 5)


def test_featurize_scalars_and_strings():
    assert featurize([3, -1]) == (3, -1)
    assert featurize([True, False]) == (1, 0)
    assert featurize(["abc"]) == featurize(["abc"])
    assert featurize([None]) == (UNINITIALIZED,)
    # FNV-1a-64 of the empty string is the offset basis
    assert string_digest("") == 0xCBF29CE484222325 - (1 << 64)


def test_array_fold_collisions_are_rare():
    rng = np.random.default_rng(0)
    collisions = 0
    for _ in range(1000):
        a = [int(v) for v in rng.integers(-1000, 1000, size=int(rng.integers(1, 8)))]
        b = list(a)
        k = int(rng.integers(len(b)))
        b[k] += int(rng.integers(1, 50))
        collisions += array_fold(a) == array_fold(b)
    assert collisions / 1000 < 0.001
    assert array_fold([1, 2]) != array_fold([2, 1])


def test_uninitialized_local_reads_sentinel():
    p = parse("func main(a:int){ if (a > 0) { print(1); } var late:int = 2; print(late); }")
    snap = execute(p, TestCase((1,), ""), capture=(0,)).snapshots[0]
    schema = build_schema(p, 0)
    assert snap.values[schema.names.index("late")] == UNINITIALIZED


LOOPY = "func main(n:int){ var i:int = 0; while (i < n) { i = i + 1; } print(i); }"


def test_label_bookkeeping():
    p = parse(LOOPY)
    # the failing test wants the loop skipped entirely
    suite = baseline(p, TestSuite((TestCase((2,), "0\n"), TestCase((4,), "4\n"), TestCase((0,), "0\n"))))
    assert list(suite.verdicts) == ["FAIL", "PASS", "PASS"]
    sol = Solution.make([(0, "first")], {0}, [0])
    sets = collect_training_data(p, suite, [0, 1, 2], sol)
    ts = sets[0]
    # failing run: first guard negated, loop skipped -> 1 evaluation, NEGATE
    assert len(ts.ns) == 1
    # passing runs: 5 + 1 guard evaluations
    assert len(ts.dns) == 6
    total = sum(len(execute(p, suite.cases[t], capture=(0,)).snapshots) for t in (1, 2)) + 1
    assert ts.size == total


def test_first_pattern_splits_failing_run():
    # negating the second occurrence leaves the loop after one iteration
    p = parse(LOOPY)
    suite = baseline(p, TestSuite((TestCase((3,), "1\n"),)))
    sol = Solution.make([(0, "first+1")], {0}, [0])
    ts = collect_training_data(p, suite, [0], sol)[0]
    assert (len(ts.ns), len(ts.dns)) == (1, 1)


def test_unfixed_failing_tests_are_skipped():
    p = parse(LOOPY)
    suite = baseline(p, TestSuite((TestCase((3,), "1\n"), TestCase((3,), "9\n"))))
    sol = Solution.make([(0, "first+1")], {0}, [0, 1])
    ts = collect_training_data(p, suite, [0, 1], sol)[0]
    assert ts.skipped_failing == [1]


def test_standardization():
    X = np.array([[1.0, 5.0, 2.0], [3.0, 5.0, -4.0], [8.0, 5.0, 0.5]])
    mean, scale = standardize(X)
    Z = (X - mean) / scale
    assert np.abs(Z.mean(axis=0)).max() < 1e-9
    assert np.allclose(Z.std(axis=0)[[0, 2]], 1.0, atol=1e-9)
    assert scale[1] == 1.0


def test_smo_kkt_and_monotone_objective():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, 1.0, -1.0)
    model, res = fit_svm(X, y, SvmConfig(), record=True)
    assert res.converged and res.gap < 1e-3
    obj = np.array(res.objective)
    assert (np.diff(obj) >= -1e-12).all()


def xor():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    return X, y


def test_xor_matches_reference_solver():
    from sklearn.svm import SVC

    X, y = xor()
    model, _ = fit_svm(X, y, SvmConfig())
    assert (model.predict_many(X) == (y > 0)).all()
    mean, scale = standardize(X)
    Z = (X - mean) / scale
    ref = SVC(kernel="rbf", C=1.0, gamma=model.gamma, tol=1e-6).fit(Z, y)
    assert (ref.predict(Z) == y).all()
    assert np.allclose(model.decision_function(X), ref.decision_function(Z), atol=1e-2)


def test_separable_set_is_learned_exactly():
    rng = np.random.default_rng(11)
    X = rng.uniform(-5, 5, size=(400, 2))
    margin = X[:, 0] + X[:, 1]
    X = X[np.abs(margin) > 1.0][:100]
    y = np.where(X[:, 0] + X[:, 1] > 0, 1.0, -1.0)
    model, _ = fit_svm(X, y, SvmConfig())
    assert (model.predict_many(X) == (y > 0)).all()


def test_one_class_gives_constant_model():
    p = parse(LOOPY)
    from chainpatch.runtime import schema_of

    ts = TrainingSet(0, schema_of(p, 0), ns=[], dns=[(1, 2), (3, 4)])
    m = train(ts)
    assert m.constant is False and not m.predict((9, 9))
    ts2 = TrainingSet(0, schema_of(p, 0), ns=[(1, 2)], dns=[])
    assert train(ts2).constant is True


def test_training_is_deterministic_and_round_trips():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = np.where(X[:, 0] > 0.3, 1.0, -1.0)
    a, _ = fit_svm(X, y, SvmConfig(seed=7))
    b, _ = fit_svm(X, y, SvmConfig(seed=7))
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    back = ClassifierModel.from_json(json.loads(json.dumps(a.to_json())))
    assert back == a
    assert (back.decision_function(X) == a.decision_function(X)).all()


def test_kernel_matrix_linear_and_rbf():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert kernel_matrix("linear", 0.0, A, A).tolist() == [[0.0, 0.0], [0.0, 1.0]]
    assert kernel_matrix("rbf", 0.5, A, A)[0, 1] == pytest.approx(np.exp(-0.5))
    with pytest.raises(ValueError):
        SvmConfig(kernel="poly")


def test_split_is_stratified():
    suite = TestSuite(tuple(TestCase((i,), "") for i in range(20))).with_verdicts(
        ["FAIL"] * 5 + ["PASS"] * 15)
    tr, te = split_suite(suite, 0.2, 42)
    assert any(t < 5 for t in tr) and any(t >= 5 for t in tr)
    assert sorted(tr + te) == list(range(20)) and not set(tr) & set(te)
    assert split_suite(suite, 0.2, 42) == (tr, te)
    assert split_suite(suite, 1.0, 42) == (list(range(20)), list(range(20)))


def test_split_too_small():
    suite = TestSuite((TestCase((1,), ""), TestCase((2,), ""))).with_verdicts(["FAIL", "PASS"])
    with pytest.raises(SuiteSplitError, match="at least 3"):
        split_suite(suite, 0.5, 1)


def test_scenario1_full_training_is_perfect():
    d = BUNDLED_CORPUS / "grade_v2"
    p = parse_file(d / "program.acdc")
    suite = baseline(p, load_suite(d / "suite.json"))
    from chainpatch.localizer import localize
    from chainpatch.search import search

    loc = localize(p, suite)
    res = search(p, suite, loc.pred_list, profiles=loc.profiles)
    assert res.scenarios[0] == 1
    rep = evaluate(p, suite, res.best, 1.0)
    assert rep.accuracy == 1.0 and rep.test == list(range(len(suite)))
