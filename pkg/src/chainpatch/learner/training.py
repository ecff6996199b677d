"""Training data collection, per-predicate training and the split evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from chainpatch.errors import StaleBaselineError, SuiteSplitError
from chainpatch.learner.svm import ClassifierModel, SvmConfig, fit_svm
from chainpatch.minilang.suite import FAIL, PASS
from chainpatch.runtime import (
    NegationPlan,
    RunConfig,
    execute,
    execute_with_negation,
    execute_with_oracle,
    schema_of,
)
from chainpatch.search import occurrences_for_pattern

DEFAULT_FRACTIONS = (0.05, 0.10, 0.20, 0.40, 0.80, 1.0)


@dataclass
class TrainingSet:
    predicate: int
    schema: object
    ns: list = field(default_factory=list)  # feature tuples labeled NEGATE
    dns: list = field(default_factory=list)  # feature tuples labeled DON'T-NEGATE
    skipped_failing: list = field(default_factory=list)  # failing tests no pair repairs

    @property
    def size(self) -> int:
        return len(self.ns) + len(self.dns)

    def arrays(self) -> tuple:
        d = len(self.schema)
        X = np.array(self.ns + self.dns, dtype=float).reshape(self.size, d)
        y = np.array([1.0] * len(self.ns) + [-1.0] * len(self.dns))
        return X, y


def plan_for_test(solution, test: int, counts: dict) -> NegationPlan:
    """Negation plan that repaired ``test`` during search, from its pre-run counts."""
    pair = solution.responsible_pair(test)
    if pair is None:
        return NegationPlan({})
    p, pattern = pair
    return NegationPlan({p: occurrences_for_pattern(pattern, counts.get(p, 0))})


def collect_training_data(program, suite, train_indices, solution,
                          config: Optional[RunConfig] = None) -> dict:
    """One TrainingSet per solution predicate, built from the training tests.

    Passing tests run unmodified and contribute DON'T-NEGATE states only.
    Failing tests the solution repairs run under the repairing plan; the
    occurrences that plan negates become NEGATE states, the rest DON'T-NEGATE.
    Failing tests the solution does not repair carry no label and are skipped.
    """
    suite._need_verdicts()
    preds = tuple(solution.predicates)
    sets = {p: TrainingSet(p, schema_of(program, p)) for p in preds}
    for t in sorted(train_indices):
        case = suite.cases[t]
        expected = suite.verdicts[t]
        if expected == PASS:
            res = execute(program, case, config, capture=preds)
            if res.verdict != PASS:
                raise StaleBaselineError(
                    f"test {t} was recorded as passing but now {res.verdict.lower()}s")
        else:
            pre = execute(program, case, config)
            if pre.verdict != FAIL:
                raise StaleBaselineError(f"test {t} was recorded as failing but now passes")
            if t not in solution.fixed:
                for ts in sets.values():
                    ts.skipped_failing.append(t)
                continue
            res = execute_with_negation(program, case, plan_for_test(solution, t, pre.occurrences),
                                        config, capture=preds)
        for snap in res.snapshots:
            ts = sets[snap.predicate]
            (ts.ns if snap.negated else ts.dns).append(snap.values)
    return sets


def train(ts: TrainingSet, config: SvmConfig = SvmConfig()) -> ClassifierModel:
    if not ts.ns or not ts.dns:
        # one class only: always answer with the class we saw (DON'T-NEGATE if none)
        return ClassifierModel.constant_model(bool(ts.ns), len(ts.schema), config.seed)
    X, y = ts.arrays()
    model, _ = fit_svm(X, y, config)
    return model


def train_all(sets: dict, config: SvmConfig = SvmConfig()) -> dict:
    return {p: train(ts, config) for p, ts in sets.items()}


def split_suite(suite, fraction: float, seed: int) -> tuple:
    """Stratified random (train, test) index split.

    Training gets round(fraction * n) tests of each verdict class, at least one
    of each class the suite has, and the testing group is never empty. Fraction
    1.0 means train and test on the whole suite.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"training fraction must be in (0, 1], got {fraction}")
    failing, passing = suite.failing, suite.passing
    everything = list(range(len(suite)))
    if fraction >= 1.0:
        return everything, everything
    minimum = 2 + (1 if passing else 0)
    if not failing or len(suite) < minimum:
        raise SuiteSplitError(
            f"suite of {len(suite)} tests is too small to split: at least {minimum} tests "
            f"with at least one failing test are needed")
    rng = np.random.default_rng(seed)
    fail_perm = [failing[i] for i in rng.permutation(len(failing))]
    pass_perm = [passing[i] for i in rng.permutation(len(passing))]
    n_f = min(max(1, round(fraction * len(failing))), len(failing))
    n_p = min(max(1, round(fraction * len(passing))), len(passing)) if passing else 0
    if n_f + n_p == len(suite):
        # keep at least one test back, from the larger class
        if n_p > 1 and (n_p >= n_f or n_f == 1):
            n_p -= 1
        elif n_f > 1:
            n_f -= 1
        else:
            raise SuiteSplitError(f"suite of {len(suite)} tests is too small to split: at "
                                  f"least {minimum + 1} tests are needed")
    train_idx = sorted(fail_perm[:n_f] + pass_perm[:n_p])
    test_idx = sorted(fail_perm[n_f:] + pass_perm[n_p:])
    return train_idx, test_idx


@dataclass
class EvalReport:
    fraction: float
    seed: int
    train: list
    test: list
    handled: list  # testing-group tests handled properly
    models: dict = field(default_factory=dict, repr=False)
    training_sizes: dict = field(default_factory=dict)  # pid -> (|NS|, |DNS|)

    @property
    def accuracy(self) -> float:
        return len(self.handled) / len(self.test) if self.test else 0.0

    def to_json(self) -> dict:
        return {"fraction": self.fraction, "seed": self.seed, "accuracy": self.accuracy,
                "n_train": len(self.train), "n_test": len(self.test),
                "handled": len(self.handled),
                "training_sizes": {str(p): list(v) for p, v in sorted(self.training_sizes.items())}}


def handled_properly(result) -> bool:
    """Fixed failing tests and intact passing tests both end up passing."""
    return result.passed


def evaluate(program, suite, solution, fraction: float, seed: int = 42,
             svm_config: Optional[SvmConfig] = None, config: Optional[RunConfig] = None) -> EvalReport:
    """Train on a stratified split and measure how the patched program treats the rest."""
    from chainpatch.patcher import build_patch

    svm_config = svm_config or SvmConfig(seed=seed)
    train_idx, test_idx = split_suite(suite, fraction, seed)
    sets = collect_training_data(program, suite, train_idx, solution, config)
    models = train_all(sets, svm_config)
    patch = build_patch(program, solution, [models[p] for p in solution.predicates],
                        provenance={"fraction": fraction, "seed": seed})
    handled = []
    for t in test_idx:
        res = execute_with_oracle(program, suite.cases[t], patch, config)
        if handled_properly(res):
            handled.append(t)
    sizes = {p: (len(ts.ns), len(ts.dns)) for p, ts in sets.items()}
    return EvalReport(fraction, seed, train_idx, test_idx, handled, models, sizes)
