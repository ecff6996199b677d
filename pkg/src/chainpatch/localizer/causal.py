"""Causal-effect suspiciousness: per-statement least-squares fit of

    failure = alpha + tau * covered(s) + beta * covered(control predecessor of s)

solved through the normal equations. ``tau`` is the suspiciousness of ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class CausalModelFit:
    statement: int
    alpha: float
    tau: float
    beta: Optional[float]  # None when there is no (usable) control predecessor
    degenerate: bool = False
    dropped: tuple = ()  # regressors removed before solving

    def to_json(self) -> dict:
        return {"statement": self.statement, "alpha": self.alpha, "tau": self.tau,
                "beta": self.beta, "degenerate": self.degenerate, "dropped": list(self.dropped)}


def normal_equations(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.solve(X.T @ X, X.T @ y)


def causal_effect(statement: int, covered, outcome, predecessor=None) -> CausalModelFit:
    """Fit the adjusted model for one statement.

    ``covered``, ``outcome`` and ``predecessor`` are per-test 0/1 vectors
    (outcome 1 = failing test). ``predecessor`` is None when the statement has
    no control predecessor. Constant regressors are dropped; a predecessor
    collinear with coverage is dropped; constant coverage gives tau = 0.
    """
    T = np.asarray(covered, dtype=float)
    Y = np.asarray(outcome, dtype=float)
    if T.size == 0 or np.all(T == T[0]):
        return CausalModelFit(statement, float(Y.mean()) if Y.size else 0.0, 0.0, None,
                              degenerate=True, dropped=("coverage",))
    cols = [np.ones_like(T), T]
    dropped = []
    beta_used = False
    if predecessor is not None:
        C = np.asarray(predecessor, dtype=float)
        if np.all(C == C[0]):
            dropped.append("predecessor:constant")
        elif np.linalg.matrix_rank(np.column_stack(cols + [C])) < 3:
            dropped.append("predecessor:collinear")
        else:
            cols.append(C)
            beta_used = True
    X = np.column_stack(cols)
    coef = normal_equations(X, Y)
    return CausalModelFit(statement, float(coef[0]), float(coef[1]),
                          float(coef[2]) if beta_used else None, False, tuple(dropped))


def fit_statements(statements, profiles, cdg) -> dict:
    """Causal fits for each statement from per-test statement coverage.

    The control predecessor indicator is 1 when any static Cdg parent of the
    statement other than itself was executed by the test.
    """
    Y = [1 if p.failed else 0 for p in profiles]
    fits = {}
    for s in statements:
        T = [1 if s in p.coverage else 0 for p in profiles]
        parents = [a for a, _ in cdg.parents.get(s, ()) if a != s]
        C = None
        if parents:
            C = [1 if any(a in p.coverage for a in parents) else 0 for p in profiles]
        fits[s] = causal_effect(s, T, Y, C)
    return fits


def chain_predicates(chain, program) -> list:
    """Predicate statements of a chain: all non-tail nodes, plus the tail if it branches."""
    sids = list(chain.nodes[:-1])
    if program.is_predicate_sid(chain.tail):
        sids.append(chain.tail)
    seen = []
    for s in sids:
        if s not in seen:
            seen.append(s)
    return seen


def refine(scores, fits: dict, program, top: int = 3) -> tuple:
    """Keep the ``top`` chains by maximum tau; derive the suspicious predicate list.

    Returns (top chain scores, PredicateIds ordered by their own tau descending).
    """
    def max_tau(sc):
        return max(fits[s].tau for s in sc.chain.nodes)

    ranked = sorted(scores, key=lambda sc: (-max_tau(sc), -sc.M, sc.chain.nodes))
    chosen = ranked[:top]
    sids = []
    for sc in chosen:
        for s in chain_predicates(sc.chain, program):
            if s not in sids:
                sids.append(s)
    sids.sort(key=lambda s: (-fits[s].tau, program.pid_of_sid(s)))
    return chosen, [program.pid_of_sid(s) for s in sids]
