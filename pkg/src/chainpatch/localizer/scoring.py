from __future__ import annotations

import math
from dataclasses import dataclass

from chainpatch.errors import LocalizationError
from chainpatch.graphs import Chain


@dataclass(frozen=True)
class ChainScore:
    chain: Chain
    M: float
    a_ef: int
    a_ep: int

    def to_json(self) -> dict:
        return {"chain": list(self.chain.nodes), "length": self.chain.length,
                "M": self.M, "a_ef": self.a_ef, "a_ep": self.a_ep}


def ochiai_score(a_ef: int, a_ep: int, total_failed: int) -> float:
    if a_ef == 0:
        return 0.0
    return a_ef / math.sqrt(total_failed * (a_ef + a_ep))


def ochiai(matrix) -> list:
    """Ochiai scores for every chain of the matrix, best first (ties by node sequence)."""
    F = int(matrix.failed.sum())
    if F == 0:
        raise LocalizationError("no failing tests: localization is meaningless")
    a_ef = (matrix.covered & matrix.failed).sum(axis=1)
    a_ep = (matrix.covered & ~matrix.failed).sum(axis=1)
    scores = [ChainScore(c, ochiai_score(int(ef), int(ep), F), int(ef), int(ep))
              for c, ef, ep in zip(matrix.chains, a_ef, a_ep)]
    return sorted(scores, key=lambda s: (-s.M, s.chain.nodes))
