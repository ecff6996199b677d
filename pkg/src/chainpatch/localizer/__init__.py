"""Coverage-based fault localization over control dependence chains."""

from chainpatch.localizer.causal import CausalModelFit, causal_effect, fit_statements, refine
from chainpatch.localizer.core import LocalizationResult, LocalizerConfig, localize
from chainpatch.localizer.coverage import (
    ChainCoverageMatrix,
    TestProfile,
    chain_covered,
    collect_profiles,
    profile_suite,
)
from chainpatch.localizer.scoring import ChainScore, ochiai, ochiai_score

__all__ = [
    "CausalModelFit", "ChainCoverageMatrix", "ChainScore", "LocalizationResult",
    "LocalizerConfig", "TestProfile", "causal_effect", "chain_covered",
    "collect_profiles", "fit_statements", "localize", "ochiai", "ochiai_score",
    "profile_suite", "refine",
]
