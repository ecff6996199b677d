"""Control-dependence-chain fault localization and predicate-switching repair."""

__version__ = "0.1.0"
