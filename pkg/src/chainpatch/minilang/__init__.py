"""Frontend for the bundled imperative language (``.acdc`` sources)."""

from chainpatch.minilang.program import (
    INT_MAX,
    INT_MIN,
    PredicateInfo,
    Program,
    StatementInfo,
    parse,
    parse_file,
    predicate_sites,
)
from chainpatch.minilang.suite import TestCase, TestSuite, load_suite, save_suite

__all__ = [
    "INT_MAX", "INT_MIN", "PredicateInfo", "Program", "StatementInfo",
    "TestCase", "TestSuite", "load_suite", "save_suite",
    "parse", "parse_file", "predicate_sites",
]
