"""Test cases and suites, plus the JSON suite file format.

A suite file is one JSON document::

    {"cases": [{"args": [1, 2], "expected": "2\\n"}, ...]}

``expected`` is the exact text the program must print; CRLF is normalized to LF.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from chainpatch.errors import ChainpatchError

PASS = "PASS"
FAIL = "FAIL"


@dataclass(frozen=True)
class TestCase:
    args: tuple
    expected_output: str
    name: str = ""

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))
        object.__setattr__(self, "expected_output", self.expected_output.replace("\r\n", "\n"))


@dataclass(frozen=True)
class TestSuite:
    cases: tuple
    verdicts: Optional[tuple] = field(default=None)

    __test__ = False

    def __len__(self):
        return len(self.cases)

    def with_verdicts(self, verdicts) -> "TestSuite":
        verdicts = tuple(verdicts)
        if len(verdicts) != len(self.cases):
            raise ValueError("one verdict per case required")
        return replace(self, verdicts=verdicts)

    def _need_verdicts(self):
        if self.verdicts is None:
            raise ChainpatchError("suite has no baseline verdicts; run the baseline first")

    @property
    def failing(self) -> list[int]:
        self._need_verdicts()
        return [i for i, v in enumerate(self.verdicts) if v == FAIL]

    @property
    def passing(self) -> list[int]:
        self._need_verdicts()
        return [i for i, v in enumerate(self.verdicts) if v == PASS]

    def subset(self, indices) -> "TestSuite":
        cases = tuple(self.cases[i] for i in indices)
        verdicts = None if self.verdicts is None else tuple(self.verdicts[i] for i in indices)
        return TestSuite(cases, verdicts)


def suite_from_json(doc) -> TestSuite:
    try:
        cases = doc["cases"]
        return TestSuite(tuple(
            TestCase(tuple(c["args"]), c["expected"], c.get("name", f"t{i}"))
            for i, c in enumerate(cases)))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ChainpatchError(f"malformed suite document: {exc}") from exc


def load_suite(path) -> TestSuite:
    with open(path, encoding="utf-8") as fh:
        return suite_from_json(json.load(fh))


def save_suite(suite: TestSuite, path) -> None:
    doc = {"cases": [{"name": c.name, "args": list(c.args), "expected": c.expected_output}
                     for c in suite.cases]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
