"""Deployable patches: per-predicate classifiers bound to one exact program text.

A patch file is one JSON document::

    {
      "format_version": 1,
      "tool": "chainpatch",
      "tool_version": "0.1.0",
      "program_digest": "<16 hex digits of the program's content digest>",
      "entries": [
        {"predicate": 3, "pattern": "first", "features": [...], "model": {...}}
      ],
      "provenance": {"pairs": [[3, "first"]], "scenario": 3, "fraction": 1.0, "seed": 42}
    }

Model floats are stored as ``repr`` strings so loading gives back the exact
same bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from chainpatch import __version__
from chainpatch.errors import PatchError
from chainpatch.learner.svm import ClassifierModel
from chainpatch.minilang.printer import render
from chainpatch.runtime import schema_of

PATCH_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PatchEntry:
    predicate: int
    pattern: str
    model: ClassifierModel


@dataclass(frozen=True)
class TrainedPatch:
    program_digest: int
    entries: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise PatchError("a patch needs at least one entry")
        preds = [e.predicate for e in self.entries]
        if len(set(preds)) != len(preds):
            raise PatchError(f"patch entries must name distinct predicates, got {preds}")
        object.__setattr__(self, "_models", {e.predicate: e.model for e in self.entries})

    # decisions depend on snapshot values only, never on occurrence counts
    stateless = True

    @property
    def predicates(self) -> list:
        return [e.predicate for e in self.entries]

    @property
    def pairs(self) -> tuple:
        return tuple((e.predicate, e.pattern) for e in self.entries)

    def model(self, pid: int) -> ClassifierModel:
        return self._models[pid]

    def decide(self, snapshot) -> bool:
        """True when the classifier says to negate this evaluation."""
        return self._models[snapshot.predicate].predict(snapshot.values)

    def to_json(self, program=None) -> dict:
        entries = []
        for e in self.entries:
            doc = {"predicate": e.predicate, "pattern": e.pattern}
            if program is not None:
                doc["features"] = schema_of(program, e.predicate).to_json()
            doc["model"] = e.model.to_json()
            entries.append(doc)
        return {
            "format_version": PATCH_FORMAT_VERSION,
            "tool": "chainpatch",
            "tool_version": __version__,
            "program_digest": f"{self.program_digest:016x}",
            "entries": entries,
            "provenance": self.provenance,
        }


def build_patch(program, solution, models, provenance=None) -> TrainedPatch:
    """Pair each (predicate, pattern) of ``solution`` with its model, in order."""
    models = list(models)
    if len(models) != len(solution.pairs):
        raise PatchError(f"solution has {len(solution.pairs)} pairs but {len(models)} "
                         f"models were given")
    entries = tuple(PatchEntry(p, pattern, m) for (p, pattern), m in zip(solution.pairs, models))
    prov = {"pairs": [[p, pat] for p, pat in solution.pairs],
            "completeness": solution.completeness,
            "tool_version": __version__}
    prov.update(provenance or {})
    return TrainedPatch(program.source_digest, entries, prov)


def save_patch(patch: TrainedPatch, path, program=None) -> None:
    Path(path).write_text(json.dumps(patch.to_json(program), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def patch_from_json(doc) -> TrainedPatch:
    if not isinstance(doc, dict):
        raise PatchError("malformed patch file: top level must be an object")
    version = doc.get("format_version")
    if version != PATCH_FORMAT_VERSION:
        raise PatchError(f"unsupported patch format version {version!r} "
                         f"(this build reads version {PATCH_FORMAT_VERSION})")
    digest = doc.get("program_digest")
    if not digest:
        raise PatchError("malformed patch file: program_digest is missing")
    try:
        entries = tuple(PatchEntry(int(e["predicate"]), str(e["pattern"]),
                                   ClassifierModel.from_json(e["model"]))
                        for e in doc["entries"])
        return TrainedPatch(int(digest, 16), entries, dict(doc.get("provenance") or {}))
    except PatchError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PatchError(f"malformed patch file: {exc}") from exc


def load_patch(path) -> TrainedPatch:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PatchError(f"malformed patch file {path}: {exc}") from exc
    return patch_from_json(doc)


def emit_patched_source(program, solution) -> str:
    """The program text with every patched condition wrapped in a negation hook.

    ``solution`` is anything with ``pairs`` (a Solution or a TrainedPatch).
    Only the text between each patched predicate's parentheses changes.
    """
    src = program.source
    edits = []
    for p, pattern in solution.pairs:
        stmt = program.predicate_stmt(p)
        text = f"({render(stmt.cond)}) XOR shouldNegate({p}) /* trained on pattern {pattern} */"
        edits.append((stmt.lparen + 1, stmt.rparen, text))
    for start, end, text in sorted(edits, reverse=True):
        src = src[:start] + text + src[end:]
    return src
