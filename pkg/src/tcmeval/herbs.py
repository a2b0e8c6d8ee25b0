"""Herb-name canonicalization and prescription overlap.

Matching treats processing variants of the same medicinal as identical and
ignores dosage entirely; equivalence beyond that is a data decision carried
by the lexicon file, not code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import EmptyLabel, EmptyName

if TYPE_CHECKING:
    from .parsing import Prescription

# Processing markers stripped ahead of lookup. A prefix is only stripped when
# the remainder resolves in the lexicon, so herbs whose names merely begin
# with one of these characters (生姜, 姜黄) are not mangled.
DEFAULT_PROCESSING_PREFIXES: tuple[str, ...] = (
    "蜜炙", "姜制", "酒制", "醋制", "盐制", "麸炒", "清炒", "蜜",
    "炙", "制", "炒", "煅", "煨", "焦", "醋", "酒", "盐", "烫", "生", "熟",
)

_WS_RE = re.compile(r"\s+")


def _fold(name: str) -> str:
    return _WS_RE.sub(" ", name.strip()).casefold()


@dataclass(frozen=True)
class Lexicon:
    """Immutable surface-form -> canonical-name map.

    Invariants enforced at load: every canonical name maps to itself, which
    makes the mapping idempotent.
    """

    canonical_of: dict[str, str] = field(default_factory=dict)
    processing_prefixes: tuple[str, ...] = DEFAULT_PROCESSING_PREFIXES

    @classmethod
    def from_pairs(
        cls,
        pairs: list[tuple[str, str]],
        processing_prefixes: tuple[str, ...] = DEFAULT_PROCESSING_PREFIXES,
    ) -> "Lexicon":
        canonical_of: dict[str, str] = {}
        for alias, canonical in pairs:
            canonical_of[_fold(alias)] = _fold(canonical)
        for canonical in list(canonical_of.values()):
            canonical_of[canonical] = canonical
        return cls(canonical_of=canonical_of, processing_prefixes=processing_prefixes)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        """Load a two-column lexicon file: ``alias<TAB>canonical``, ``#`` comments."""
        pairs: list[tuple[str, str]] = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            alias, _, canonical = line.partition("\t")
            if not canonical.strip():
                canonical = alias
            pairs.append((alias.strip(), canonical.strip()))
        return cls.from_pairs(pairs)

    @classmethod
    def empty(cls) -> "Lexicon":
        return cls()


def default_lexicon() -> Lexicon:
    """The lexicon shipped with the package."""
    path = resources.files("tcmeval").joinpath("data/default_lexicon.tsv")
    with resources.as_file(path) as p:
        return Lexicon.load(p)


def normalize_herb(raw: str, lexicon: Lexicon) -> str:
    """Map a surface herb name to its canonical form.

    Exact alias hits win; otherwise a single processing prefix is stripped if
    the remainder is known. Unknown names come back trimmed and case-folded.
    """
    key = _fold(raw)
    if not key:
        raise EmptyName("herb name is blank")
    hit = lexicon.canonical_of.get(key)
    if hit is not None:
        return hit
    for prefix in sorted(lexicon.processing_prefixes, key=len, reverse=True):
        if key.startswith(prefix) and len(key) > len(prefix):
            rest = key[len(prefix):].strip()
            hit = lexicon.canonical_of.get(rest)
            if hit is not None:
                return hit
    return key


@dataclass(frozen=True)
class MatchResult:
    """Overlap between a generated and a label prescription.

    ``rate`` is n_matched / n_label, or None when the label is empty
    (undefined).
    """

    matched: tuple[str, ...]
    n_matched: int
    n_label: int
    n_generated: int
    rate: float | None


def match_prescriptions(
    generated: "Prescription", label: "Prescription", lexicon: Lexicon
) -> MatchResult:
    """Intersect canonicalized herb-name sets; dosage differences are ignored."""
    label_names = _unique_canonical(label, lexicon)
    if not label_names:
        raise EmptyLabel("label prescription has no entries")
    generated_names = _unique_canonical(generated, lexicon)
    generated_set = set(generated_names)
    matched = tuple(name for name in label_names if name in generated_set)
    return MatchResult(
        matched=matched,
        n_matched=len(matched),
        n_label=len(label_names),
        n_generated=len(generated_names),
        rate=len(matched) / len(label_names),
    )


def _unique_canonical(prescription: "Prescription", lexicon: Lexicon) -> list[str]:
    names: list[str] = []
    seen: set[str] = set()
    for entry in prescription.entries:
        canonical = normalize_herb(entry.canonical_name, lexicon)
        if canonical not in seen:
            seen.add(canonical)
            names.append(canonical)
    return names
