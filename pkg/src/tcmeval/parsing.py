"""Parse structured diagnostic responses into their eight template sections.

Responses follow a fixed clinical template: an optional ``<think>...</think>``
reasoning block, then an ``<output>`` body with up to eight headed sections
(etiology/pathogenesis analysis, syndrome differentiation, treatment
principle, prescription, prescription explanation, distinguished-theory
application, herb modification, medical advice). Model outputs vary in
header formatting, so header matching runs through a normalizer plus a
configurable alias table.

Parsing is total: any text yields a StructuredResponse, with unrecognized
content preserved in ``raw``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .errors import PreconditionViolation

if TYPE_CHECKING:
    from .herbs import Lexicon

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
OUTPUT_OPEN = "<output>"
OUTPUT_CLOSE = "</output>"


class SectionKind(Enum):
    ETIOLOGY_PATHOGENESIS = "etiology_pathogenesis"
    SYNDROME_DIFFERENTIATION = "syndrome_differentiation"
    TREATMENT_PRINCIPLE = "treatment_principle"
    TCM_PRESCRIPTION = "tcm_prescription"
    PRESCRIPTION_EXPLANATION = "prescription_explanation"
    DISTINGUISHED_THEORY_APPLICATION = "distinguished_theory_application"
    HERB_MODIFICATION = "herb_modification"
    MEDICAL_ADVICE = "medical_advice"


# Canonical header strings rendered in the serialized template.
CANONICAL_HEADERS: dict[SectionKind, str] = {
    SectionKind.ETIOLOGY_PATHOGENESIS: "Etiology and Pathogenesis Analysis",
    SectionKind.SYNDROME_DIFFERENTIATION: "Syndrome Differentiation",
    SectionKind.TREATMENT_PRINCIPLE: "Treatment Principle",
    SectionKind.TCM_PRESCRIPTION: "TCM Prescription",
    SectionKind.PRESCRIPTION_EXPLANATION: "Prescription Explanation",
    SectionKind.DISTINGUISHED_THEORY_APPLICATION: (
        "Application of Distinguished or Specialized Differentiation and Treatment Theory"
    ),
    SectionKind.HERB_MODIFICATION: "Modification of Herbs Based on Symptom Changes",
    SectionKind.MEDICAL_ADVICE: "Medical Advice and Precautions",
}

# The five kinds that count toward the completeness item.
SCORED_KINDS: tuple[SectionKind, ...] = (
    SectionKind.ETIOLOGY_PATHOGENESIS,
    SectionKind.SYNDROME_DIFFERENTIATION,
    SectionKind.TREATMENT_PRINCIPLE,
    SectionKind.TCM_PRESCRIPTION,
    SectionKind.DISTINGUISHED_THEORY_APPLICATION,
)

DEFAULT_ALIASES: dict[SectionKind, tuple[str, ...]] = {
    SectionKind.ETIOLOGY_PATHOGENESIS: (
        "Etiology and Pathogenesis Analysis (in TCM)",
        "Etiology and Pathogenesis Analysis in TCM",
        "Analysis of Etiology and Pathogenesis",
        "病因病机分析",
        "病因病机",
    ),
    SectionKind.SYNDROME_DIFFERENTIATION: (
        "Syndrome Diagnosis",
        "辨证",
        "辨证分析",
        "证候诊断",
    ),
    SectionKind.TREATMENT_PRINCIPLE: (
        "Treatment Principles",
        "治则治法",
        "治法",
        "治则",
    ),
    SectionKind.TCM_PRESCRIPTION: (
        "TCM Prescription Generation",
        "Prescription",
        "中医处方",
        "方药",
        "处方",
    ),
    SectionKind.PRESCRIPTION_EXPLANATION: (
        "Formula Explanation",
        "方解",
        "处方解释",
    ),
    SectionKind.DISTINGUISHED_THEORY_APPLICATION: (
        "Application of Distinguished or Specialized Differentiation and Treatment theory",
        "Distinguished Theory Application",
        "Application of Distinguished Theory",
        "名医学术思想应用",
        "学术思想应用",
    ),
    SectionKind.HERB_MODIFICATION: (
        "Herb Modification",
        "Symptom Changes and Medication Adjustments",
        "随症加减",
        "药物加减",
    ),
    SectionKind.MEDICAL_ADVICE: (
        "Medical Advice",
        "Medical Advice and Precaution",
        "医嘱",
        "医嘱与注意事项",
        "注意事项",
    ),
}

# Answers consisting solely of one of these phrases do not count as answered.
DEFAULT_DENY_PHRASES: frozenset[str] = frozenset(
    {"unknown", "无法回答", "不知道", "cannot answer"}
)

_ENUMERATION_RE = re.compile(
    r"^\s*(?:[#]+\s*)?(?:[0-9０-９]{1,3}[.．、)）:：]\s*|[（(][0-9０-９一二三四五六七八九十]{1,3}[)）]\s*|[一二三四五六七八九十]{1,3}[、.．]\s*|[-*•]\s*)"
)
_BOLD_RE = re.compile(r"^\*\*(.*)\*\*$|^__(.*)__$")


def _normalize_header(line: str) -> str:
    """Fold a candidate header line to its lookup key."""
    s = line.strip()
    m = _BOLD_RE.match(s)
    if m:
        s = (m.group(1) if m.group(1) is not None else m.group(2)).strip()
    s = _ENUMERATION_RE.sub("", s)
    s = s.rstrip(":： \t")
    s = re.sub(r"\s+", " ", s)
    return s.casefold()


@dataclass(frozen=True)
class HeaderConfig:
    """Header alias table; extra aliases extend (never replace) the defaults."""

    extra_aliases: dict[SectionKind, tuple[str, ...]] = field(default_factory=dict)

    def lookup_table(self) -> dict[str, SectionKind]:
        table: dict[str, SectionKind] = {}
        for kind in SectionKind:
            names = [CANONICAL_HEADERS[kind]]
            names.extend(DEFAULT_ALIASES.get(kind, ()))
            names.extend(self.extra_aliases.get(kind, ()))
            for name in names:
                table[_normalize_header(name)] = kind
        return table


@dataclass
class StructuredResponse:
    """A parsed diagnostic response: reasoning block, headed sections, raw text."""

    reasoning: str = ""
    sections: dict[SectionKind, str] = field(default_factory=dict)
    raw: str = ""

    def to_canonical_json(self) -> str:
        """Stable-key-order JSON document for downstream modules and golden files."""
        doc = {
            "reasoning": self.reasoning,
            "sections": {
                kind.value: self.sections[kind]
                for kind in SectionKind
                if kind in self.sections
            },
            "raw": self.raw,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2)

    @classmethod
    def from_canonical_json(cls, document: str) -> "StructuredResponse":
        doc = json.loads(document)
        sections = {SectionKind(k): v for k, v in doc.get("sections", {}).items()}
        return cls(
            reasoning=doc.get("reasoning", ""),
            sections=sections,
            raw=doc.get("raw", ""),
        )


def parse_structured_response(
    text: str, headers: HeaderConfig | None = None
) -> StructuredResponse:
    """Parse raw response text into reasoning and headed sections.

    A ``<think>`` block without its closing delimiter is treated as
    all-reasoning (truncated generation); an ``<output>`` wrapper around the
    body is unwrapped. Text with zero recognized headers yields an empty
    sections map with everything preserved in ``raw``.
    """
    raw = text
    body = text
    reasoning = ""

    open_at = body.find(THINK_OPEN)
    if open_at != -1:
        after_open = body[open_at + len(THINK_OPEN):]
        close_at = after_open.find(THINK_CLOSE)
        if close_at == -1:
            return StructuredResponse(reasoning=after_open, sections={}, raw=raw)
        reasoning = after_open[:close_at]
        body = body[:open_at] + after_open[close_at + len(THINK_CLOSE):]

    stripped = body.strip()
    if stripped.startswith(OUTPUT_OPEN):
        stripped = stripped[len(OUTPUT_OPEN):]
        if stripped.rstrip().endswith(OUTPUT_CLOSE):
            stripped = stripped.rstrip()[: -len(OUTPUT_CLOSE)]
        body = stripped

    table = (headers or HeaderConfig()).lookup_table()
    sections: dict[SectionKind, str] = {}
    current: SectionKind | None = None
    buffer: list[str] = []

    def flush() -> None:
        if current is not None and current not in sections:
            sections[current] = "\n".join(buffer).strip("\n")

    for line in body.split("\n"):
        kind = table.get(_normalize_header(line)) if line.strip() else None
        if kind is not None:
            flush()
            current = kind
            buffer = []
        elif current is not None:
            buffer.append(line)
    flush()

    return StructuredResponse(reasoning=reasoning, sections=sections, raw=raw)


def render_structured_response(resp: StructuredResponse) -> str:
    """Serialize back to the canonical template text.

    Round trip: ``parse(render(parse(x)))`` equals ``parse(render(x))`` —
    parsing the canonical serialization is idempotent.
    """
    parts: list[str] = []
    if resp.reasoning:
        parts.append(f"{THINK_OPEN}{resp.reasoning}{THINK_CLOSE}")
    lines: list[str] = [OUTPUT_OPEN]
    for kind in SectionKind:
        if kind in resp.sections:
            lines.append(CANONICAL_HEADERS[kind])
            lines.append(resp.sections[kind])
            lines.append("")
    lines.append(OUTPUT_CLOSE)
    parts.append("\n".join(lines))
    return "\n".join(parts)


def _is_invalid_answer(text: str, deny_phrases: frozenset[str]) -> bool:
    folded = text.strip().strip("。．.!！??，,").strip().casefold()
    return folded in deny_phrases


def count_answered_items(
    resp: StructuredResponse,
    required: tuple[SectionKind, ...] = SCORED_KINDS,
    deny_phrases: frozenset[str] = DEFAULT_DENY_PHRASES,
) -> int:
    """Count required items that received a substantive answer (0..5).

    An item counts iff its section exists, is non-blank, and is not solely an
    invalid phrase ("cannot answer" and friends). Even a one-sentence answer
    counts; quality is the judge's concern, not ours.
    """
    if len(required) != 5 or len(set(required)) != 5:
        raise PreconditionViolation("required must name exactly 5 distinct section kinds")
    answered = 0
    for kind in required:
        text = resp.sections.get(kind)
        if text is None or not text.strip():
            continue
        if _is_invalid_answer(text, deny_phrases):
            continue
        answered += 1
    return answered


# ---------------------------------------------------------------------------
# Prescription extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HerbEntry:
    raw_name: str
    canonical_name: str
    dose_text: str = ""


@dataclass
class Prescription:
    """Ordered, canonically-deduplicated herb entries plus extraction warnings."""

    entries: list[HerbEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def canonical_names(self) -> list[str]:
        return [e.canonical_name for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


_DELIMITER_RE = re.compile(r"[、，,\n]")
_PAREN_SUFFIX_RE = re.compile(r"\s*[（(][^()（）]*[)）]\s*$")
_DOSE_RE = re.compile(
    r"(?P<dose>\d+(?:\.\d+)?(?:\s*[-~～至]\s*\d+(?:\.\d+)?)?\s*"
    r"(?:g|mg|kg|ml|l|克|毫克|千克|毫升|升"
    r"|片|枚|个|粒|只|条|对|把|节|段|张|块|丸|根|支|颗|朵|滴|匙|杯|袋|包"
    r"|slices?|pieces?|pcs|drops?|cups?)\.?)\s*$",
    re.IGNORECASE,
)
# Fragments with sentence punctuation are prose, not herb entries.
_PROSE_RE = re.compile(r"[。！？!?：:]")


def extract_prescription(section_text: str, lexicon: "Lexicon") -> Prescription:
    """Split a prescription section into canonicalized herb entries.

    Splits on the herb-list delimiters (、 ， , and newline), peels a trailing
    dose token (digit+unit or digit+counter word) from each fragment, and
    canonicalizes names through the lexicon. Duplicate canonical names are
    collapsed keeping the first occurrence; unparseable fragments are skipped
    and reported in ``warnings``. Never raises.
    """
    from .herbs import normalize_herb

    prescription = Prescription()
    seen: set[str] = set()
    for fragment in _DELIMITER_RE.split(section_text or ""):
        fragment = _ENUMERATION_RE.sub("", fragment.strip())
        fragment = _PAREN_SUFFIX_RE.sub("", fragment).strip()
        if not fragment:
            continue
        dose = ""
        m = _DOSE_RE.search(fragment)
        if m:
            dose = m.group("dose").strip()
            name = fragment[: m.start()].strip()
        else:
            name = fragment
        if not name:
            prescription.warnings.append(f"fragment has dose but no name: {fragment!r}")
            continue
        if _PROSE_RE.search(name) or len(name) > 40:
            prescription.warnings.append(f"skipped non-herb fragment: {fragment!r}")
            continue
        canonical = normalize_herb(name, lexicon)
        if canonical in seen:
            prescription.warnings.append(f"duplicate herb collapsed: {name!r}")
            continue
        seen.add(canonical)
        prescription.entries.append(
            HerbEntry(raw_name=name, canonical_name=canonical, dose_text=dose)
        )
    return prescription
