"""Shared test utilities: consistent verdict documents, template text
builders, and an independent schema-walk oracle."""

from __future__ import annotations

import copy
import json
from typing import Any

from tcmeval import rubric

# ---------------------------------------------------------------------------
# Verdict document builders
# ---------------------------------------------------------------------------

def make_document(
    completeness: int = 5,
    etiology: tuple[float, float, float] = (4, 3, 1),
    syndrome: tuple[float, float] = (5, 3),
    principle: tuple[float, float, float] = (4, 2, 1),
    prescription: tuple[float, float, int, int, int] = (3.75, 1, 5, 12, 12),
    theory: tuple[float, float, float] = (3, 2, 1),
    overlapped: list[str] | None = None,
    missing: list[str] | None = None,
) -> dict[str, Any]:
    """A schema-consistent verdict document (sub-sums and total all line up)."""
    match_score, logic, n_matched, n_label, n_generated = prescription
    items = {
        rubric.COMPLETENESS: completeness,
        rubric.ETIOLOGY: sum(etiology),
        rubric.SYNDROME: sum(syndrome),
        rubric.PRINCIPLE: sum(principle),
        rubric.PRESCRIPTION: match_score + logic,
        rubric.THEORY: sum(theory),
    }
    rate = f"{n_matched / n_label * 100:.2f}%" if n_label else "0%"
    return {
        rubric.COMPLETENESS: {
            "score": completeness,
            rubric.K_ANSWERED: completeness,
            rubric.K_REQUIRED: 5,
            rubric.K_MISSING: list(missing or []),
        },
        rubric.ETIOLOGY: {
            "score": items[rubric.ETIOLOGY],
            rubric.K_RECOGNITION: etiology[0],
            rubric.K_PATHOGENESIS: etiology[1],
            rubric.K_COHERENCE: etiology[2],
        },
        rubric.SYNDROME: {
            "score": items[rubric.SYNDROME],
            rubric.K_SYNDROME_ACC: syndrome[0],
            rubric.K_LOCATION: syndrome[1],
        },
        rubric.PRINCIPLE: {
            "score": items[rubric.PRINCIPLE],
            rubric.K_PRINCIPLE_ACC: principle[0],
            rubric.K_SPECIFICITY: principle[1],
            rubric.K_SPECIALIZED: principle[2],
        },
        rubric.PRESCRIPTION: {
            "score": items[rubric.PRESCRIPTION],
            rubric.K_MATCH_SCORE: match_score,
            rubric.K_N_MATCHED: n_matched,
            rubric.K_N_LABEL: n_label,
            rubric.K_N_GENERATED: n_generated,
            rubric.K_OVERLAPPED: list(overlapped or []),
            rubric.K_RATE: rate,
        },
        rubric.THEORY: {
            "score": items[rubric.THEORY],
            rubric.K_THOUGHT_ACC: theory[0],
            rubric.K_PERVASIVENESS: theory[1],
            rubric.K_ELABORATION: theory[2],
        },
        rubric.TOTAL: sum(items.values()),
        rubric.MAX_SCORE: 55,
    }


def mutate(document: dict, path: tuple[str, ...], value: Any) -> dict:
    doc = copy.deepcopy(document)
    node = doc
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    return doc


def drop(document: dict, path: tuple[str, ...]) -> dict:
    doc = copy.deepcopy(document)
    node = doc
    for key in path[:-1]:
        node = node[key]
    del node[path[-1]]
    return doc


def as_json(document: dict) -> str:
    return json.dumps(document, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Independent schema-walk oracle
# ---------------------------------------------------------------------------

# Shape table written independently of rubric.py's field readers: item name ->
# {normalized sub-key -> (kind, max)} where kind is "num", "list" or "str".
_ORACLE_SHAPE: dict[str, dict[str, tuple[str, float | None]]] = {
    "completeness": {
        "score": ("num", 5),
        "number of items actually answered": ("num", 5),
        "total number of items requiring responses": ("num", None),
        "missing item": ("list", None),
    },
    "analysis of etiology and pathogenesis": {
        "score": ("num", 10),
        "recognition of etiology": ("num", 4),
        "description of pathogenesis": ("num", 4),
        "logical coherence": ("num", 2),
    },
    "syndrome differentiation": {
        "score": ("num", 10),
        "accuracy of syndrome": ("num", 6),
        "disease location and nature": ("num", 4),
    },
    "treatment principle": {
        "score": ("num", 10),
        "accuracy of treatment principle": ("num", 5),
        "specificity of treatment method": ("num", 3),
        "application of specialized methods": ("num", 2),
    },
    "tcm prescription": {
        "score": ("num", 10),
        "medicinal match score": ("num", 9),
        "number of matched herbs": ("num", None),
        "number of herbs in label prescription": ("num", None),
        "number of herbs in model-generated prescription": ("num", None),
        "the list of overlapped herbs in both tcm prescriptions": ("list", None),
        "matching rates": ("str", None),
    },
    "distinguished theory application": {
        "score": ("num", 10),
        "accuracy of academic thought": ("num", 5),
        "pervasiveness of thought": ("num", 3),
        "completeness of elaboration": ("num", 2),
    },
}
_ORACLE_TOP_ALIASES = {"response completeness": "completeness"}


def _norm(key: str) -> str:
    return " ".join(str(key).split()).casefold()


def oracle_violations(document: dict) -> list[str]:
    """Independent walk of the verdict shape; returns violation descriptions."""
    violations: list[str] = []
    normalized = {}
    for key, value in document.items():
        name = _norm(key)
        name = _ORACLE_TOP_ALIASES.get(name, name)
        normalized[name] = value

    for item_name, shape in _ORACLE_SHAPE.items():
        if item_name not in normalized:
            violations.append(f"missing item: {item_name}")
            continue
        item = normalized[item_name]
        if not isinstance(item, dict) or not item:
            continue  # null/empty items are zero-forced, not violations
        sub = { _norm(k): v for k, v in item.items() }
        for key, (kind, maximum) in shape.items():
            if key not in sub:
                violations.append(f"missing field: {item_name}.{key}")
                continue
            value = sub[key]
            if kind == "num":
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    violations.append(f"not a number: {item_name}.{key}")
                elif value < 0 or (maximum is not None and value > maximum):
                    violations.append(f"out of range: {item_name}.{key}")
            elif kind == "list" and not isinstance(value, list):
                violations.append(f"not a list: {item_name}.{key}")

    for scalar, maximum in (("total score", 55), ("maximum score", 55)):
        if scalar not in normalized:
            violations.append(f"missing item: {scalar}")
        else:
            value = normalized[scalar]
            if not isinstance(value, (int, float)) or value < 0 or value > maximum:
                violations.append(f"bad scalar: {scalar}")
    return violations


def oracle_clamp(value: float, maximum: float) -> float:
    return max(0.0, min(value, maximum))


# ---------------------------------------------------------------------------
# Response template text
# ---------------------------------------------------------------------------

SECTION_FILLER = {
    "etiology": "外感风热，邪袭肺卫，肺失宣降。",
    "syndrome": "风热犯肺证。",
    "principle": "疏风清热，宣肺止咳。",
    "explanation": "方中诸药相合，共奏疏风清热之效。",
    "theory": "体现清透并举、表里同治的学术思想。",
    "modification": "若咳甚，加杏仁；若热重，加石膏。",
    "advice": "饮食清淡，避风寒，多饮温水。",
}


def make_response_text(prescription: str, reasoning: str = "辨证思路如下。") -> str:
    return (
        f"<think>{reasoning}</think>\n"
        "<output>\n"
        "Etiology and Pathogenesis Analysis\n"
        f"{SECTION_FILLER['etiology']}\n"
        "Syndrome Differentiation\n"
        f"{SECTION_FILLER['syndrome']}\n"
        "Treatment Principle\n"
        f"{SECTION_FILLER['principle']}\n"
        "TCM Prescription\n"
        f"{prescription}\n"
        "Prescription Explanation\n"
        f"{SECTION_FILLER['explanation']}\n"
        "Application of Distinguished or Specialized Differentiation and Treatment Theory\n"
        f"{SECTION_FILLER['theory']}\n"
        "Modification of Herbs Based on Symptom Changes\n"
        f"{SECTION_FILLER['modification']}\n"
        "Medical Advice and Precautions\n"
        f"{SECTION_FILLER['advice']}\n"
        "</output>"
    )
