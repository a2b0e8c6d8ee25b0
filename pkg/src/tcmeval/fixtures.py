"""Golden fixtures shipped with the package.

The worked herb-match example (a 12-herb standard answer against a 12-herb
model prescription with 5 overlapping medicinals) anchors the matching and
scoring pipeline end to end; the golden verdict is a fully-consistent
document in the canonical wire format.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from .herbs import Lexicon
from .parsing import Prescription, extract_prescription


def _read(name: str) -> str:
    return resources.files("tcmeval").joinpath(f"data/{name}").read_text(encoding="utf-8")


def load_worked_example() -> dict[str, Any]:
    return json.loads(_read("worked_example.json"))


def load_golden_verdict() -> dict[str, Any]:
    return json.loads(_read("golden_verdict.json"))


def worked_example_prescriptions(
    lexicon: Lexicon, chinese: bool = False
) -> tuple[Prescription, Prescription]:
    """(generated, label) prescriptions from the worked example."""
    fixture = load_worked_example()
    suffix = "_zh" if chinese else ""
    generated = extract_prescription(fixture["model_prescription" + suffix], lexicon)
    label = extract_prescription(fixture["label_prescription" + suffix], lexicon)
    return generated, label


def export_fixtures(out_dir: str | Path) -> list[Path]:
    """Copy the shipped fixtures into a directory; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("worked_example.json", "golden_verdict.json", "default_lexicon.tsv"):
        target = out / name
        target.write_text(_read(name), encoding="utf-8")
        written.append(target)
    return written
