"""Judge prompt assembly.

The default system prompt carries the full scoring rubric and the JSON
schema the verdict must follow; the user template takes the gold label and
the model response through two placeholders. Substitution is single-pass
and byte-exact: payloads are never escaped, truncated, or rescanned (a
payload containing the placeholder token itself stays untouched).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import TemplateError
from .rubric import JudgeVerdict

LABEL_PLACEHOLDER = "{label_content}"
RESPONSE_PLACEHOLDER = "{model_response}"

_SCHEMA_EXAMPLE = json.dumps(JudgeVerdict().to_document(), ensure_ascii=False, indent=2)

DEFAULT_SYSTEM_PROMPT = f"""You are a professional TCM evaluation expert. Compare the TCM diagnostic content generated by an AI model against a standard answer (label) and score the five Items below plus response completeness.

Output the evaluation results strictly as JSON in this schema:

{_SCHEMA_EXAMPLE}

Scoring criteria:

0. Response Completeness (max 5): score = (number of Items actually answered / 5) x 5. An Item counts as answered when it has substantive content; blank, "unknown", "cannot answer" or similar invalid text does not count. List unanswered Items under "Missing Item".

1. Analysis of Etiology and Pathogenesis (max 10): Recognition of Etiology (0-4) + Description of Pathogenesis (0-4) + Logical Coherence (0-2). Item score is the sum.

2. Syndrome Differentiation (max 10): Accuracy of Syndrome (0-6, full marks for a syndrome name that matches the label or an equivalent name) + Disease Location and Nature (0-4). Item score is the sum.

3. Treatment Principle (max 10): Accuracy of Treatment Principle (0-5) + Specificity of Treatment Method (0-3) + Application of Specialized Methods (0-2). Item score is the sum.

4. TCM Prescription (max 10): Medicinal Match Score = (number of identical medicinals / total medicinals in the standard answer) x 9, plus formula-composition logic points (1 = sound composition, 0.5 = minor flaws, 0 = incompatible or clearly unreasonable combinations). Extract all medicinal names from the standard answer and the model generation and count identical ones. Medicinals with the same efficacy but different names are identical; the same source with different processing methods is identical; disregard dosage, processing and origin differences. Fill in the matched/label/generated counts, the overlapped-herb list, and the matching rate as a percent string.

5. Distinguished Theory application (max 10): Accuracy of Academic Thought (0-5) + Pervasiveness of Thought (0-3) + Completeness of Elaboration (0-2). Item score is the sum.

Notes: score objectively against TCM theory; evaluate completeness first; if any Item is null or empty assign it 0 directly; Total Score = Completeness + the five Item scores, Maximum Score = 55. Output only the JSON document."""

DEFAULT_USER_TEMPLATE = f"""Please evaluate the model-generated content against the label based on the instructions in the system prompt, and output the evaluation in the required JSON schema.

Label: {LABEL_PLACEHOLDER}

Model response: {RESPONSE_PLACEHOLDER}

Output scores:"""

CORRECTIVE_SUFFIX = (
    "\n\nReminder: return ONLY a valid JSON document matching the required schema, "
    "with no markdown fences or extra text."
)


@dataclass(frozen=True)
class PromptTemplate:
    system: str = DEFAULT_SYSTEM_PROMPT
    user_template: str = DEFAULT_USER_TEMPLATE

    def validate(self) -> None:
        for token in (LABEL_PLACEHOLDER, RESPONSE_PLACEHOLDER):
            n = self.user_template.count(token)
            if n != 1:
                raise TemplateError(
                    f"user template must contain {token} exactly once, found {n}"
                )


@dataclass(frozen=True)
class PromptPair:
    system: str
    user: str


def build_judge_prompt(
    label_content: str,
    model_response: str,
    template: PromptTemplate = PromptTemplate(),
) -> PromptPair:
    """Substitute both payloads into the template, each exactly once.

    Substitution splices at the placeholder positions found in the original
    template, so placeholder-looking text inside a payload is never expanded.
    """
    template.validate()
    text = template.user_template
    label_at = text.find(LABEL_PLACEHOLDER)
    response_at = text.find(RESPONSE_PLACEHOLDER)
    spans = sorted(
        [(label_at, LABEL_PLACEHOLDER, label_content),
         (response_at, RESPONSE_PLACEHOLDER, model_response)]
    )
    out: list[str] = []
    cursor = 0
    for at, token, payload in spans:
        out.append(text[cursor:at])
        out.append(payload)
        cursor = at + len(token)
    out.append(text[cursor:])
    return PromptPair(system=template.system, user="".join(out))


def structured_output_format() -> dict:
    """response_format block for judges with native JSON-schema output."""
    number = {"type": "number"}
    string_array = {"type": "array", "items": {"type": "string"}}

    def obj(props: dict) -> dict:
        return {
            "type": "object",
            "properties": props,
            "required": list(props),
            "additionalProperties": False,
        }

    schema = obj({
        "Response Completeness": obj({
            "score": number,
            "Number of Items Actually Answered": number,
            "Total Number of Items Requiring Responses": number,
            "Missing Item": string_array,
        }),
        "Analysis of Etiology and Pathogenesis": obj({
            "score": number,
            "Recognition of Etiology": number,
            "Description of Pathogenesis": number,
            "Logical Coherence": number,
        }),
        "Syndrome Differentiation": obj({
            "score": number,
            "Accuracy of Syndrome": number,
            "Disease Location and Nature": number,
        }),
        "Treatment Principle": obj({
            "score": number,
            "Accuracy of Treatment Principle": number,
            "Specificity of Treatment Method": number,
            "Application of Specialized Methods": number,
        }),
        "TCM Prescription": obj({
            "score": number,
            "Medicinal Match Score": number,
            "Number of matched herbs": number,
            "Number of Herbs in Label Prescription": number,
            "Number of Herbs in Model-Generated Prescription": number,
            "The List of Overlapped Herbs in both TCM Prescriptions": string_array,
            "Matching rates": {"type": "string"},
        }),
        "Distinguished Theory application": obj({
            "score": number,
            "Accuracy of Academic Thought": number,
            "Pervasiveness of Thought": number,
            "Completeness of Elaboration": number,
        }),
        "Total Score": number,
        "Maximum Score": number,
    })
    return {
        "type": "json_schema",
        "json_schema": {"name": "tcm_evaluation", "schema": schema, "strict": True},
    }
