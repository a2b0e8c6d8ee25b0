// DOM renderers. Everything shown to the rater comes straight from the API
// payloads: the blinded label, the case text, and section lists. The eight
// template headings always render, with an em-dash placeholder for sections
// the response left out.

import type { NextItem, Progress, SectionView } from "./api.js";

export const TEMPLATE_HEADERS: readonly string[] = [
  "Etiology and Pathogenesis Analysis",
  "Syndrome Differentiation",
  "Treatment Principle",
  "TCM Prescription",
  "Prescription Explanation",
  "Application of Distinguished or Specialized Differentiation and Treatment Theory",
  "Modification of Herbs Based on Symptom Changes",
  "Medical Advice and Precautions",
];

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function sectionList(doc: Document, sections: SectionView[]): HTMLElement {
  const byHeader = new Map(sections.map((s) => [s.header, s.text]));
  const container = el(doc, "div", "sections");
  for (const header of TEMPLATE_HEADERS) {
    container.appendChild(el(doc, "h4", "section-header", header));
    const text = byHeader.get(header);
    container.appendChild(
      el(doc, "p", text ? "section-text" : "section-text empty", text ?? "—"),
    );
  }
  return container;
}

export function renderProgress(doc: Document, progress: Progress): HTMLElement {
  return el(doc, "div", "progress", `Rated ${progress.rated} of ${progress.total}`);
}

export interface ScorePicker {
  root: HTMLElement;
  /** Selected value per dimension; undefined until the rater picks one. */
  values: Map<string, number>;
  submitButton: HTMLButtonElement;
}

export function renderItem(doc: Document, item: NextItem): ScorePicker {
  const root = el(doc, "div", "rating-item");
  root.appendChild(renderProgress(doc, item.progress));
  root.appendChild(el(doc, "h2", "blinded-label", item.label ?? ""));

  const caseBox = el(doc, "section", "case-box");
  caseBox.appendChild(el(doc, "h3", undefined, "Clinical case"));
  caseBox.appendChild(el(doc, "p", "case-text", item.case_text ?? ""));
  root.appendChild(caseBox);

  const goldBox = el(doc, "section", "gold-box");
  goldBox.appendChild(el(doc, "h3", undefined, "Reference answer"));
  goldBox.appendChild(sectionList(doc, item.gold_sections ?? []));
  root.appendChild(goldBox);

  const responseBox = el(doc, "section", "response-box");
  responseBox.appendChild(el(doc, "h3", undefined, `Response from ${item.label}`));
  responseBox.appendChild(sectionList(doc, item.response_sections ?? []));
  root.appendChild(responseBox);

  const form = el(doc, "section", "score-form");
  const values = new Map<string, number>();
  const submitButton = el(doc, "button", "submit") as HTMLButtonElement;
  submitButton.textContent = "Submit scores";
  submitButton.disabled = true;

  const dimensions = item.dimensions ?? [];
  for (const dimension of dimensions) {
    const row = el(doc, "div", "score-row");
    row.appendChild(el(doc, "span", "dimension-name", dimension));
    for (let value = 1; value <= 10; value++) {
      const button = el(doc, "button", "score-option", String(value)) as HTMLButtonElement;
      button.dataset.dimension = dimension;
      button.dataset.value = String(value);
      button.addEventListener("click", () => {
        values.set(dimension, value);
        for (const sibling of Array.from(row.querySelectorAll("button"))) {
          sibling.classList.toggle("selected", sibling === button);
        }
        submitButton.disabled = values.size < dimensions.length;
      });
      row.appendChild(button);
    }
    form.appendChild(row);
  }
  form.appendChild(submitButton);
  root.appendChild(form);
  return { root, values, submitButton };
}

export function renderComplete(doc: Document, progress: Progress,
                               exportUrl: string): HTMLElement {
  const root = el(doc, "div", "session-complete");
  root.appendChild(el(doc, "h2", undefined, "Session complete"));
  root.appendChild(renderProgress(doc, progress));
  const link = el(doc, "a", "export-link", "Download ratings (JSONL)");
  link.setAttribute("href", exportUrl);
  root.appendChild(link);
  return root;
}

export function renderRetryBanner(doc: Document, message: string,
                                  onRetry: () => void): HTMLElement {
  const banner = el(doc, "div", "retry-banner");
  banner.appendChild(el(doc, "span", "error-text", message));
  const button = el(doc, "button", "retry", "Retry");
  button.addEventListener("click", onRetry);
  banner.appendChild(button);
  return banner;
}

export function renderErrorBanner(doc: Document, code: string,
                                  detail: string): HTMLElement {
  const banner = el(doc, "div", "error-banner");
  banner.appendChild(el(doc, "strong", undefined, code));
  banner.appendChild(el(doc, "span", "error-text", ` ${detail}`));
  return banner;
}

export interface AmendDialog {
  root: HTMLElement;
  confirmButton: HTMLButtonElement;
  cancelButton: HTMLButtonElement;
}

export function renderAmendDialog(doc: Document, detail: string): AmendDialog {
  const root = el(doc, "div", "amend-dialog");
  root.appendChild(el(doc, "p", undefined, detail));
  root.appendChild(el(doc, "p", undefined,
                      "Submit again to replace the stored rating?"));
  const confirmButton = el(doc, "button", "amend-confirm", "Replace rating") as HTMLButtonElement;
  const cancelButton = el(doc, "button", "amend-cancel", "Keep original") as HTMLButtonElement;
  root.appendChild(confirmButton);
  root.appendChild(cancelButton);
  return { root, confirmButton, cancelButton };
}
