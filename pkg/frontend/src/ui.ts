// DOM rendering for the two views (annotate, review).

import { ApiClient } from "./api.js";
import { formatIndex } from "./scoring.js";
import {
  draftErrors,
  ReviewRow,
  SessionState,
} from "./state.js";
import { Attribute, ATTRIBUTES } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export interface AnnotateCallbacks {
  onScoreInput(attribute: Attribute, value: number): void;
  onFocusAttribute(attribute: Attribute): void;
  onSubmit(): void;
}

export function renderAnnotateView(root: HTMLElement, state: SessionState,
                                   client: ApiClient,
                                   callbacks: AnnotateCallbacks): void {
  root.replaceChildren();

  if (state.banner) {
    const banner = el("div", `banner banner-${state.banner.kind}`,
                      state.banner.text);
    if (state.banner.canRetry) {
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", callbacks.onSubmit);
      banner.append(" ", retry);
    }
    root.append(banner);
  }

  if (!state.draft) {
    root.append(el("p", "done",
                   "Queue empty: every image has been annotated."));
    return;
  }

  const draft = state.draft;
  const remaining = state.queue.length;
  root.append(el("p", "progress",
                 `${draft.image_id} - ${remaining} image(s) remaining`));

  const img = el("img", "photo");
  img.src = client.imageUrl(draft.image_id);
  img.alt = draft.image_id;
  root.append(img);

  const form = el("div", "scores");
  for (const attribute of ATTRIBUTES) {
    const field = el("label", "score-field");
    const active = attribute === state.activeAttribute ? " (active)" : "";
    field.append(el("span", "score-name",
                    `${attribute} [${attribute[0]}]${active}`));
    const input = el("input");
    input.type = "number";
    input.min = String(state.config.scale_min);
    input.max = String(state.config.scale_max);
    input.step = "1";
    input.value = String(draft[attribute]);
    input.dataset.attribute = attribute;
    input.addEventListener("input", () => {
      callbacks.onScoreInput(attribute, Number(input.value));
    });
    input.addEventListener("focus", () => {
      callbacks.onFocusAttribute(attribute);
    });
    field.append(input);
    form.append(field);
  }
  root.append(form);

  const preview = el("p", "preview",
                     `${formatIndex(draft.preview_index)} - `
                     + draft.preview_level);
  root.append(preview);

  const errors = draftErrors(state);
  if (errors.length > 0) {
    root.append(el("p", "errors", errors.join("; ")));
  }
  const submit = el("button", "submit", "Save (Enter)");
  submit.disabled = errors.length > 0;
  submit.addEventListener("click", callbacks.onSubmit);
  root.append(submit);
}

export function renderReviewView(root: HTMLElement, rows: ReviewRow[],
                                 pending: boolean): void {
  root.replaceChildren();
  if (pending) {
    root.append(el("p", "progress", "Scoring stored images..."));
  }
  if (rows.length === 0 && !pending) {
    root.append(el("p", "done", "No annotations to review yet."));
    return;
  }
  const table = el("table", "review");
  const head = el("tr");
  for (const title of ["image", "annotated", "predicted", "delta",
                       "level match"]) {
    head.append(el("th", undefined, title));
  }
  table.append(head);
  for (const row of rows) {
    const tr = el("tr");
    tr.append(el("td", undefined, row.imageId));
    tr.append(el("td", undefined,
                 `${formatIndex(row.annotatedIndex)} (${row.annotatedLevel})`));
    if (row.predictedIndex === null) {
      tr.append(el("td", "missing", "no detection"));
      tr.append(el("td", "missing", "-"));
      tr.append(el("td", "missing", "-"));
    } else {
      tr.append(el("td", undefined,
                   `${formatIndex(row.predictedIndex)} `
                   + `(${row.predictedLevel ?? "?"})`));
      const delta = row.indexDelta ?? 0;
      tr.append(el("td", delta > 0 ? "delta-up" : "delta-down",
                   (delta >= 0 ? "+" : "") + formatIndex(delta)));
      tr.append(el("td", row.levelMatch ? "match" : "mismatch",
                   row.levelMatch ? "match" : "mismatch"));
    }
    table.append(tr);
  }
  root.append(table);
}
