// Bootstrap: fetch config and the image queue, wire views and keys.

import { ApiClient } from "./api.js";
import { actionForKey, isTypingTarget } from "./keyboard.js";
import {
  buildReviewRow,
  createSession,
  nextAttribute,
  ReviewRow,
  SessionState,
  setScore,
  submitDraft,
} from "./state.js";
import { renderAnnotateView, renderReviewView } from "./ui.js";

type View = "annotate" | "review";

async function start(): Promise<void> {
  const client = new ApiClient();
  const root = document.getElementById("app")!;
  const viewButtons = {
    annotate: document.getElementById("view-annotate") as HTMLButtonElement,
    review: document.getElementById("view-review") as HTMLButtonElement,
  };
  const annotatorInput =
    document.getElementById("annotator") as HTMLInputElement;

  const [config, images, records] = await Promise.all([
    client.getConfig(),
    client.listImages(),
    client.listAnnotations(),
  ]);
  const state: SessionState = createSession(
    config, images, records, annotatorInput.value || "annotator");
  let view: View = "annotate";
  let reviewRows: ReviewRow[] = [];
  let reviewPending = false;

  annotatorInput.addEventListener("input", () => {
    state.annotator = annotatorInput.value;
    render();
  });

  const callbacks = {
    onScoreInput(attribute: typeof state.activeAttribute, value: number) {
      setScore(state, attribute, value);
      render();
    },
    onFocusAttribute(attribute: typeof state.activeAttribute) {
      state.activeAttribute = attribute;
      render();
    },
    onSubmit() {
      void submitDraft(state, client).then(render);
    },
  };

  function render(): void {
    viewButtons.annotate.classList.toggle("active", view === "annotate");
    viewButtons.review.classList.toggle("active", view === "review");
    if (view === "annotate") {
      renderAnnotateView(root, state, client, callbacks);
    } else {
      renderReviewView(root, reviewRows, reviewPending);
    }
  }

  async function loadReview(): Promise<void> {
    reviewPending = true;
    render();
    const rows: ReviewRow[] = [];
    for (const record of state.records) {
      const imageId = record.image_path.split("/").pop()!;
      try {
        const prediction = await client.predictImage(imageId);
        const target = prediction.items
          .filter((item) => item.index !== undefined)
          .sort((a, b) => b.confidence - a.confidence)[0] ?? null;
        rows.push(buildReviewRow(record, target));
      } catch {
        rows.push(buildReviewRow(record, null));
      }
    }
    reviewRows = rows;
    reviewPending = false;
    render();
  }

  viewButtons.annotate.addEventListener("click", () => {
    view = "annotate";
    render();
  });
  viewButtons.review.addEventListener("click", () => {
    view = "review";
    void loadReview();
  });

  document.addEventListener("keydown", (event) => {
    if (view !== "annotate" || isTypingTarget(event.target)) {
      return;
    }
    const action = actionForKey(event.key);
    if (action.kind === "none") {
      return;
    }
    event.preventDefault();
    if (action.kind === "score") {
      setScore(state, state.activeAttribute, action.value);
      state.activeAttribute = nextAttribute(state.activeAttribute);
    } else if (action.kind === "focus") {
      state.activeAttribute = action.attribute;
    } else if (action.kind === "submit") {
      void submitDraft(state, client).then(render);
      return;
    }
    render();
  });

  render();
}

start().catch((error) => {
  const root = document.getElementById("app");
  if (root) {
    root.textContent = `failed to start: ${error}`;
  }
});
