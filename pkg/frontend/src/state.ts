// Annotation session state and the submit workflow.
//
// Kept free of DOM access so the contract tests run against plain
// objects with a mocked API client.

import { ApiClient, NetworkError, SubmitOutcome } from "./api.js";
import { computePreview, formatIndex, scoreErrors } from "./scoring.js";
import {
  AnnotationDraft,
  AnnotationRecord,
  ApiConfig,
  Attribute,
  ATTRIBUTES,
  ImageEntry,
} from "./types.js";

/** Server previews may differ from the client's by at most this much. */
export const PARITY_TOLERANCE = 0.005;

export interface Banner {
  kind: "info" | "conflict" | "network" | "contract" | "invalid";
  text: string;
  /** Network banners offer a retry of the preserved draft. */
  canRetry: boolean;
}

export interface SessionState {
  config: ApiConfig;
  images: ImageEntry[];
  /** Image ids still to be annotated, in queue order. */
  queue: string[];
  draft: AnnotationDraft | null;
  activeAttribute: Attribute;
  banner: Banner | null;
  records: AnnotationRecord[];
  annotator: string;
}

function defaultScore(config: ApiConfig): number {
  // Middle of the scale: 5 on the standard nine-point scale.
  return Math.round((config.scale_min + config.scale_max) / 2);
}

export function makeDraft(imageId: string, config: ApiConfig): AnnotationDraft {
  const mid = defaultScore(config);
  const preview = computePreview(
    { color: mid, shape: mid, texture: mid }, config);
  return {
    image_id: imageId,
    color: mid,
    shape: mid,
    texture: mid,
    preview_index: preview.index,
    preview_level: preview.level,
  };
}

export function createSession(config: ApiConfig, images: ImageEntry[],
                              records: AnnotationRecord[],
                              annotator: string): SessionState {
  const queue = images.filter((img) => !img.annotated).map((img) => img.id);
  return {
    config,
    images,
    queue,
    draft: queue.length > 0 ? makeDraft(queue[0], config) : null,
    activeAttribute: "color",
    banner: null,
    records,
    annotator,
  };
}

/** Update one attribute and recompute the preview (every change). */
export function setScore(state: SessionState, attribute: Attribute,
                         value: number): void {
  if (!state.draft) {
    return;
  }
  state.draft[attribute] = value;
  const preview = computePreview({
    color: state.draft.color,
    shape: state.draft.shape,
    texture: state.draft.texture,
  }, state.config);
  state.draft.preview_index = preview.index;
  state.draft.preview_level = preview.level;
  state.banner = null;
}

/** Validation messages that disable submission, empty when clean. */
export function draftErrors(state: SessionState): string[] {
  if (!state.draft) {
    return ["no image to annotate"];
  }
  const errors = scoreErrors({
    color: state.draft.color,
    shape: state.draft.shape,
    texture: state.draft.texture,
  }, state.config);
  if (!state.annotator.trim()) {
    errors.push("annotator name is required");
  }
  return errors;
}

export function nextAttribute(attribute: Attribute): Attribute {
  const i = ATTRIBUTES.indexOf(attribute);
  return ATTRIBUTES[(i + 1) % ATTRIBUTES.length];
}

function advanceQueue(state: SessionState): void {
  state.queue.shift();
  state.draft = state.queue.length > 0
    ? makeDraft(state.queue[0], state.config)
    : null;
  state.activeAttribute = "color";
}

/**
 * Submit the current draft.
 *
 * Success: the returned record (server is the source of truth) is
 * appended, its index is checked against the preview at the parity
 * tolerance, and the queue advances.  409 and validation failures keep
 * the draft untouched; network failures additionally offer a retry.
 */
export async function submitDraft(state: SessionState,
                                  client: ApiClient): Promise<void> {
  if (!state.draft) {
    return;
  }
  const errors = draftErrors(state);
  if (errors.length > 0) {
    state.banner = { kind: "invalid", text: errors.join("; "),
                     canRetry: false };
    return;
  }
  const draft = state.draft;
  let outcome: SubmitOutcome;
  try {
    outcome = await client.submitAnnotation({
      image_id: draft.image_id,
      color: draft.color,
      shape: draft.shape,
      texture: draft.texture,
      annotator: state.annotator,
    });
  } catch (error) {
    if (error instanceof NetworkError) {
      state.banner = {
        kind: "network",
        text: "network failure; your scores are preserved",
        canRetry: true,
      };
      return;
    }
    throw error;
  }
  if (outcome.kind === "conflict") {
    state.banner = { kind: "conflict", text: outcome.detail, canRetry: false };
    return;
  }
  if (outcome.kind === "invalid") {
    state.banner = { kind: "invalid", text: outcome.errors.join("; "),
                     canRetry: false };
    return;
  }
  const record = outcome.record;
  if (Math.abs(record.index - draft.preview_index) > PARITY_TOLERANCE) {
    state.banner = {
      kind: "contract",
      text: `server index ${formatIndex(record.index)} disagrees with `
        + `preview ${formatIndex(draft.preview_index)}: scoring contract `
        + `violation`,
      canRetry: false,
    };
    return;
  }
  state.records.push(record);
  const image = state.images.find((img) => img.id === draft.image_id);
  if (image) {
    image.annotated = true;
  }
  state.banner = {
    kind: "info",
    text: `saved ${draft.image_id}: ${formatIndex(record.index)} `
      + `(${record.level})`,
    canRetry: false,
  };
  advanceQueue(state);
}

export interface ReviewRow {
  imageId: string;
  annotatedIndex: number;
  annotatedLevel: string;
  predictedIndex: number | null;
  predictedLevel: string | null;
  /** prediction - annotation; null when the model found no target object. */
  indexDelta: number | null;
  levelMatch: boolean | null;
}

/** Join annotations with model predictions for the review table. */
export function buildReviewRow(record: AnnotationRecord,
                               prediction: { index?: number; level?: string }
                                 | null): ReviewRow {
  const imageId = record.image_path.split("/").pop() ?? record.image_path;
  if (!prediction || prediction.index === undefined) {
    return {
      imageId,
      annotatedIndex: record.index,
      annotatedLevel: record.level,
      predictedIndex: null,
      predictedLevel: null,
      indexDelta: null,
      levelMatch: null,
    };
  }
  return {
    imageId,
    annotatedIndex: record.index,
    annotatedLevel: record.level,
    predictedIndex: prediction.index,
    predictedLevel: prediction.level ?? null,
    indexDelta: prediction.index - record.index,
    levelMatch: prediction.level === record.level,
  };
}
