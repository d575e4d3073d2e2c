// Client-side mirror of the server's scoring: weighted index + level.
// Weights and level thresholds always come from the server config, never
// from constants here, so the two sides cannot drift; the exhaustive
// parity test pins the numeric agreement.

import { ApiConfig, Attribute, ATTRIBUTES } from "./types.js";

export function isValidScore(value: number, config: ApiConfig): boolean {
  return Number.isInteger(value)
    && value >= config.scale_min
    && value <= config.scale_max;
}

/** Messages for every invalid field, empty when the draft is submittable. */
export function scoreErrors(
  scores: Record<Attribute, number>, config: ApiConfig): string[] {
  const errors: string[] = [];
  for (const attr of ATTRIBUTES) {
    if (!isValidScore(scores[attr], config)) {
      errors.push(`${attr} must be an integer in `
        + `[${config.scale_min}, ${config.scale_max}]`);
    }
  }
  return errors;
}

/** Weighted mean of the attribute scores (same arithmetic as the server). */
export function computeIndex(
  scores: Record<Attribute, number>, config: ApiConfig): number {
  let weighted = 0;
  let total = 0;
  for (const attr of ATTRIBUTES) {
    weighted += config.weights[attr] * scores[attr];
    total += config.weights[attr];
  }
  const value = weighted / total;
  const lo = Math.min(scores.color, scores.shape, scores.texture);
  const hi = Math.max(scores.color, scores.shape, scores.texture);
  return Math.min(Math.max(value, lo), hi);
}

/** Map an index to its level label using the configured cuts. */
export function levelFor(index: number, config: ApiConfig): string {
  let band = 0;
  for (const cut of config.level_cuts) {
    if (index >= cut) {
      band += 1;
    }
  }
  return config.levels[band];
}

export interface Preview {
  index: number;
  level: string;
}

export function computePreview(
  scores: Record<Attribute, number>, config: ApiConfig): Preview {
  const index = computeIndex(scores, config);
  return { index, level: levelFor(index, config) };
}

/** Indices are shown at two decimals everywhere. */
export function formatIndex(index: number): string {
  return index.toFixed(2);
}
