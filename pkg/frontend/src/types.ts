// Shared types for the annotation workbench.

export type Attribute = "color" | "shape" | "texture";

export const ATTRIBUTES: Attribute[] = ["color", "shape", "texture"];

/** Scoring configuration fetched from GET /api/config at startup. */
export interface ApiConfig {
  weights: Record<Attribute, number>;
  scale_min: number;
  scale_max: number;
  /** Lower bound of each level band above the bottom one, ascending. */
  level_cuts: number[];
  /** Level labels from least to most liked; one more than level_cuts. */
  levels: string[];
  target_category: string;
}

export interface ImageEntry {
  id: string;
  path: string;
  annotated: boolean;
}

export interface AnnotationRecord {
  image_path: string;
  color: number;
  shape: number;
  texture: number;
  annotator: string;
  timestamp: string;
  index: number;
  level: string;
}

/** Form state; preview fields are recomputed on every change. */
export interface AnnotationDraft {
  image_id: string;
  color: number;
  shape: number;
  texture: number;
  preview_index: number;
  preview_level: string;
}

export interface PredictionItem {
  category: string;
  confidence: number;
  bbox: [number, number, number, number];
  index?: number;
  level?: string;
}

export interface PredictionResult {
  items: PredictionItem[];
  image_width: number;
  image_height: number;
  target_category: string;
  elapsed_seconds: number;
}
