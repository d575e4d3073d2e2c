// Thin typed client over the annotation/prediction HTTP API.

import {
  AnnotationRecord,
  ApiConfig,
  ImageEntry,
  PredictionResult,
} from "./types.js";

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${cause}`);
  }
}

export type SubmitOutcome =
  | { kind: "ok"; record: AnnotationRecord }
  | { kind: "conflict"; detail: string }
  | { kind: "invalid"; errors: string[] };

export interface SubmitPayload {
  image_id: string;
  color: number;
  shape: number;
  texture: number;
  annotator: string;
}

async function getJson<T>(base: string, path: string): Promise<T> {
  let response: Response;
  try {
    response = await fetch(base + path);
  } catch (cause) {
    throw new NetworkError(cause);
  }
  if (!response.ok) {
    throw new Error(`${path} failed with status ${response.status}`);
  }
  return response.json() as Promise<T>;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  getConfig(): Promise<ApiConfig> {
    return getJson<ApiConfig>(this.base, "/api/config");
  }

  listImages(): Promise<ImageEntry[]> {
    return getJson<ImageEntry[]>(this.base, "/api/images");
  }

  listAnnotations(): Promise<AnnotationRecord[]> {
    return getJson<AnnotationRecord[]>(this.base, "/api/annotations");
  }

  imageUrl(imageId: string): string {
    return `${this.base}/api/images/${encodeURIComponent(imageId)}`;
  }

  async submitAnnotation(payload: SubmitPayload): Promise<SubmitOutcome> {
    let response: Response;
    try {
      response = await fetch(this.base + "/api/annotations", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (response.ok) {
      return { kind: "ok", record: await response.json() };
    }
    if (response.status === 409) {
      const body = await response.json().catch(() => ({ detail: "conflict" }));
      return { kind: "conflict", detail: body.detail ?? "already annotated" };
    }
    if (response.status === 422) {
      const body = await response.json().catch(() => ({ errors: [] }));
      return { kind: "invalid", errors: body.errors ?? ["invalid scores"] };
    }
    throw new Error(`annotation submit failed with status ${response.status}`);
  }

  /** Fetch stored image bytes and run them through the prediction pipeline. */
  async predictImage(imageId: string): Promise<PredictionResult> {
    let response: Response;
    try {
      const bytes = await fetch(this.imageUrl(imageId));
      if (!bytes.ok) {
        throw new Error(`image fetch failed with status ${bytes.status}`);
      }
      const form = new FormData();
      form.append("image", await bytes.blob(), imageId);
      response = await fetch(this.base + "/api/predict", {
        method: "POST",
        body: form,
      });
    } catch (cause) {
      if (cause instanceof Error && cause.message.includes("status")) {
        throw cause;
      }
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      throw new Error(`predict failed with status ${response.status}`);
    }
    return response.json() as Promise<PredictionResult>;
  }
}
