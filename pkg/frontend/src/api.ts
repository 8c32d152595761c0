import { parsePipelineResult, type PipelineResult } from "./schema.js";
import type { FeedbackAction } from "./state.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface RecommendationParams {
  hour?: number | null;
  k?: number;
  epsilon?: number;
}

/** Thin client over the service's JSON endpoints; fetch is injectable for tests. */
export class ServiceClient {
  constructor(
    private readonly baseUrl = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async getRecommendations(
    params: RecommendationParams,
    signal?: AbortSignal,
  ): Promise<PipelineResult> {
    const query = new URLSearchParams();
    if (params.hour !== null && params.hour !== undefined) {
      query.set("hour", String(params.hour));
    }
    if (params.k !== undefined) query.set("k", String(params.k));
    if (params.epsilon !== undefined) query.set("epsilon", String(params.epsilon));
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/recommendations${suffix}`,
      signal ? { signal } : undefined,
    );
    if (!response.ok) {
      throw new Error(`recommendations request failed: HTTP ${response.status}`);
    }
    return parsePipelineResult(await response.json());
  }

  /** Resolves true iff the service acknowledged the feedback with 204. */
  async postFeedback(
    sessionId: string,
    trackKey: string,
    action: FeedbackAction,
  ): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/api/feedback`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ session_id: sessionId, track_key: trackKey, action }),
      });
      return response.status === 204;
    } catch {
      return false;
    }
  }
}
