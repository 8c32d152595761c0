import goldenJson from "./fixtures/golden_result.json";
import type { PipelineResult } from "../src/schema.js";
import type { FetchLike } from "../src/api.js";

export function golden(): PipelineResult {
  return structuredClone(goldenJson) as PipelineResult;
}

export interface RecordedRequest {
  url: string;
  init?: RequestInit;
}

/** A scripted stand-in for the service; records every request it receives. */
export function mockServer(
  respond: (url: string, init?: RequestInit) => Response | Promise<Response>,
): { fetch: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    requests.push({ url, init });
    if (init?.signal?.aborted) {
      throw new DOMException("aborted", "AbortError");
    }
    return respond(url, init);
  };
  return { fetch: fetchImpl, requests };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
