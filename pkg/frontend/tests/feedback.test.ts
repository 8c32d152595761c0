import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { submitFeedback } from "../src/feedback.js";
import { SessionViewState } from "../src/state.js";
import { golden, mockServer } from "./helpers.js";

function setup(status: number | (() => number)) {
  const server = mockServer(() => {
    const code = typeof status === "function" ? status() : status;
    return new Response(null, { status: code });
  });
  const state = new SessionViewState("session-1");
  state.setResult(golden());
  const client = new ServiceClient("", server.fetch);
  const key = golden().recommendations[0]!.track_key;
  return { server, state, client, key };
}

describe("submitFeedback", () => {
  it("keeps the optimistic mark on 204", async () => {
    const { server, state, client, key } = setup(204);
    const renders: Array<string | undefined> = [];
    const ok = await submitFeedback(state, client, key, "listened", () =>
      renders.push(state.markOf(key)),
    );
    expect(ok).toBe(true);
    expect(state.markOf(key)).toBe("listened");
    expect(renders).toEqual(["listened"]); // optimistic render, no rollback render
    const body = JSON.parse(String(server.requests[0]!.init?.body));
    expect(body).toEqual({ session_id: "session-1", track_key: key, action: "listened" });
  });

  it("rolls the mark back on 400", async () => {
    const { state, client, key } = setup(400);
    const renders: Array<string | undefined> = [];
    const ok = await submitFeedback(state, client, key, "skipped", () =>
      renders.push(state.markOf(key)),
    );
    expect(ok).toBe(false);
    expect(state.markOf(key)).toBeUndefined();
    expect(renders).toEqual(["skipped", undefined]); // mark appeared, then reverted
  });

  it("rolls back to the previous mark, not to nothing", async () => {
    const { state, client, key } = setup(500);
    state.mark(key, "listened");
    await submitFeedback(state, client, key, "skipped");
    expect(state.markOf(key)).toBe("listened");
  });

  it("rolls back when the network itself fails", async () => {
    const state = new SessionViewState("s");
    state.setResult(golden());
    const key = golden().recommendations[0]!.track_key;
    const client = new ServiceClient("", () => Promise.reject(new TypeError("offline")));
    expect(await submitFeedback(state, client, key, "listened")).toBe(false);
    expect(state.markOf(key)).toBeUndefined();
  });

  it("sends five rapid submissions as five requests in order", async () => {
    const { server, state, client } = setup(204);
    const keys = golden().recommendations.map((r) => r.track_key);
    const targets = [0, 1, 2, 3, 0].map((i) => keys[i % keys.length]!);
    await Promise.all(
      targets.map((key, i) =>
        submitFeedback(state, client, key, i % 2 === 0 ? "listened" : "skipped"),
      ),
    );
    expect(server.requests).toHaveLength(5);
    const sent = server.requests.map(
      (r) => JSON.parse(String(r.init?.body)).track_key as string,
    );
    expect(sent).toEqual(targets);
  });

  it("refuses to mark a track that is not displayed", () => {
    const state = new SessionViewState("s");
    state.setResult(golden());
    expect(() => state.mark("ghost — track", "listened")).toThrow(RangeError);
  });
});
