import type { ServiceClient } from "./api.js";
import type { FeedbackAction, SessionViewState } from "./state.js";

/**
 * Optimistically mark a track, POST the feedback, and roll the mark back to
 * its previous value if the service does not acknowledge with 204. Resolves
 * true iff the mark persisted.
 */
export async function submitFeedback(
  state: SessionViewState,
  client: ServiceClient,
  trackKey: string,
  action: FeedbackAction,
  rerender: () => void = () => {},
): Promise<boolean> {
  const previous = state.mark(trackKey, action);
  rerender();
  const accepted = await client.postFeedback(state.sessionId, trackKey, action);
  if (!accepted) {
    state.rollback(trackKey, previous);
    rerender();
  }
  return accepted;
}
