import type { ServiceClient } from "./api.js";
import type { PipelineResult } from "./schema.js";
import type { SessionViewState } from "./state.js";

export const EPSILON_DEBOUNCE_MS = 300;

export interface EpsilonHandlerOptions {
  debounceMs?: number;
  onResult: (result: PipelineResult) => void;
  onError?: (error: unknown) => void;
}

/**
 * Build the epsilon-slider change handler: debounced so a drag costs one
 * request, no-op when the value is unchanged, and latest-wins — at most one
 * recommendations request is in flight and a newer change aborts it.
 */
export function onEpsilonChange(
  state: SessionViewState,
  client: ServiceClient,
  options: EpsilonHandlerOptions,
): (value: number) => void {
  const delay = options.debounceMs ?? EPSILON_DEBOUNCE_MS;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let inFlight: AbortController | null = null;
  let generation = 0;

  return (value: number) => {
    if (value === state.epsilon) return;
    state.epsilon = value;
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      inFlight?.abort();
      const controller = new AbortController();
      inFlight = controller;
      const ticket = ++generation;
      state.status = "loading";
      client
        .getRecommendations(
          { hour: state.hour, epsilon: state.epsilon },
          controller.signal,
        )
        .then((result) => {
          if (ticket !== generation) return; // superseded by a newer change
          state.setResult(result);
          options.onResult(result);
        })
        .catch((error) => {
          if (ticket !== generation || controller.signal.aborted) return;
          state.setError(String(error));
          options.onError?.(error);
        });
    }, delay);
  };
}
