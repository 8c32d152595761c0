import type { PipelineResult } from "./schema.js";

export type FeedbackAction = "listened" | "skipped";
export type RequestStatus = "idle" | "loading" | "error";

/**
 * All mutable view state for one browsing session. The recommendation data
 * itself is never edited here — only which result is shown, the slider value,
 * and local per-track feedback marks layered on top of it.
 */
export class SessionViewState {
  /** null means "follow the server clock"; a number is a manual override. */
  hour: number | null = null;
  result: PipelineResult | null = null;
  status: RequestStatus = "idle";
  errorMessage: string | null = null;
  readonly sessionId: string;
  private epsilonValue = 0;
  private marks = new Map<string, FeedbackAction>();

  constructor(sessionId?: string) {
    this.sessionId = sessionId ?? `session-${Date.now().toString(36)}`;
  }

  get epsilon(): number {
    return this.epsilonValue;
  }

  set epsilon(value: number) {
    if (!(value >= 0 && value <= 1)) {
      throw new RangeError(`epsilon must be in [0, 1], got ${value}`);
    }
    this.epsilonValue = value;
  }

  setResult(result: PipelineResult): void {
    this.result = result;
    this.status = "idle";
    this.errorMessage = null;
    // marks only exist for displayed tracks
    const shown = new Set(result.recommendations.map((r) => r.track_key));
    for (const key of [...this.marks.keys()]) {
      if (!shown.has(key)) this.marks.delete(key);
    }
  }

  setError(message: string): void {
    this.status = "error";
    this.errorMessage = message;
  }

  markOf(trackKey: string): FeedbackAction | undefined {
    return this.marks.get(trackKey);
  }

  /** Optimistically record a mark; returns the previous mark for rollback. */
  mark(trackKey: string, action: FeedbackAction): FeedbackAction | undefined {
    const shown = this.result?.recommendations.some((r) => r.track_key === trackKey);
    if (!shown) {
      throw new RangeError(`cannot mark undisplayed track: ${trackKey}`);
    }
    const previous = this.marks.get(trackKey);
    this.marks.set(trackKey, action);
    return previous;
  }

  rollback(trackKey: string, previous: FeedbackAction | undefined): void {
    if (previous === undefined) {
      this.marks.delete(trackKey);
    } else {
      this.marks.set(trackKey, previous);
    }
  }
}
