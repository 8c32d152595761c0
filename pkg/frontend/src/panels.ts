import { parsePipelineResult, SchemaMismatchError, type PipelineResult } from "./schema.js";
import type { SessionViewState } from "./state.js";

export interface PanelCallbacks {
  onFeedback?: (trackKey: string, action: "listened" | "skipped") => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Render the four phase panels into `root`, replacing any previous content.
 * A payload that fails schema validation produces a single error banner and
 * no partial render. All displayed numbers come verbatim from the payload.
 */
export function renderPhasePanels(
  root: HTMLElement,
  payload: unknown,
  state?: SessionViewState,
  callbacks: PanelCallbacks = {},
): PipelineResult | null {
  const doc = root.ownerDocument;
  let result: PipelineResult;
  try {
    result = parsePipelineResult(payload);
  } catch (error) {
    const detail = error instanceof SchemaMismatchError ? error.message : String(error);
    root.replaceChildren(el(doc, "div", "error-banner", detail));
    return null;
  }
  root.replaceChildren(
    renderTagPanel(doc, result),
    renderPredictionPanel(doc, result),
    renderRankingPanel(doc, result, state, callbacks),
    renderScorePanel(doc, result),
  );
  return result;
}

function panel(doc: Document, phase: number, title: string, explanation: string): HTMLElement {
  const section = el(doc, "section", "phase-panel");
  section.dataset.phase = String(phase);
  section.append(
    el(doc, "h2", undefined, `Phase ${phase}: ${title}`),
    el(doc, "p", "explanation", explanation),
  );
  return section;
}

function renderTagPanel(doc: Document, result: PipelineResult): HTMLElement {
  const section = panel(doc, 1, "Hour tag profile", result.explanations.phase1);
  if (result.fallback) {
    section.append(
      el(doc, "span", "fallback-badge", "no history at this hour — global mean profile"),
    );
  }
  const table = el(doc, "table", "tag-table");
  const head = el(doc, "tr");
  head.append(el(doc, "th", undefined, "tag"), el(doc, "th", undefined, "strength"));
  table.append(head);
  for (const { tag, strength } of result.top_tags) {
    const row = el(doc, "tr");
    row.append(el(doc, "td", undefined, tag), el(doc, "td", undefined, String(strength)));
    table.append(row);
  }
  section.append(table);
  return section;
}

function renderPredictionPanel(doc: Document, result: PipelineResult): HTMLElement {
  const section = panel(doc, 2, "Predicted features", result.explanations.phase2);
  const list = el(doc, "dl", "prediction-list");
  for (const [feature, value] of Object.entries(result.predicted_features)) {
    list.append(el(doc, "dt", undefined, feature), el(doc, "dd", undefined, String(value)));
  }
  section.append(list);
  return section;
}

function renderRankingPanel(
  doc: Document,
  result: PipelineResult,
  state?: SessionViewState,
  callbacks: PanelCallbacks = {},
): HTMLElement {
  const section = panel(doc, 3, "Ranked tracks", result.explanations.phase3);
  if (result.recommendations.length === 0) {
    section.append(el(doc, "p", "empty-state", "No tracks to recommend for this hour."));
    return section;
  }
  const list = el(doc, "ol", "track-list");
  for (const rec of result.recommendations) {
    const item = el(doc, "li", "track-row");
    item.dataset.trackKey = rec.track_key;
    item.append(
      el(doc, "span", "track-name", `${rec.artist_name} — ${rec.track_name}`),
      el(doc, "span", "track-feature", String(rec.feature_value)),
      el(doc, "span", "track-distance", `distance: ${rec.distance}`),
    );
    const mark = state?.markOf(rec.track_key);
    if (mark) item.append(el(doc, "span", `feedback-mark mark-${mark}`, mark));
    for (const action of ["listened", "skipped"] as const) {
      const button = el(doc, "button", `feedback-${action}`, action);
      button.addEventListener("click", () => callbacks.onFeedback?.(rec.track_key, action));
      item.append(button);
    }
    list.append(item);
  }
  section.append(list);
  return section;
}

function renderScorePanel(doc: Document, result: PipelineResult): HTMLElement {
  const section = panel(doc, 4, "Exploration scores", result.explanations.phase4);
  const table = el(doc, "table", "score-table");
  const head = el(doc, "tr");
  for (const column of ["rank", "track", "novelty", "score"]) {
    head.append(el(doc, "th", undefined, column));
  }
  table.append(head);
  for (const rec of result.recommendations) {
    const row = el(doc, "tr");
    row.append(
      el(doc, "td", undefined, String(rec.rank)),
      el(doc, "td", undefined, rec.track_key),
      el(doc, "td", undefined, String(rec.novelty)),
      el(doc, "td", undefined, String(rec.score)),
    );
    table.append(row);
  }
  section.append(table);
  return section;
}
