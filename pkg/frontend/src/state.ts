// Pure view-state machine for the band inspector. Every transition
// returns a new state; the DOM layer only renders states and forwards
// events, so the whole interaction flow is testable without a browser.
//
// Selection rules: the first band click sets the reference, the second
// sets the target; clicking an already selected band deselects it, and
// with both slots taken a further click replaces the target. Background
// clicks change nothing. A ratio is displayed only while both slots are
// set, and always comes from the service, never from local arithmetic.

import type {
  AnalysisDoc,
  BandDoc,
  ConfigDoc,
  DecisionDoc,
  RatioDoc,
  SessionInfo,
} from "./types.js";

export const STAGES = ["input", "enhanced", "thresholded", "shifted", "filtered"] as const;
export type StageName = (typeof STAGES)[number];

/** Bounding boxes count as clickable this many pixels beyond their edge. */
export const HIT_MARGIN = 2;

export interface Point {
  x: number;
  y: number;
}

export interface Selection {
  reference: number | null;
  target: number | null;
}

export interface ViewState {
  sessionId: string | null;
  imageSize: { width: number; height: number } | null;
  stage: StageName;
  bands: BandDoc[];
  decision: DecisionDoc | null;
  config: ConfigDoc | null;
  selection: Selection;
  ratio: RatioDoc | null;
  /** An analyze request is in flight; the config panel stays disabled. */
  busy: boolean;
  /** Non-modal status line; null when there is nothing to say. */
  notice: string | null;
  /** The last failure asked for a manual alpha; highlight that control. */
  highlightOverride: boolean;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    imageSize: null,
    stage: "input",
    bands: [],
    decision: null,
    config: null,
    selection: { reference: null, target: null },
    ratio: null,
    busy: false,
    notice: null,
    highlightOverride: false,
  };
}

/** Stage snapshots the service can serve under the given config. */
export function availableStages(config: ConfigDoc | null): StageName[] {
  if (config && config.enhance) {
    return ["input", "enhanced", "thresholded", "shifted", "filtered"];
  }
  return ["input", "thresholded", "shifted", "filtered"];
}

function boxArea(band: BandDoc): number {
  const [x0, y0, x1, y1] = band.bbox;
  return (x1 - x0 + 1) * (y1 - y0 + 1);
}

/**
 * The band under a click point, in image coordinates. Boxes are
 * expanded by HIT_MARGIN for clickability; where expanded boxes
 * overlap, the smallest one wins so tight bands stay selectable.
 */
export function bandAt(bands: BandDoc[], point: Point): BandDoc | null {
  let best: BandDoc | null = null;
  for (const band of bands) {
    const [x0, y0, x1, y1] = band.bbox;
    const inside =
      point.x >= x0 - HIT_MARGIN &&
      point.x <= x1 + HIT_MARGIN &&
      point.y >= y0 - HIT_MARGIN &&
      point.y <= y1 + HIT_MARGIN;
    if (inside && (best === null || boxArea(band) < boxArea(best))) {
      best = band;
    }
  }
  return best;
}

export function sessionLoaded(state: ViewState, info: SessionInfo): ViewState {
  return {
    ...initialState(),
    sessionId: info.id,
    imageSize: { width: info.width, height: info.height },
    config: info.config,
  };
}

function sameGeometry(a: BandDoc, b: BandDoc): boolean {
  return (
    a.bbox.length === b.bbox.length &&
    a.bbox.every((v, i) => v === b.bbox[i]) &&
    a.centroid[0] === b.centroid[0] &&
    a.centroid[1] === b.centroid[1]
  );
}

function survives(label: number | null, before: BandDoc[], after: BandDoc[]): number | null {
  if (label === null) {
    return null;
  }
  const old = before.find((b) => b.label === label);
  const now = after.find((b) => b.label === label);
  if (old && now && sameGeometry(old, now)) {
    return label;
  }
  return null;
}

/**
 * Fold a fresh analysis document into the state. Selected bands survive
 * only when the same label still names the same geometry; otherwise the
 * selection is cleared and the user told why. The displayed ratio is
 * always dropped (band measurements may have changed) and refetched by
 * the caller when a full selection survived.
 */
export function analysisArrived(state: ViewState, doc: AnalysisDoc): ViewState {
  const reference = survives(state.selection.reference, state.bands, doc.bands);
  const target = survives(state.selection.target, state.bands, doc.bands);
  const hadSelection =
    state.selection.reference !== null || state.selection.target !== null;
  const lost =
    reference !== state.selection.reference || target !== state.selection.target;
  const stages = availableStages(doc.config);
  return {
    ...state,
    bands: doc.bands,
    decision: doc.decision,
    config: doc.config,
    stage: stages.includes(state.stage) ? state.stage : "input",
    selection: { reference, target },
    ratio: null,
    busy: false,
    notice: hadSelection && lost ? "Band list changed; selection cleared." : null,
    highlightOverride: false,
  };
}

function withSelection(state: ViewState, selection: Selection): ViewState {
  return { ...state, selection, ratio: null, notice: null };
}

export function clickBand(state: ViewState, label: number): ViewState {
  const { reference, target } = state.selection;
  if (label === reference) {
    return withSelection(state, { reference: null, target });
  }
  if (label === target) {
    return withSelection(state, { reference, target: null });
  }
  if (reference === null) {
    return withSelection(state, { reference: label, target });
  }
  return withSelection(state, { reference, target: label });
}

/** Apply a click in image coordinates; background clicks are no-ops. */
export function clickAt(state: ViewState, point: Point): ViewState {
  const band = bandAt(state.bands, point);
  if (band === null) {
    return state;
  }
  return clickBand(state, band.label);
}

/** The ratio call implied by the current selection, if it is complete. */
export function ratioRequest(state: ViewState): { ref: number; n: number } | null {
  const { reference, target } = state.selection;
  if (reference === null || target === null) {
    return null;
  }
  return { ref: reference, n: target };
}

/** Accept a ratio response only if it still matches the selection. */
export function ratioArrived(state: ViewState, doc: RatioDoc): ViewState {
  const wanted = ratioRequest(state);
  if (wanted === null || wanted.ref !== doc.ref || wanted.n !== doc.n) {
    return state;
  }
  return { ...state, ratio: doc };
}

export function beginAnalysis(state: ViewState): ViewState {
  return { ...state, busy: true, notice: null };
}

export interface ServiceFailure {
  code: string;
  message: string;
  stage: string | null;
}

/** Surface a service failure on the status line, non-modally. */
export function failureArrived(state: ViewState, failure: ServiceFailure): ViewState {
  const where = failure.stage ? ` [stage: ${failure.stage}]` : "";
  return {
    ...state,
    busy: false,
    notice: `${failure.message}${where}`,
    highlightOverride: failure.code === "no_peaks",
  };
}

export function setStage(state: ViewState, stage: StageName): ViewState {
  if (!availableStages(state.config).includes(stage)) {
    return state;
  }
  return { ...state, stage };
}

/** Config deltas that flip the enhancement pass on the next analysis. */
export function enhanceDeltas(state: ViewState): { enhance: boolean } {
  return { enhance: !(state.config && state.config.enhance) };
}
