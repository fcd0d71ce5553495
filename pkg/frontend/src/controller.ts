// Orchestrates the view-state machine against the service client.
// Holds the single mutable state reference; the DOM layer subscribes to
// changes and renders. All service traffic for one session funnels
// through here, so interaction tests can drive the whole flow with a
// scripted fetch implementation and no browser.

import { GelClient, ServiceError } from "./api.js";
import {
  analysisArrived,
  beginAnalysis,
  clickAt,
  enhanceDeltas,
  failureArrived,
  initialState,
  ratioArrived,
  ratioRequest,
  sessionLoaded,
  setStage,
  type Point,
  type StageName,
  type ViewState,
} from "./state.js";

export type StateListener = (state: ViewState) => void;

export class Controller {
  state: ViewState;
  private readonly client: GelClient;
  private readonly listeners: StateListener[] = [];

  constructor(client: GelClient) {
    this.client = client;
    this.state = initialState();
  }

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private commit(state: ViewState): void {
    this.state = state;
    for (const listener of this.listeners) {
      listener(state);
    }
  }

  private fail(err: unknown): void {
    if (err instanceof ServiceError) {
      this.commit(failureArrived(this.state, err));
      return;
    }
    this.commit(
      failureArrived(this.state, {
        code: "client",
        message: String(err),
        stage: null,
      }),
    );
  }

  /** Upload an image, open its session, and run the first analysis. */
  async openImage(data: BodyInit, name: string): Promise<void> {
    try {
      const info = await this.client.createSession(data, name);
      this.commit(sessionLoaded(this.state, info));
      await this.applyDeltas({});
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-analyze the session with config deltas merged in server-side. */
  async applyDeltas(deltas: Record<string, unknown>): Promise<void> {
    const id = this.state.sessionId;
    if (id === null || this.state.busy) {
      return;
    }
    this.commit(beginAnalysis(this.state));
    try {
      const doc = await this.client.analyze(id, deltas);
      this.commit(analysisArrived(this.state, doc));
      await this.refreshRatio();
    } catch (err) {
      this.fail(err);
    }
  }

  async toggleEnhance(): Promise<void> {
    await this.applyDeltas(enhanceDeltas(this.state));
  }

  /** Handle a click at image coordinates: select, deselect, or ignore. */
  async click(point: Point): Promise<void> {
    const next = clickAt(this.state, point);
    if (next === this.state) {
      return;
    }
    this.commit(next);
    await this.refreshRatio();
  }

  private async refreshRatio(): Promise<void> {
    const id = this.state.sessionId;
    const wanted = ratioRequest(this.state);
    if (id === null || wanted === null) {
      return;
    }
    try {
      const doc = await this.client.ratio(id, wanted.ref, wanted.n);
      this.commit(ratioArrived(this.state, doc));
    } catch (err) {
      this.fail(err);
    }
  }

  selectStage(stage: StageName): void {
    const next = setStage(this.state, stage);
    if (next !== this.state) {
      this.commit(next);
    }
  }
}
