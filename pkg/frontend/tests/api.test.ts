// GelClient tests against canned service responses. The response bodies
// are verbatim captures from a live service run, so these exercise the
// exact JSON shapes the backend emits.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { GelClient, ServiceError, type FetchLike } from "../src/api.js";
import type { AnalysisDoc, RatioDoc, SessionInfo } from "../src/types.js";

function fixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");
}

interface Call {
  url: string;
  init?: RequestInit;
}

function scripted(
  responder: (url: string, init?: RequestInit) => Response,
): { fetchFn: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetchFn: FetchLike = (url, init) => {
    calls.push({ url, init });
    return Promise.resolve(responder(url, init));
  };
  return { fetchFn, calls };
}

function jsonResponse(text: string, status = 200): Response {
  return new Response(text, {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("GelClient request shaping", () => {
  it("uploads the raw body and encodes the session name", () => {
    const { fetchFn, calls } = scripted(() => jsonResponse(fixture("session.json")));
    const client = new GelClient("http://gel.test", fetchFn);
    return client.createSession(new Uint8Array([1, 2, 3]), "my gel.png").then((info) => {
      expect(calls).toHaveLength(1);
      expect(calls[0].url).toBe("http://gel.test/api/sessions?name=my%20gel.png");
      expect(calls[0].init?.method).toBe("POST");
      const session: SessionInfo = info;
      expect(session.id).toBe("fixture-session");
      expect(session.width).toBe(512);
      expect(session.height).toBe(512);
      expect(session.config.enhance).toBe(false);
    });
  });

  it("strips a trailing slash from the base url", async () => {
    const { fetchFn, calls } = scripted(() => jsonResponse(fixture("faint_baseline.json")));
    const client = new GelClient("http://gel.test/", fetchFn);
    await client.analyze("abc", {});
    expect(calls[0].url).toBe("http://gel.test/api/sessions/abc/analyze");
  });

  it("posts config deltas as json", async () => {
    const { fetchFn, calls } = scripted(() => jsonResponse(fixture("faint_enhanced.json")));
    const client = new GelClient("", fetchFn);
    await client.analyze("abc", { enhance: true });
    expect(calls[0].init?.headers).toEqual({ "content-type": "application/json" });
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ enhance: true });
  });

  it("builds stage image urls with the normalize flag", () => {
    const client = new GelClient("http://gel.test");
    expect(client.stageImageUrl("s9", "filtered")).toBe(
      "http://gel.test/api/sessions/s9/image?stage=filtered&normalize=0",
    );
    expect(client.stageImageUrl("s9", "input", true)).toBe(
      "http://gel.test/api/sessions/s9/image?stage=input&normalize=1",
    );
  });
});

describe("GelClient response parsing", () => {
  it("parses a full analysis document", async () => {
    const { fetchFn } = scripted(() => jsonResponse(fixture("faint_baseline.json")));
    const doc: AnalysisDoc = await new GelClient("", fetchFn).analyze("s", {});
    expect(doc.bands).toHaveLength(9);
    expect(doc.bands.map((b) => b.label)).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9]);
    expect(doc.bands[0].bbox).toEqual([252, 64, 258, 70]);
    expect(doc.bands[0].centroid[0]).toBeCloseTo(255.043, 3);
    expect(doc.decision.alpha).toBe(0.5);
    expect(doc.decision.th_level).toBe(127.5);
    expect(doc.decision.source).toBe("automatic");
    expect(doc.config.enhance).toBe(false);
  });

  it("parses a ratio document", async () => {
    const { fetchFn, calls } = scripted(() => jsonResponse(fixture("ratio.json")));
    const doc: RatioDoc = await new GelClient("", fetchFn).ratio("s", 1, 2);
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ ref: 1, n: 2 });
    expect(doc.ref).toBe(1);
    expect(doc.n).toBe(2);
    expect(doc.ratio).toBeCloseTo(74 / 111, 12);
  });

  it("sends an empty report request when no reference is chosen", async () => {
    const { fetchFn, calls } = scripted(() =>
      jsonResponse(JSON.stringify({ dir: "/tmp/x", path: "/tmp/x/report.json" })),
    );
    await new GelClient("", fetchFn).saveReport("s");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({});
  });
});

describe("GelClient error handling", () => {
  it("raises a ServiceError carrying the backend code and stage", async () => {
    const { fetchFn } = scripted(() => jsonResponse(fixture("no_peaks_error.json"), 422));
    const client = new GelClient("", fetchFn);
    const err = await client.analyze("s", { prominence_frac: 5.0 }).catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("no_peaks");
    expect(err.stage).toBe("thresholded");
    expect(err.status).toBe(422);
    expect(err.message).toContain("alpha override");
  });

  it("falls back to the http status for unstructured error bodies", async () => {
    const { fetchFn } = scripted(() => new Response("gateway exploded", { status: 502 }));
    const err = await new GelClient("", fetchFn).bands("s").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("http_502");
    expect(err.stage).toBeNull();
  });

  it("maps a failed fetch to a network-coded error", async () => {
    const fetchFn: FetchLike = () => Promise.reject(new TypeError("fetch failed"));
    const err = await new GelClient("", fetchFn).bands("s").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("network");
    expect(err.status).toBe(0);
  });
});
