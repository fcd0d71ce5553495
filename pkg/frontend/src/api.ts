// Thin typed client for the analysis service. The fetch implementation
// is injectable so tests can script responses; every non-2xx response
// is turned into a ServiceError carrying the backend's machine code and
// failing stage.

import type {
  AnalysisDoc,
  BandsDoc,
  ErrorBody,
  RatioDoc,
  ReportDoc,
  SessionInfo,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  readonly code: string;
  readonly stage: string | null;
  readonly status: number;

  constructor(code: string, message: string, stage: string | null, status: number) {
    super(message);
    this.name = "ServiceError";
    this.code = code;
    this.stage = stage;
    this.status = status;
  }
}

async function errorFromResponse(resp: Response): Promise<ServiceError> {
  let code = `http_${resp.status}`;
  let message = resp.statusText || `request failed with status ${resp.status}`;
  let stage: string | null = null;
  try {
    const body = (await resp.json()) as Partial<ErrorBody>;
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      stage = body.error.stage ?? null;
    }
  } catch {
    // body was not the structured error document; keep the HTTP facts
  }
  return new ServiceError(code, message, stage, resp.status);
}

export class GelClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async requestRaw(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceError("network", `service unreachable: ${String(err)}`, null, 0);
    }
    if (!resp.ok) {
      throw await errorFromResponse(resp);
    }
    return resp;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.requestRaw(path, init);
    return (await resp.json()) as T;
  }

  private postJson<T>(path: string, body: unknown): Promise<T> {
    return this.requestJson<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(data: BodyInit, name = "upload"): Promise<SessionInfo> {
    const path = `/api/sessions?name=${encodeURIComponent(name)}`;
    return this.requestJson<SessionInfo>(path, { method: "POST", body: data });
  }

  analyze(sessionId: string, deltas: Record<string, unknown>): Promise<AnalysisDoc> {
    return this.postJson<AnalysisDoc>(`/api/sessions/${sessionId}/analyze`, deltas);
  }

  bands(sessionId: string): Promise<BandsDoc> {
    return this.requestJson<BandsDoc>(`/api/sessions/${sessionId}/bands`);
  }

  ratio(sessionId: string, ref: number, n: number): Promise<RatioDoc> {
    return this.postJson<RatioDoc>(`/api/sessions/${sessionId}/ratio`, { ref, n });
  }

  saveReport(sessionId: string, reference?: number): Promise<ReportDoc> {
    const body = reference === undefined ? {} : { reference };
    return this.postJson<ReportDoc>(`/api/sessions/${sessionId}/report`, body);
  }

  stageImageUrl(sessionId: string, stage: string, normalize = false): string {
    const flag = normalize ? 1 : 0;
    return `${this.baseUrl}/api/sessions/${sessionId}/image?stage=${stage}&normalize=${flag}`;
  }

  async stageImage(sessionId: string, stage: string, normalize = false): Promise<Blob> {
    const path = `/api/sessions/${sessionId}/image?stage=${stage}&normalize=${normalize ? 1 : 0}`;
    const resp = await this.requestRaw(path);
    return resp.blob();
  }
}
