import type {
  HistoryResponse,
  ModelInfo,
  RiskEstimate,
  Scenario,
  Visit,
  VisitAck,
  WhatifResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client over the what-if service. All risk numbers shown anywhere in
 * the UI come out of these calls; nothing is computed locally.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const data = await resp.json();
        if (data && typeof data.detail === "string") detail = data.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listModels(): Promise<ModelInfo[]> {
    return this.request("GET", "/models");
  }

  predict(model: string, visit: Visit, scenario?: Scenario): Promise<RiskEstimate> {
    return this.request("POST", "/predict", { model, visit, scenario });
  }

  whatif(model: string, visit: Visit, scenarios: Scenario[]): Promise<WhatifResponse> {
    return this.request("POST", "/whatif", { model, visit, scenarios });
  }

  knockOn(model: string, scenario: Scenario): Promise<Record<string, number>> {
    return this.request("POST", "/knock-on", { model, scenario });
  }

  recordVisit(visit: Visit, opts?: { reAnchor?: boolean; force?: boolean }): Promise<VisitAck> {
    return this.request("POST", "/visits", {
      ...visit,
      re_anchor: opts?.reAnchor ?? false,
      force: opts?.force ?? false,
    });
  }

  history(patientId: string, model?: string): Promise<HistoryResponse> {
    const query = model ? `?model=${encodeURIComponent(model)}` : "";
    return this.request("GET", `/patients/${encodeURIComponent(patientId)}/history${query}`);
  }
}
