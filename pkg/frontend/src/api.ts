// Thin typed client over the upgaudit HTTP API. Works in the browser (base
// "") and under node (absolute base URL) since both provide fetch.

import type {
  JudgmentRequest,
  JudgmentResponse,
  ModelJson,
  ObligationJson,
  SubgraphJson,
  UpgJson,
  VerdictJson,
  VerdictMode,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new ApiError(resp.status, `GET ${url} failed: ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  model(): Promise<ModelJson> {
    return getJson(`${this.base}/api/model`);
  }

  upg(): Promise<UpgJson> {
    return getJson(`${this.base}/api/upg`);
  }

  subgraphs(): Promise<SubgraphJson[]> {
    return getJson(`${this.base}/api/subgraphs`);
  }

  obligations(): Promise<ObligationJson[]> {
    return getJson(`${this.base}/api/obligations`);
  }

  verdict(mode: VerdictMode): Promise<VerdictJson> {
    return getJson(`${this.base}/api/verdict?mode=${mode}`);
  }

  async submitJudgment(req: JudgmentRequest): Promise<JudgmentResponse> {
    const resp = await fetch(`${this.base}/api/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    const body = (await resp.json()) as JudgmentResponse & { error?: string };
    if (resp.status !== 201) {
      throw new ApiError(resp.status, body.error ?? `POST failed: ${resp.status}`);
    }
    return body;
  }
}
