/** Thin client for the portal. Network failures reject; HTTP errors resolve
 * into the shared error envelope so the UI can render offsets inline. */

import { ErrorBody, QueryOutcome, SurveysDoc } from "./types.js";

export class PortalClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async fedquery(q: string, signal?: AbortSignal): Promise<QueryOutcome> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/fedquery`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ q }),
      signal,
    });
    if (resp.ok) {
      return { kind: "table", table: await resp.json() };
    }
    let error: ErrorBody;
    try {
      error = (await resp.json()).error;
    } catch {
      error = { code: "http_error", message: `HTTP ${resp.status}` };
    }
    return { kind: "error", status: resp.status, error };
  }

  async surveys(signal?: AbortSignal): Promise<SurveysDoc> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/surveys`, { signal });
    if (!resp.ok) {
      throw new Error(`surveys endpoint failed: HTTP ${resp.status}`);
    }
    return resp.json();
  }
}
