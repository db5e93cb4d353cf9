// Typed client for the session API.  Every view change goes through these
// calls; the client never computes risk, it only transports server numbers.

import type {
  CreateSessionBody,
  Envelope,
  FinalizeResponse,
  Interpretation,
  Report,
  RoundPayload,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  body: unknown;

  constructor(status: number, body: unknown) {
    const detail =
      body && typeof body === "object" && "message" in (body as object)
        ? (body as { message: string }).message
        : JSON.stringify(body);
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.body = body;
  }

  /** Error code from the service, e.g. ROUND_INCOMPLETE or UNEXPECTED_CARD. */
  get code(): string | undefined {
    const b = this.body as { error?: string; detail?: { error?: string } } | null;
    return b?.error ?? b?.detail?.error;
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    readonly token?: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["X-Audit-Token"] = this.token;
    const res = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!res.ok) throw new ApiError(res.status, parsed);
    return parsed as T;
  }

  createSession(body: CreateSessionBody): Promise<Envelope> {
    return this.request("POST", "/sessions", body);
  }

  getSession(id: string): Promise<Envelope> {
    return this.request("GET", `/sessions/${id}`);
  }

  planRound(id: string): Promise<RoundPayload> {
    return this.request("POST", `/sessions/${id}/rounds`);
  }

  getRoundCards(id: string, round: number): Promise<RoundPayload> {
    return this.request("GET", `/sessions/${id}/rounds/${round}/cards`);
  }

  postInterpretation(
    id: string,
    round: number,
    interpretation: Interpretation,
  ): Promise<{ recorded: string; cards_recorded: number; cards_total: number }> {
    return this.request("POST", `/sessions/${id}/rounds/${round}/interpretations`, interpretation);
  }

  finalizeRound(id: string, round: number): Promise<FinalizeResponse> {
    return this.request("POST", `/sessions/${id}/rounds/${round}/finalize`);
  }

  getReport(id: string): Promise<Report> {
    return this.request("GET", `/sessions/${id}/report`);
  }
}
