// Thin typed client over the evaluation service HTTP API. Every method maps
// to one endpoint; non-2xx responses raise ApiError with the service detail.

import type {
  AggregateRow,
  EvaluationStatus,
  LedgerEntry,
  RevisionInfo,
  SubmissionAck,
  SubmissionPayload,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class PortalClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // bind so a bare globalThis.fetch keeps its receiver
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body && (body as { detail?: unknown }).detail);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  async revisions(): Promise<RevisionInfo[]> {
    const body = await this.request<{ revisions: RevisionInfo[] }>("/revisions");
    return body.revisions;
  }

  async results(revision?: string): Promise<LedgerEntry[]> {
    const query = revision ? `?revision=${encodeURIComponent(revision)}` : "";
    const body = await this.request<{ results: LedgerEntry[] }>(`/results${query}`);
    return body.results;
  }

  async aggregate(n?: number): Promise<{ aggregates: AggregateRow[]; n_recent: number }> {
    const query = n !== undefined ? `?n=${n}` : "";
    return this.request(`/results/aggregate${query}`);
  }

  submissionStatus(resultId: string): Promise<EvaluationStatus> {
    return this.request(`/submissions/${encodeURIComponent(resultId)}`);
  }

  submit(payload: SubmissionPayload): Promise<SubmissionAck> {
    return this.request("/submissions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async pending(token: string): Promise<EvaluationStatus[]> {
    const body = await this.request<{ pending: EvaluationStatus[] }>("/admin/pending", {
      headers: { authorization: `Bearer ${token}` },
    });
    return body.pending;
  }

  decide(token: string, resultId: string, decision: "approve" | "reject"): Promise<EvaluationStatus> {
    return this.request("/admin/decide", {
      method: "POST",
      headers: {
        authorization: `Bearer ${token}`,
        "content-type": "application/json",
      },
      body: JSON.stringify({ result_id: resultId, decision }),
    });
  }
}
