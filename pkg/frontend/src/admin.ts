// Admin approval queue. Token-gated: without a working token only the
// login form renders. Decisions go straight to the service; a conflict on
// an already-decided record is surfaced, never retried.

import { ApiError, PortalClient } from "./api";
import { escapeHtml, fmt2, fmtTimestamp, fullPrecision } from "./format";
import { METRIC_COLUMNS, metricValue, type EvaluationStatus } from "./types";

export class AdminQueue {
  private token: string | null = null;
  private records: EvaluationStatus[] = [];
  private message = "";
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: PortalClient,
  ) {}

  async init(): Promise<void> {
    this.render();
  }

  /** Try a token; on 401/403 stay logged out with the service's message. */
  async connect(token: string): Promise<void> {
    this.token = token;
    this.message = "";
    await this.refresh();
  }

  /** Re-fetch the queue. Decision feedback survives the refresh that
   * follows it; a manual refresh starts with a clean message line. */
  async refresh(keepMessage = false): Promise<void> {
    if (this.token === null) {
      this.render();
      return;
    }
    try {
      this.records = await this.client.pending(this.token);
      if (!keepMessage) this.message = "";
    } catch (error) {
      if (error instanceof ApiError && (error.status === 401 || error.status === 403)) {
        this.token = null;
        this.records = [];
        this.message = typeof error.detail === "string" ? error.detail : "not authorized";
      } else {
        this.message = "service unreachable";
      }
    }
    this.render();
  }

  async decide(resultId: string, decision: "approve" | "reject"): Promise<void> {
    if (this.token === null || this.busy) return;
    this.busy = true;
    this.render(); // disables the buttons while the request is in flight
    try {
      await this.client.decide(this.token, resultId, decision);
      this.message = `${decision}d ${resultId}`;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.message = typeof error.detail === "string" ? error.detail : "result already decided";
      } else if (error instanceof ApiError && error.status === 401) {
        this.token = null;
        this.message = "admin token required";
      } else {
        this.message = "decision failed, queue refreshed";
      }
    } finally {
      this.busy = false;
    }
    await this.refresh(true);
  }

  render(): void {
    if (this.token === null) {
      this.root.innerHTML = `
        <section class="admin-login">
          <h2>Admin</h2>
          ${this.message ? `<div class="admin-message">${escapeHtml(this.message)}</div>` : ""}
          <form class="token-form">
            <label>Admin token <input type="password" class="token-input"></label>
            <button type="submit" class="token-submit">Open queue</button>
          </form>
        </section>`;
      this.root.querySelector<HTMLFormElement>(".token-form")?.addEventListener("submit", (event) => {
        event.preventDefault();
        const input = this.root.querySelector<HTMLInputElement>(".token-input");
        void this.connect(input?.value ?? "");
      });
      return;
    }

    const metricHeaders = METRIC_COLUMNS.map((c) => `<th>${escapeHtml(c.label)}</th>`).join("");
    const rows = this.records
      .map((record) => {
        const metrics = METRIC_COLUMNS.map((column) => {
          const value = metricValue(record.metrics, column.key);
          return `<td class="metric metric-${column.key}" title="${escapeHtml(fullPrecision(value))}">${fmt2(value)}</td>`;
        }).join("");
        const disabled = this.busy ? " disabled" : "";
        return `<tr data-result-id="${escapeHtml(record.result_id)}">
          <td>${escapeHtml(record.system_name)}</td>
          <td>${escapeHtml(record.retriever_name)}</td>
          <td>${escapeHtml(record.generator_name)}</td>
          <td>${escapeHtml(record.revision)}</td>
          ${metrics}
          <td>${escapeHtml(fmtTimestamp(record.submitted_at))}</td>
          <td class="actions">
            <button type="button" class="approve"${disabled}>Approve</button>
            <button type="button" class="reject"${disabled}>Reject</button>
          </td>
        </tr>`;
      })
      .join("");
    this.root.innerHTML = `
      <section class="admin-queue">
        <h2>Pending evaluations</h2>
        ${this.message ? `<div class="admin-message">${escapeHtml(this.message)}</div>` : ""}
        <button type="button" class="refresh">Refresh queue</button>
        <table class="pending">
          <thead><tr>
            <th>System</th><th>Retriever</th><th>Generator</th><th>Revision</th>
            ${metricHeaders}<th>Submitted</th><th></th>
          </tr></thead>
          <tbody>${rows || `<tr class="empty"><td colspan="12">Queue is empty.</td></tr>`}</tbody>
        </table>
      </section>`;
    this.bind();
  }

  private bind(): void {
    this.root.querySelector<HTMLButtonElement>(".refresh")?.addEventListener("click", () => {
      void this.refresh();
    });
    for (const row of this.root.querySelectorAll<HTMLTableRowElement>("tr[data-result-id]")) {
      const id = row.dataset.resultId ?? "";
      row.querySelector<HTMLButtonElement>("button.approve")?.addEventListener("click", () => {
        void this.decide(id, "approve");
      });
      row.querySelector<HTMLButtonElement>("button.reject")?.addEventListener("click", () => {
        void this.decide(id, "reject");
      });
    }
  }
}
