// Public leaderboard: published results for one revision, or the service
// computed "Actual Versions" aggregate. The view formats what the service
// returns and never recomputes a metric value itself.

import { PortalClient } from "./api";
import { escapeHtml, fmt2, fmtTimestamp, fullPrecision } from "./format";
import { nextSortState, sortRows, type SortState } from "./sort";
import {
  METRIC_COLUMNS,
  compareVersions,
  metricValue,
  type AggregateRow,
  type LedgerEntry,
  type MetricFamilies,
  type MetricKey,
  type RevisionInfo,
} from "./types";

/** One table row, from either a ledger entry or an aggregate row. */
interface DisplayRow {
  resultId: string | null; // ledger id; aggregates point at several entries
  system: string;
  retriever: string;
  generator: string;
  revisionLabel: string;
  revisionTitle: string;
  metrics: MetricFamilies;
  approvedAt: string | null;
}

const NAME_COLUMNS: { key: string; label: string; value: (row: DisplayRow) => string }[] = [
  { key: "system", label: "System", value: (r) => r.system },
  { key: "retriever", label: "Retriever", value: (r) => r.retriever },
  { key: "generator", label: "Generator", value: (r) => r.generator },
];

function entryRow(entry: LedgerEntry): DisplayRow {
  return {
    resultId: entry.result_id,
    system: entry.system_name,
    retriever: entry.retriever_name,
    generator: entry.generator_name,
    revisionLabel: entry.revision,
    revisionTitle: `ledger entry ${entry.result_id}`,
    metrics: entry.metrics,
    approvedAt: entry.approved_at,
  };
}

function aggregateRow(row: AggregateRow): DisplayRow {
  return {
    resultId: null,
    system: row.system_name,
    retriever: row.retriever_name,
    generator: row.generator_name,
    revisionLabel: `${row.n_revisions} rev`,
    revisionTitle: `mean over ${row.revisions.join(", ")}`,
    metrics: row,
    approvedAt: null,
  };
}

export class LeaderboardView {
  private revisions: RevisionInfo[] = [];
  private revision: string | null = null;
  private aggregateMode = false;
  private entries: LedgerEntry[] = [];
  private aggregates: AggregateRow[] = [];
  private sort: SortState | null = null;
  private stale = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: PortalClient,
  ) {}

  /** Load the revision list, select the newest public revision, then fetch. */
  async init(): Promise<void> {
    try {
      const all = await this.client.revisions();
      this.revisions = all
        .filter((r) => !r.sandbox)
        .sort((a, b) => compareVersions(b.version, a.version));
      this.revision = this.revisions[0]?.version ?? null;
    } catch {
      this.stale = true;
    }
    await this.refresh();
  }

  /** Re-query the service for the current mode. A failed fetch keeps the
   * last good rows on screen behind a staleness banner. */
  async refresh(): Promise<void> {
    try {
      if (this.aggregateMode) {
        this.aggregates = (await this.client.aggregate()).aggregates;
      } else {
        this.entries = await this.client.results(this.revision ?? undefined);
      }
      this.stale = false;
    } catch {
      this.stale = true;
    }
    this.render();
  }

  async setAggregateMode(on: boolean): Promise<void> {
    this.aggregateMode = on;
    await this.refresh();
  }

  async setRevision(version: string): Promise<void> {
    this.revision = version;
    await this.refresh();
  }

  sortBy(column: string): void {
    this.sort = nextSortState(this.sort, column);
    this.render();
  }

  private rows(): DisplayRow[] {
    const base = this.aggregateMode
      ? this.aggregates.map(aggregateRow)
      : this.entries.map(entryRow);
    if (!this.sort) return base;
    const { column, direction } = this.sort;
    const named = NAME_COLUMNS.find((c) => c.key === column);
    if (named) return sortRows(base, named.value, direction);
    return sortRows(base, (row) => metricValue(row.metrics, column as MetricKey), direction);
  }

  render(): void {
    const options = this.revisions
      .map((r) => {
        const selected = r.version === this.revision ? " selected" : "";
        return `<option value="${escapeHtml(r.version)}"${selected}>${escapeHtml(r.version)}</option>`;
      })
      .join("");
    const headers = [...NAME_COLUMNS, ...METRIC_COLUMNS.map((c) => ({ key: c.key as string, label: c.label }))]
      .map((c) => {
        const marker =
          this.sort?.column === c.key ? (this.sort.direction === "desc" ? " ▼" : " ▲") : "";
        return `<th data-column="${c.key}">${escapeHtml(c.label)}${marker}</th>`;
      })
      .join("");
    const body = this.rows()
      .map((row) => {
        const cells = [
          `<td>${escapeHtml(row.system)}</td>`,
          `<td>${escapeHtml(row.retriever)}</td>`,
          `<td>${escapeHtml(row.generator)}</td>`,
          `<td class="revision" title="${escapeHtml(row.revisionTitle)}">${escapeHtml(row.revisionLabel)}</td>`,
        ];
        for (const column of METRIC_COLUMNS) {
          const value = metricValue(row.metrics, column.key);
          cells.push(
            `<td class="metric metric-${column.key}" title="${escapeHtml(fullPrecision(value))}">${fmt2(value)}</td>`,
          );
        }
        cells.push(`<td class="approved">${escapeHtml(fmtTimestamp(row.approvedAt))}</td>`);
        const idAttr = row.resultId === null ? "" : ` data-result-id="${escapeHtml(row.resultId)}"`;
        return `<tr${idAttr}>${cells.join("")}</tr>`;
      })
      .join("");
    const banner = this.stale
      ? `<div class="staleness-banner">Service unreachable, showing the last loaded results.</div>`
      : "";
    const modeChecked = this.aggregateMode ? " checked" : "";
    const selectDisabled = this.aggregateMode ? " disabled" : "";
    this.root.innerHTML = `
      <section class="leaderboard-view">
        <div class="controls">
          <label>Revision
            <select class="revision-select"${selectDisabled}>${options}</select>
          </label>
          <label class="toggle">
            <input type="checkbox" class="actual-versions"${modeChecked}>
            Actual Versions
          </label>
          <button type="button" class="refresh">Refresh</button>
        </div>
        ${banner}
        <table class="leaderboard">
          <thead><tr>${headers}<th>Approved</th></tr></thead>
          <tbody>${body || `<tr class="empty"><td colspan="10">No published results.</td></tr>`}</tbody>
        </table>
      </section>`;
    this.bind();
  }

  private bind(): void {
    this.root.querySelector<HTMLSelectElement>(".revision-select")?.addEventListener("change", (event) => {
      void this.setRevision((event.target as HTMLSelectElement).value);
    });
    this.root.querySelector<HTMLInputElement>(".actual-versions")?.addEventListener("change", (event) => {
      void this.setAggregateMode((event.target as HTMLInputElement).checked);
    });
    this.root.querySelector<HTMLButtonElement>(".refresh")?.addEventListener("click", () => {
      void this.refresh();
    });
    for (const th of this.root.querySelectorAll<HTMLTableCellElement>("th[data-column]")) {
      th.addEventListener("click", () => this.sortBy(th.dataset.column ?? ""));
    }
  }
}
