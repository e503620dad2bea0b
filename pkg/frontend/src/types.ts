// Wire types for the evaluation service. These mirror the service's JSON
// shapes exactly; the UI displays them and never recomputes metric values.

export interface RetrievalMetrics {
  hit_rate: number | null;
  recall: number | null;
  ndcg: number | null;
}

export interface GenerationMetrics {
  rouge_l: number | null;
  substring_match: number | null;
  judge_score: number | null;
}

export interface MetricFamilies {
  retrieval: RetrievalMetrics;
  generation: GenerationMetrics;
}

/** Full result payload of one evaluation: grouped overall metrics plus
 * the per-question-type breakdown and judge coverage notes. */
export interface GroupedMetrics extends MetricFamilies {
  per_type: Record<string, MetricFamilies>;
  skipped: Record<string, number>;
  judge_note: string | null;
}

/** One published (approved) evaluation from the results ledger. */
export interface LedgerEntry {
  result_id: string;
  system_name: string;
  retriever_name: string;
  generator_name: string;
  revision: string;
  metrics: GroupedMetrics;
  approved_at: string;
  auto: boolean;
}

/** A scored submission in the admin queue (or its status view). */
export interface EvaluationStatus {
  result_id: string;
  status: "pending" | "approved" | "rejected";
  system_name: string;
  retriever_name: string;
  generator_name: string;
  revision: string;
  submitted_at: string;
  decided_at: string | null;
  auto: boolean;
  metrics: GroupedMetrics;
}

/** One row of the "Actual Versions" aggregate: server-side mean over the
 * most recent revisions a system key was evaluated on. */
export interface AggregateRow {
  system_name: string;
  retriever_name: string;
  generator_name: string;
  revisions: string[];
  n_revisions: number;
  retrieval: RetrievalMetrics;
  generation: GenerationMetrics;
}

export interface RevisionInfo {
  version: string;
  sandbox: boolean;
  counts: Record<string, number>;
}

export interface SubmissionAck {
  result_id: string;
  status: string;
}

export interface SubmissionPayload {
  system_name: string;
  retriever_name: string;
  generator_name: string;
  revision: string;
  answers: Record<string, { found_ids: number[]; model_answer: string }>;
}

export type MetricKey =
  | "hit_rate"
  | "recall"
  | "ndcg"
  | "rouge_l"
  | "substring_match"
  | "judge_score";

export const METRIC_COLUMNS: { key: MetricKey; family: "retrieval" | "generation"; label: string }[] = [
  { key: "hit_rate", family: "retrieval", label: "Hit rate" },
  { key: "recall", family: "retrieval", label: "Recall" },
  { key: "ndcg", family: "retrieval", label: "nDCG" },
  { key: "rouge_l", family: "generation", label: "ROUGE-L" },
  { key: "substring_match", family: "generation", label: "Substring" },
  { key: "judge_score", family: "generation", label: "Judge" },
];

export function metricValue(metrics: MetricFamilies, key: MetricKey): number | null {
  switch (key) {
    case "hit_rate":
    case "recall":
    case "ndcg":
      return metrics.retrieval[key];
    case "rouge_l":
    case "substring_match":
    case "judge_score":
      return metrics.generation[key];
  }
}

/** Numeric MAJOR.MINOR.PATCH comparison, for ordering revision lists. */
export function compareVersions(a: string, b: string): number {
  const pa = a.split(".").map(Number);
  const pb = b.split(".").map(Number);
  for (let i = 0; i < 3; i++) {
    const d = (pa[i] ?? 0) - (pb[i] ?? 0);
    if (d !== 0) return d;
  }
  return 0;
}
