/** Wire types mirroring the session service's JSON responses. */

export type Phase =
  | "awaiting-labels"
  | "training"
  | "self-training"
  | "evaluating"
  | "done";

export interface CurvePoint {
  labeled_count: number;
  score: number;
  pseudo_count: number;
  query_ids: number[];
}

export interface DatasetInfo {
  name: string;
  num_classes: number;
  metric: string;
  train_size: number;
}

export interface PendingSummary {
  batch_index: number;
  size: number;
  submitted: number;
}

export interface SessionMetrics {
  session_id: string;
  phase: Phase;
  dataset: DatasetInfo;
  config: Record<string, unknown>;
  curve: CurvePoint[];
  pseudo_counts: number[];
  final_score: number | null;
  auc: number | null;
  labeled_count: number;
  pending: PendingSummary | null;
}

export interface PredictionHint {
  label: number;
  confidence: number;
}

export interface PendingBatch {
  ids: number[];
  texts: (string | null)[];
  batch_index: number;
  remaining: number;
  predictions: PredictionHint[] | null;
}

export interface SubmitAck {
  accepted: number;
  remaining: number;
  phase: Phase;
}

export interface CreateSessionResponse {
  session_id: string;
  phase: Phase;
  pending?: PendingBatch;
}

export interface CreateSessionRequest {
  dataset: string;
  config?: Record<string, unknown>;
  idempotency_key?: string;
  reveal_predictions?: boolean;
}
