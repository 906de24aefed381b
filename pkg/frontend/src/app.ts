import { ApiError } from "./api";
import type {
  CreateSessionRequest,
  CreateSessionResponse,
  PendingBatch,
  Phase,
  SessionMetrics,
  SubmitAck,
} from "./types";

/** Structural view of the API client so tests can inject fakes. */
export interface SessionApiLike {
  createSession(request: CreateSessionRequest): Promise<CreateSessionResponse>;
  getQuery(sessionId: string): Promise<PendingBatch>;
  submitLabels(sessionId: string, labels: [number, number][]): Promise<SubmitAck>;
  getMetrics(sessionId: string): Promise<SessionMetrics>;
  exportUrl(sessionId: string): string;
}

export interface ControllerOptions {
  /** Poll cadence while the engine is training/self-training/evaluating. */
  pollIntervalMs?: number;
}

/**
 * Client-side session state machine.
 *
 * Holds the last server snapshot, the pending batch, and unsent label
 * drafts. It never computes scores or labels itself: everything displayed
 * comes from the server, and drafts survive failed submissions so the
 * annotator can retry.
 */
export class SessionController {
  sessionId: string | null = null;
  metrics: SessionMetrics | null = null;
  batch: PendingBatch | null = null;
  drafts = new Map<number, number>();
  cursor = 0;
  busy = false;
  submitted = false;
  error: string | null = null;

  private readonly pollIntervalMs: number;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly listeners = new Set<() => void>();

  constructor(
    private readonly api: SessionApiLike,
    options: ControllerOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
  }

  onChange(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get phase(): Phase | null {
    return this.metrics?.phase ?? null;
  }

  get numClasses(): number {
    return this.metrics?.dataset.num_classes ?? 0;
  }

  exportUrl(): string | null {
    return this.sessionId ? this.api.exportUrl(this.sessionId) : null;
  }

  async create(
    dataset: string,
    config: Record<string, unknown>,
    revealPredictions = false,
  ): Promise<string> {
    const created = await this.api.createSession({
      dataset,
      config,
      reveal_predictions: revealPredictions,
    });
    this.sessionId = created.session_id;
    await this.refresh();
    return created.session_id;
  }

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  /** Pull the latest server snapshot; fetch the batch when a new one is pending. */
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const metrics = await this.api.getMetrics(this.sessionId);
    this.metrics = metrics;
    if (metrics.phase === "awaiting-labels" && metrics.pending) {
      const isNewBatch =
        this.batch === null || this.batch.batch_index !== metrics.pending.batch_index;
      if (isNewBatch) {
        this.batch = await this.api.getQuery(this.sessionId);
        this.drafts = new Map();
        this.cursor = 0;
        this.submitted = false;
        this.error = null;
      }
      this.stopPolling();
    } else if (metrics.phase === "done") {
      this.batch = null;
      this.stopPolling();
    } else {
      this.schedulePoll();
    }
    this.emit();
  }

  private schedulePoll(): void {
    if (this.timer !== null) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.refresh().catch((err) => {
        this.error = err instanceof ApiError ? err.detail : String(err);
        this.emit();
        this.schedulePoll();
      });
    }, this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  canEdit(): boolean {
    return (
      this.batch !== null &&
      this.phase === "awaiting-labels" &&
      !this.busy &&
      !this.submitted
    );
  }

  allLabeled(): boolean {
    return this.batch !== null && this.batch.ids.every((id) => this.drafts.has(id));
  }

  canSubmit(): boolean {
    return this.canEdit() && this.allLabeled();
  }

  setLabel(instanceId: number, label: number): void {
    if (!this.canEdit() || !this.batch) return;
    if (label < 0 || label >= this.numClasses) return;
    if (!this.batch.ids.includes(instanceId)) return;
    this.drafts.set(instanceId, label);
    const next = this.batch.ids.findIndex((id) => !this.drafts.has(id));
    if (next >= 0) this.cursor = next;
    this.emit();
  }

  labelAtCursor(label: number): void {
    if (!this.batch || this.cursor >= this.batch.ids.length) return;
    this.setLabel(this.batch.ids[this.cursor], label);
  }

  moveCursor(delta: number): void {
    if (!this.batch) return;
    const max = this.batch.ids.length - 1;
    this.cursor = Math.min(max, Math.max(0, this.cursor + delta));
    this.emit();
  }

  /** Send the completed batch once; after the ack a re-submit is a no-op. */
  async submit(): Promise<void> {
    if (!this.canSubmit() || !this.sessionId || !this.batch) return;
    this.busy = true;
    this.error = null;
    this.emit();
    const labels = this.batch.ids.map(
      (id) => [id, this.drafts.get(id) as number] as [number, number],
    );
    try {
      await this.api.submitLabels(this.sessionId, labels);
      this.busy = false;
      this.submitted = true;
      this.emit();
      await this.refresh();
    } catch (err) {
      // keep the drafts so the annotator can retry
      this.busy = false;
      this.error = err instanceof ApiError ? err.detail : String(err);
      this.emit();
    }
  }

  destroy(): void {
    this.stopPolling();
    this.listeners.clear();
  }
}
