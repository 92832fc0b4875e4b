// Console flows: thin orchestration between the API client and the
// page state. All UI state derives from API responses; approve/reject
// always await the server (no optimistic updates).

import { ApiClient, ApiError, Batch, Report } from './api.js';

export const POLL_INTERVAL_MS = 2000;

export interface SessionState {
  staffId: string;
  role: string;
}

/** Which page a freshly logged-in user lands on. */
export function homeFor(role: string): string {
  switch (role) {
    case 'LECTURER':
      return 'compose';
    case 'RECORDS':
      return 'inbox';
    case 'LIBRARY':
      return 'inbox';
    case 'ADMIN':
      return 'inbox';
    default:
      return 'login';
  }
}

export interface DecisionOutcome {
  ok: boolean;
  batch: Batch | null;
  errorCode?: string;
  errorMessage?: string;
}

export class ConsoleFlows {
  session: SessionState | null = null;

  constructor(public api: ApiClient) {}

  async login(staffId: string, password: string): Promise<string> {
    const out = await this.api.login(staffId, password);
    this.session = { staffId: out.staff_id, role: out.role };
    return homeFor(out.role);
  }

  /** Approval inbox: PENDING_APPROVAL batches, newest first. */
  async loadInbox(): Promise<Batch[]> {
    const pending = await this.api.batches('PENDING_APPROVAL');
    return pending.slice().reverse();
  }

  /** All batches grouped by state, for the overview page. */
  async loadGrouped(): Promise<Map<string, Batch[]>> {
    const all = await this.api.batches();
    const grouped = new Map<string, Batch[]>();
    for (const batch of all) {
      const bucket = grouped.get(batch.state) ?? [];
      bucket.push(batch);
      grouped.set(batch.state, bucket);
    }
    return grouped;
  }

  /**
   * Decide a batch. A 409 means someone else decided first; the caller
   * re-renders from the fresh server state either way.
   */
  async decide(batchId: number, decision: 'approve' | 'reject'): Promise<DecisionOutcome> {
    try {
      const batch =
        decision === 'approve'
          ? await this.api.approve(batchId)
          : await this.api.reject(batchId);
      return { ok: true, batch };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const detail = await this.api.batch(batchId);
        return { ok: false, batch: detail, errorCode: err.code, errorMessage: err.message };
      }
      throw err;
    }
  }

  /** Poll the dispatch report until the batch settles or time runs out. */
  async pollReport(
    batchId: number,
    opts: { timeoutMs?: number; intervalMs?: number; onUpdate?: (r: Report) => void } = {},
  ): Promise<Report> {
    const timeoutMs = opts.timeoutMs ?? 60_000;
    const intervalMs = opts.intervalMs ?? POLL_INTERVAL_MS;
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const report = await this.api.report(batchId);
      opts.onUpdate?.(report);
      const settled =
        (report.state === 'COMPLETED' || report.state === 'REJECTED') && report.pending === 0;
      if (settled || Date.now() >= deadline) return report;
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  /** Lecturer compose -> send -> poll. */
  async composeAndSend(
    body: string,
    target: { course_code?: string; student_ids?: string[] },
    opts: { timeoutMs?: number; intervalMs?: number; onUpdate?: (r: Report) => void } = {},
  ): Promise<Report> {
    const batch = await this.api.announce(body, target);
    return this.pollReport(batch.batch_id, opts);
  }
}
