/** Session query history: append-only; entries change status, never vanish. */

export type QueryStatus = "pending" | "ok" | "error" | "network";

export interface HistoryEntry {
  readonly text: string;
  readonly timestamp: number;
  status: QueryStatus;
  rowCount?: number;
  message?: string;
}

export class QueryHistory {
  private readonly entries: HistoryEntry[] = [];

  add(text: string, now: number = Date.now()): number {
    this.entries.push({ text, timestamp: now, status: "pending" });
    return this.entries.length - 1;
  }

  settle(index: number, status: QueryStatus, rowCount?: number, message?: string): void {
    const e = this.entries[index];
    if (!e) return;
    e.status = status;
    e.rowCount = rowCount;
    e.message = message;
  }

  list(): readonly HistoryEntry[] {
    return this.entries;
  }

  get length(): number {
    return this.entries.length;
  }
}
