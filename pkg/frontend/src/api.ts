// Typed client for the nepkit HTTP JSON API. The UI talks to the service
// exclusively through this module; it never touches the store directly.

export interface PendingIssue {
  issue_date: string;
  actions: string[];
}

export interface Paper {
  source_position: number;
  handle: string;
  title: string;
  authors: string[];
  abstract: string;
  fulltext_url: string | null;
}

export interface Snapshot {
  report_code: string;
  issue_date: string;
  stage: string;
  version: number;
  created_at: string;
  mode: string;
  papers: Paper[];
}

export interface SendResult {
  snapshot: Snapshot;
  delivered: number;
}

export interface Report {
  code: string;
  subject: string;
  editor_name: string;
  created_on: string;
  subscriber_count: number;
}

export interface Stats {
  report_count: number;
  subscription_total: number;
  avg_subscriptions: number | null;
  avg_nep_all_size: number | null;
  avg_issue_size: number | null;
  presorted_fraction: number | null;
}

export interface ApResult {
  n: number;
  min_presorted_issues: number;
  per_report: Record<string, number>;
  overall: number | null;
  valid_report_count: number;
}

export interface RslResult {
  min_presorted_issues: number;
  per_report: Record<string, number>;
  overall: number | null;
}

export interface DurationRow {
  report_code: string;
  sessions: number;
  valid_sessions: number;
  valid_fraction: number;
  mean_valid_minutes: number | null;
}

export interface DurationsResult {
  threshold_minutes: number;
  chunk_minutes: number;
  rows: DurationRow[];
  total: DurationRow | null;
  histogram: { chunk_minutes: number; bins: Record<string, number>; total: number };
}

export interface Correlation {
  label: string;
  coefficient: number;
  sample_size: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

// Structural subset of Response so tests can hand in a plain double.
export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<ResponseLike>;

export class NepkitApi {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Editor-Token"] = this.token;
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let code = "error";
      let message = `HTTP ${resp.status}`;
      try {
        const parsed = (await resp.json()) as { error?: string; message?: string };
        if (parsed.error) code = parsed.error;
        if (parsed.message) message = parsed.message;
      } catch {
        // non-JSON error body; keep the fallback message
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  reports(): Promise<Report[]> {
    return this.request("GET", "/reports");
  }

  issueList(code: string): Promise<PendingIssue[]> {
    return this.request("GET", `/reports/${code}/issues`);
  }

  openIssue(code: string, date: string, mode: "presorted" | "unsorted"): Promise<Snapshot> {
    return this.request("POST", `/reports/${code}/issues/${date}/open`, { mode });
  }

  submitSelection(code: string, date: string, handles: string[]): Promise<Snapshot> {
    return this.request("POST", `/reports/${code}/issues/${date}/selection`, { handles });
  }

  submitOrdering(code: string, date: string, handles: string[]): Promise<Snapshot> {
    return this.request("POST", `/reports/${code}/issues/${date}/ordering`, { handles });
  }

  sendIssue(code: string, date: string): Promise<SendResult> {
    return this.request("POST", `/reports/${code}/issues/${date}/send`);
  }

  deleteIssue(code: string, date: string): Promise<{ status: string }> {
    return this.request("DELETE", `/reports/${code}/issues/${date}`);
  }

  stats(): Promise<Stats> {
    return this.request("GET", "/stats");
  }

  metricsAp(n: number, minPresorted?: number): Promise<ApResult> {
    const extra = minPresorted === undefined ? "" : `&min_presorted=${minPresorted}`;
    return this.request("GET", `/metrics/ap?n=${n}${extra}`);
  }

  metricsRsl(minPresorted?: number): Promise<RslResult> {
    const query = minPresorted === undefined ? "" : `?min_presorted=${minPresorted}`;
    return this.request("GET", `/metrics/rsl${query}`);
  }

  metricsDurations(): Promise<DurationsResult> {
    return this.request("GET", "/metrics/durations");
  }

  metricsCorrelations(): Promise<Correlation[]> {
    return this.request("GET", "/metrics/correlations");
  }
}
