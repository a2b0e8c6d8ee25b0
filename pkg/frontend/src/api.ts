// Typed client for the rating-session HTTP API. The UI consumes only these
// endpoints; everything it renders comes from their responses.

export interface SectionView {
  kind: string;
  header: string;
  text: string;
}

export interface Progress {
  rated: number;
  total: number;
}

export interface NextItem {
  done: boolean;
  session_id: string;
  progress: Progress;
  case_id?: string;
  label?: string;
  case_text?: string;
  gold_sections?: SectionView[];
  response_sections?: SectionView[];
  dimensions?: string[];
}

export interface SessionInfo {
  id: string;
  doctor: string;
  cases: string[];
  labels: string[];
  status: "open" | "complete";
}

export interface SubmitResult {
  stored: boolean;
  session_status: string;
  progress: Progress;
}

export interface ApiError {
  error: string;
  detail: string;
}

export class ServerRejection extends Error {
  readonly code: string;

  constructor(code: string, detail: string) {
    super(detail);
    this.code = code;
  }
}

// Structural subset of Response so alternative fetch implementations
// (service mocks, node clients) slot in without DOM typing friction.
export interface MinimalResponse {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<MinimalResponse>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const text = await response.text();
    if (!response.ok) {
      let payload: Partial<ApiError> = {};
      try {
        payload = JSON.parse(text) as ApiError;
      } catch {
        // non-JSON error body: surface it verbatim
      }
      throw new ServerRejection(payload.error ?? `HTTP ${response.status}`,
                                payload.detail ?? text);
    }
    return JSON.parse(text) as T;
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${sessionId}`);
  }

  nextItem(sessionId: string): Promise<NextItem> {
    return this.request<NextItem>(`/sessions/${sessionId}/next-item`);
  }

  submitRating(
    sessionId: string,
    caseId: string,
    label: string,
    scores: Record<string, number>,
    supersede = false,
  ): Promise<SubmitResult> {
    return this.request<SubmitResult>(`/sessions/${sessionId}/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ case_id: caseId, label, scores, supersede }),
    });
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }
}
