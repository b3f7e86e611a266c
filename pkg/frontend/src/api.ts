import type {
  CorrectionResponse,
  ErrorDocument,
  HeadlinePage,
  HealthDocument,
  IngestReport,
  ScoreDocument,
  Stage,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public payload: ErrorDocument,
  ) {
    super(payload.message);
  }
}

async function parseResponse<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body as ErrorDocument);
  }
  return body as T;
}

export interface HeadlineQuery {
  stage?: Stage | null;
  label?: string | null;
  page?: number;
  pageSize?: number;
}

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  health(): Promise<HealthDocument> {
    return this.fetchFn(this.url("/v1/health")).then((r) =>
      parseResponse<HealthDocument>(r),
    );
  }

  score(company: string): Promise<ScoreDocument> {
    return this.fetchFn(
      this.url(`/v1/companies/${encodeURIComponent(company)}/score`),
    ).then((r) => parseResponse<ScoreDocument>(r));
  }

  headlines(company: string, query: HeadlineQuery = {}): Promise<HeadlinePage> {
    const params = new URLSearchParams();
    if (query.stage) params.set("stage", query.stage);
    if (query.label) params.set("label", query.label);
    if (query.page) params.set("page", String(query.page));
    if (query.pageSize) params.set("page_size", String(query.pageSize));
    const suffix = params.size ? `?${params.toString()}` : "";
    return this.fetchFn(
      this.url(
        `/v1/companies/${encodeURIComponent(company)}/headlines${suffix}`,
      ),
    ).then((r) => parseResponse<HeadlinePage>(r));
  }

  submitCorrection(body: {
    headline_id: string;
    stage: Stage;
    new_label: string;
    author: string;
  }): Promise<CorrectionResponse> {
    return this.fetchFn(this.url("/v1/corrections"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => parseResponse<CorrectionResponse>(r));
  }

  ingest(lines: string): Promise<IngestReport> {
    return this.fetchFn(this.url("/v1/ingest"), {
      method: "POST",
      headers: { "Content-Type": "application/x-ndjson" },
      body: lines,
    }).then((r) => parseResponse<IngestReport>(r));
  }
}
