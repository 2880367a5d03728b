/**
 * Typed client for the review server's loopback HTTP API.
 *
 * Every write the UI performs goes through these calls; the server is
 * the single source of truth and the client never touches run files.
 */

export interface CandidateView {
  id: string;
  body: string;
  samples: string[];
}

export interface RoundView {
  round_index: number;
  status: string;
  samples_per_candidate: number;
  selection: string | null;
  candidates: CandidateView[];
}

export interface CurrentRound {
  task: string;
  budget: number;
  status: string;
  final_prompt: { id: string; body: string } | null;
  round: RoundView | null;
}

export interface SpanView {
  start: number;
  end: number;
  entity_type: string;
}

export interface PendingSample {
  sample_id: string;
  task: string;
  text: string;
  label?: string;
  tags?: string[];
  spans?: SpanView[];
}

export interface DecisionRecord {
  sample_id: string;
  decision: "accept" | "reject";
  reason: string;
}

export interface ApiError {
  status: number;
  error: string;
  message: string;
}

export class ReviewApiError extends Error {
  readonly status: number;
  readonly errorClass: string;

  constructor(detail: ApiError) {
    super(`${detail.error}: ${detail.message}`);
    this.status = detail.status;
    this.errorClass = detail.error;
  }
}

async function parseError(response: Response): Promise<never> {
  let error = "HttpError";
  let message = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; message?: string };
    if (body.error) error = body.error;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ReviewApiError({ status: response.status, error, message });
}

export class ReviewClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  currentRound(): Promise<CurrentRound> {
    return this.get<CurrentRound>("/rounds/current");
  }

  submitSelection(candidateId: string, rationale: string): Promise<{ status: string }> {
    return this.post<{ status: string }>("/rounds/current/selection", {
      candidate_id: candidateId,
      rationale,
    });
  }

  pendingSamples(): Promise<PendingSample[]> {
    return this.get<PendingSample[]>("/samples?status=pending");
  }

  decide(sampleId: string, decision: "accept" | "reject", reason: string): Promise<DecisionRecord> {
    return this.post<DecisionRecord>(`/samples/${encodeURIComponent(sampleId)}/decision`, {
      decision,
      reason,
    });
  }

  async scatterTsv(): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/scatter`);
    if (!response.ok) await parseError(response);
    return await response.text();
  }
}
