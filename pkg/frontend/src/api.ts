// Typed client for the litpilot REST API. All methods throw ApiError on
// non-2xx responses, carrying the server's {error, detail, limit} payload.

export interface PaperSummary {
  doc_id: string;
  title: string;
  year: number | null;
  authors: string[];
}

export interface SearchHit {
  chunk_id: string;
  score: number;
  snippet: string;
  doc_id: string | null;
}

export interface SessionInfo {
  session_id: string;
  kind: "investigate" | "read";
  doc_ids: string[];
  messages?: { role: string; content: string; citations?: string[] }[];
}

export interface ComparePaper {
  doc_id: string;
  title: string;
  abstract: string;
  contributions: string[];
}

export interface CompareReport {
  per_paper: ComparePaper[];
  table: { approach: string; advantages: string }[];
  similarities: string[];
  differences: string[];
}

export interface ReviewOutline {
  title: string;
  introduction: string;
  body_sections: { heading: string; member_doc_ids: string[]; text: string }[];
  conclusion: string;
  bibliography: { ref_number: number; doc_id: string; citation: string }[];
  violations: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public error: string,
    public detail: string,
    public limit?: number,
  ) {
    super(`${error}: ${detail}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(`${base}${path}`, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let body: Record<string, unknown> = {};
    try {
      body = await res.json();
    } catch {
      // non-JSON error body; fall through with generic fields
    }
    throw new ApiError(
      res.status,
      String(body.error ?? "HttpError"),
      String(body.detail ?? res.statusText),
      typeof body.limit === "number" ? body.limit : undefined,
    );
  }
  return res.json() as Promise<T>;
}

export class ApiClient {
  constructor(private base: string = "") {}

  listPapers(): Promise<{ papers: PaperSummary[] }> {
    return request(this.base, "/v1/papers");
  }

  getPaper(docId: string): Promise<Record<string, unknown>> {
    return request(this.base, `/v1/papers/${encodeURIComponent(docId)}`);
  }

  ingest(source: string): Promise<{ doc_id: string; title: string; chunks: number }> {
    return request(this.base, "/v1/ingest", {
      method: "POST",
      body: JSON.stringify({ source }),
    });
  }

  search(query: string, k = 10): Promise<{ hits: SearchHit[] }> {
    return request(this.base, "/v1/search", {
      method: "POST",
      body: JSON.stringify({ query, k }),
    });
  }

  createSession(kind: "investigate" | "read", docIds: string[] = []): Promise<SessionInfo> {
    return request(this.base, "/v1/sessions", {
      method: "POST",
      body: JSON.stringify({ kind, doc_ids: docIds }),
    });
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return request(this.base, `/v1/sessions/${encodeURIComponent(sessionId)}`);
  }

  compare(docIds: string[]): Promise<CompareReport> {
    return request(this.base, "/v1/compare", {
      method: "POST",
      body: JSON.stringify({ doc_ids: docIds }),
    });
  }

  review(docIds: string[]): Promise<ReviewOutline> {
    return request(this.base, "/v1/review", {
      method: "POST",
      body: JSON.stringify({ doc_ids: docIds }),
    });
  }

  translate(source: string, direction: string): Promise<{ translated: string }> {
    return request(this.base, "/v1/translate", {
      method: "POST",
      body: JSON.stringify({ source, direction }),
    });
  }

  polish(draft: string, style = "academic"): Promise<{ polished: string }> {
    return request(this.base, "/v1/polish", {
      method: "POST",
      body: JSON.stringify({ draft, style }),
    });
  }

  // Raw fetch for the SSE message endpoint; the caller streams the body.
  postMessage(sessionId: string, content: string): Promise<Response> {
    return fetch(`${this.base}/v1/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ content }),
    });
  }
}
