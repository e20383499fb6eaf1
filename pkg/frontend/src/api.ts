import type {
  AgentReply,
  FactRow,
  MetricRecord,
  SeedCommandRow,
  SessionStateWire,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

function post<T>(url: string, body: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export class GrounderApi {
  constructor(private baseUrl: string = "") {}

  createSession(userId: string): Promise<{ sessionId: string }> {
    return post(`${this.baseUrl}/sessions`, { userId });
  }

  utterance(sessionId: string, text: string): Promise<AgentReply> {
    return post(`${this.baseUrl}/sessions/${sessionId}/utterance`, { text });
  }

  choice(sessionId: string, index: number | null): Promise<AgentReply> {
    return post(`${this.baseUrl}/sessions/${sessionId}/choice`, { index });
  }

  slot(sessionId: string, argName: string, text: string): Promise<AgentReply> {
    return post(`${this.baseUrl}/sessions/${sessionId}/slot`, { argName, text });
  }

  side(
    sessionId: string,
    body: { vote?: string; answer?: string },
  ): Promise<AgentReply> {
    return post(`${this.baseUrl}/sessions/${sessionId}/side`, body);
  }

  sessionState(sessionId: string): Promise<SessionStateWire> {
    return request(`${this.baseUrl}/sessions/${sessionId}`);
  }

  seedCommands(): Promise<SeedCommandRow[]> {
    return request(`${this.baseUrl}/store/seed-commands`);
  }

  facts(): Promise<FactRow[]> {
    return request(`${this.baseUrl}/kb/facts`);
  }

  metrics(): Promise<{ records: MetricRecord[] }> {
    return request(`${this.baseUrl}/metrics`);
  }
}
