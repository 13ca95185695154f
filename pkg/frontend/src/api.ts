// Typed client for the dialogue service JSON API.

export interface BeliefEntry {
  value: string;
  p: number;
}

export interface SlotBelief {
  slot: string;
  top: BeliefEntry[];
}

export interface TurnPayload {
  session_id: string;
  turn_index: number;
  agent_text: string;
  action: string;
  beliefs: SlotBelief[];
  kb: { count: number; available: boolean };
  terminal: boolean;
  status: string;
}

export interface ServiceInfo {
  checkpoint_id: string;
  ontology_hash: string;
  slots: string[];
  actions: string[];
  max_turns: number;
  kb_entities: number;
}

export interface FeedbackAck {
  session_id: string;
  success: boolean;
  turns: number;
  logged_reward: number;
  status: string;
  duplicate: boolean;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const detail = (body as { detail?: string }).detail ?? res.statusText;
    throw new ApiError(res.status, detail);
  }
  return body as T;
}

export class ServiceClient {
  constructor(private baseUrl: string = "") {}

  info(): Promise<ServiceInfo> {
    return request<ServiceInfo>(`${this.baseUrl}/api/info`);
  }

  createSession(mode: "greedy" | "sample" = "greedy"): Promise<TurnPayload> {
    return request<TurnPayload>(`${this.baseUrl}/api/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ mode }),
    });
  }

  postMessage(sessionId: string, text: string): Promise<TurnPayload> {
    return request<TurnPayload>(`${this.baseUrl}/api/session/${sessionId}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  submitFeedback(sessionId: string, success: boolean): Promise<FeedbackAck> {
    return request<FeedbackAck>(`${this.baseUrl}/api/session/${sessionId}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ success }),
    });
  }
}
