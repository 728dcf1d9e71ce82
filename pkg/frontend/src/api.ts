import type {
  ExpandResponse,
  NodeViewPayload,
  PreferencesResponse,
  SessionPayload,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly sessionId?: string
  ) {
    super(message);
  }
}

const parseFailure = async (response: Response): Promise<ApiError> => {
  let detail = `HTTP ${response.status}`;
  let sessionId: string | undefined;
  try {
    const body = await response.json();
    if (typeof body.detail === 'string') detail = body.detail;
    if (typeof body.session_id === 'string') sessionId = body.session_id;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail, sessionId);
};

export class SubquestClient {
  constructor(private readonly baseUrl: string = '') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!response.ok) {
      throw await parseFailure(response);
    }
    return response.json() as Promise<T>;
  }

  health(): Promise<{ status: string }> {
    return this.request('/healthz');
  }

  createSession(query: string, userContext?: string): Promise<SessionPayload> {
    return this.request('/sessions', {
      method: 'POST',
      body: JSON.stringify(
        userContext === undefined ? { query } : { query, user_context: userContext }
      ),
    });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${sessionId}`);
  }

  expandNode(sessionId: string, nodeId: string, force = false): Promise<ExpandResponse> {
    const suffix = force ? '?force=true' : '';
    return this.request(`/sessions/${sessionId}/nodes/${nodeId}/expand${suffix}`, {
      method: 'POST',
    });
  }

  setSelection(
    sessionId: string,
    nodeId: string,
    indices: number[]
  ): Promise<{ node: NodeViewPayload }> {
    return this.request(`/sessions/${sessionId}/nodes/${nodeId}/selection`, {
      method: 'PUT',
      body: JSON.stringify({ indices }),
    });
  }

  updatePreferences(sessionId: string, text: string): Promise<PreferencesResponse> {
    return this.request(`/sessions/${sessionId}/preferences`, {
      method: 'PUT',
      body: JSON.stringify({ text }),
    });
  }

  summarize(sessionId: string): Promise<{ summary: string }> {
    return this.request(`/sessions/${sessionId}/summary`, { method: 'POST' });
  }
}
