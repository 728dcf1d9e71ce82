// Wire types mirroring the session-service JSON exactly. The UI keeps no
// derived state of its own beyond client-side card dismissal.

export type NodeStatusValue = 'idle' | 'generating' | 'ready' | 'error';

export interface OptionSetPayload {
  recommended: string;
  options: string[];
  warnings: string[];
}

export interface NodePayload {
  id: string;
  title: string;
  status: NodeStatusValue;
  error_detail: string | null;
  selected: number[];
  option_count: number | null;
  options: OptionSetPayload | null;
}

export interface ContextPayload {
  text: string;
  revision: number;
}

export interface SessionPayload {
  session_id: string;
  root: NodePayload;
  children: NodePayload[];
  context: ContextPayload;
  max_depth: number;
  summary: string | null;
  regen_pending: boolean;
  created_at: number;
  updated_at: number;
}

export interface NodeViewPayload {
  id: string;
  title: string;
  status: NodeStatusValue;
  option_count: number | null;
  selected: number[];
  error_detail: string | null;
}

export interface ExpandResponse {
  node: NodeViewPayload;
  options: OptionSetPayload;
}

export interface PreferencesResponse {
  session: SessionPayload;
  regenerated: boolean;
}
