import type { NodePayload, OptionSetPayload, SessionPayload } from './types';

// The board mirrors GET /sessions/{id} exactly; "dismissed" is the one
// client-only bit of state (hiding a card never touches the server, so it
// can never leak into prompts).

export interface CardView {
  id: string;
  title: string;
  status: NodePayload['status'];
  selectionCount: number;
  errorDetail: string | null;
}

export interface BoardViewModel {
  query: string;
  rootStatus: NodePayload['status'];
  rootNote: string | null;
  cards: CardView[];
  contextText: string;
  summary: string | null;
}

export const boardFrom = (
  session: SessionPayload,
  dismissed: ReadonlySet<string> = new Set()
): BoardViewModel => ({
  query: session.root.title,
  rootStatus: session.root.status,
  rootNote: session.root.error_detail,
  cards: session.children
    .filter((child) => !dismissed.has(child.id))
    .map((child) => ({
      id: child.id,
      title: child.title,
      status: child.status,
      selectionCount: child.selected.length,
      errorDetail: child.error_detail,
    })),
  contextText: session.context.text,
  summary: session.summary,
});

// Unified selectable list: the recommended entry is checkbox index 0.
export const selectableEntries = (options: OptionSetPayload): string[] => [
  options.recommended,
  ...options.options,
];
