import { ApiError, SubquestClient } from './api';
import type { NodePayload, SessionPayload } from './types';
import { boardFrom } from './viewmodel';
import {
  renderBanner,
  renderBoard,
  renderNodeDetail,
  renderPreferencePanel,
  renderQueryEntry,
  renderThinking,
} from './views';

type Route =
  | { page: 'entry' }
  | { page: 'board'; sessionId: string }
  | { page: 'node'; sessionId: string; nodeId: string };

export const parseRoute = (hash: string): Route => {
  const parts = hash.replace(/^#\/?/, '').split('/').filter(Boolean);
  if (parts[0] === 's' && parts[1] && parts[2] === 'node' && parts[3]) {
    return { page: 'node', sessionId: parts[1], nodeId: parts[3] };
  }
  if (parts[0] === 's' && parts[1]) {
    return { page: 'board', sessionId: parts[1] };
  }
  return { page: 'entry' };
};

export const routeHash = (route: Route): string => {
  switch (route.page) {
    case 'entry':
      return '#/';
    case 'board':
      return `#/s/${route.sessionId}`;
    case 'node':
      return `#/s/${route.sessionId}/node/${route.nodeId}`;
  }
};

// Everything rendered is reconstructed from API responses on each route
// change; the only client-held state is the dismissal set, a draft of the
// preference text before a session exists, and transient notices.
export class App {
  private readonly dismissed = new Set<string>();
  private draftContext = '';
  private notice: { kind: 'error' | 'warning' | 'info'; text: string } | null = null;
  private busyLabel: string | null = null;

  constructor(
    private readonly rootEl: HTMLElement,
    readonly client: SubquestClient,
    private readonly navigate: (hash: string) => void = (hash) => {
      window.location.hash = hash;
    }
  ) {}

  start(): void {
    window.addEventListener('hashchange', () => {
      void this.render(parseRoute(window.location.hash));
    });
    void this.render(parseRoute(window.location.hash));
  }

  async render(route: Route): Promise<void> {
    this.rootEl.textContent = '';
    if (this.busyLabel) {
      this.rootEl.append(renderThinking(this.busyLabel));
    }
    const noticeEl = this.takeNotice();
    if (noticeEl) this.rootEl.append(noticeEl);

    if (route.page === 'entry') {
      this.renderEntry();
      return;
    }
    let session: SessionPayload;
    try {
      session = await this.client.getSession(route.sessionId);
    } catch (error) {
      this.rootEl.append(
        renderBanner('error', describe(error), () => void this.render(route))
      );
      return;
    }
    if (route.page === 'board') {
      this.renderBoard(session);
    } else {
      await this.renderNode(session, route.nodeId);
    }
  }

  // --- entry -------------------------------------------------------------

  private renderEntry(): void {
    const entry = renderQueryEntry({
      onSubmit: (query) => void this.createSession(query),
    });
    this.rootEl.append(entry);
    this.rootEl.append(
      renderPreferencePanel(this.draftContext, {
        onSave: (text) => {
          this.draftContext = text;
          this.notice = { kind: 'info', text: 'Preferences will apply to your next exploration.' };
          void this.render({ page: 'entry' });
        },
      })
    );
  }

  private async createSession(query: string): Promise<void> {
    this.busyLabel = 'thinking…';
    void this.render({ page: 'entry' });
    try {
      const session = await this.client.createSession(
        query,
        this.draftContext.trim() === '' ? undefined : this.draftContext
      );
      this.busyLabel = null;
      this.navigate(routeHash({ page: 'board', sessionId: session.session_id }));
    } catch (error) {
      this.busyLabel = null;
      if (error instanceof ApiError && error.sessionId) {
        // the session exists with the root in error state; show it
        this.notice = { kind: 'error', text: describe(error) };
        this.navigate(routeHash({ page: 'board', sessionId: error.sessionId }));
        return;
      }
      this.notice = { kind: 'error', text: describe(error) };
      void this.render({ page: 'entry' });
    }
  }

  // --- board ---------------------------------------------------------------

  private renderBoard(session: SessionPayload): void {
    const vm = boardFrom(session, this.dismissed);
    const board = renderBoard(vm, {
      onOpen: (nodeId) =>
        this.navigate(routeHash({ page: 'node', sessionId: session.session_id, nodeId })),
      onDismiss: (nodeId) => {
        this.dismissed.add(nodeId);
        void this.render({ page: 'board', sessionId: session.session_id });
      },
      onSummarize: () => void this.summarize(session.session_id),
    });
    this.rootEl.append(board);
    this.appendPreferencePanel(session);
  }

  // --- node detail ---------------------------------------------------------

  private async renderNode(session: SessionPayload, nodeId: string): Promise<void> {
    let node = session.children.find((child) => child.id === nodeId);
    if (!node) {
      this.rootEl.append(renderBanner('error', `No sub-task ${nodeId} in this session.`));
      return;
    }
    if (node.status === 'idle' || (node.status === 'ready' && node.options === null)) {
      // navigating into a card triggers option generation exactly once;
      // a failure falls through to the detail view's retry affordance
      const refreshed = await this.expand(session.session_id, node);
      node = refreshed.children.find((child) => child.id === nodeId);
      this.rootEl.textContent = '';
      const noticeEl = this.takeNotice();
      if (noticeEl) this.rootEl.append(noticeEl);
      if (!node) {
        this.rootEl.append(
          renderBanner('warning', 'The sub-tasks changed while options were loading.')
        );
        this.renderBoard(refreshed);
        return;
      }
      session = refreshed;
    }
    this.appendNodeDetail(session, node);
  }

  private appendNodeDetail(session: SessionPayload, node: NodePayload): void {
    const detail = renderNodeDetail(node, {
      onToggle: (indices) => void this.applySelection(session.session_id, node, indices),
      onRetry: () => void this.retryExpand(session.session_id, node),
      onBack: () => this.navigate(routeHash({ page: 'board', sessionId: session.session_id })),
      onSummarize: () => void this.summarize(session.session_id),
    });
    this.rootEl.append(detail);
    this.appendPreferencePanel(session);
  }

  private async expand(sessionId: string, node: NodePayload): Promise<SessionPayload> {
    this.rootEl.textContent = '';
    this.rootEl.append(renderThinking('thinking about options…'));
    try {
      await this.client.expandNode(sessionId, node.id, node.status === 'error');
    } catch (error) {
      this.notice = { kind: 'error', text: describe(error) };
    }
    // re-read everything; cached options now arrive with the session
    return this.client.getSession(sessionId);
  }

  private async retryExpand(sessionId: string, node: NodePayload): Promise<void> {
    const refreshed = await this.expand(sessionId, node);
    this.rootEl.textContent = '';
    const noticeEl = this.takeNotice();
    if (noticeEl) this.rootEl.append(noticeEl);
    const fresh = refreshed.children.find((child) => child.id === node.id);
    if (fresh) {
      this.appendNodeDetail(refreshed, fresh);
    } else {
      this.renderBoard(refreshed);
    }
  }

  private async applySelection(
    sessionId: string,
    node: NodePayload,
    indices: number[]
  ): Promise<void> {
    // checkboxes already reflect the optimistic state; reconcile after
    try {
      const result = await this.client.setSelection(sessionId, node.id, indices);
      this.reconcileCheckboxes(result.node.selected);
    } catch (error) {
      this.notice = { kind: 'error', text: describe(error) };
      await this.render({ page: 'node', sessionId, nodeId: node.id });
    }
  }

  private reconcileCheckboxes(selected: number[]): void {
    const chosen = new Set(selected);
    for (const box of this.rootEl.querySelectorAll<HTMLInputElement>('.option-checkbox')) {
      box.checked = chosen.has(Number(box.value));
    }
  }

  // --- preferences and summary ---------------------------------------------

  private appendPreferencePanel(session: SessionPayload): void {
    this.rootEl.append(
      renderPreferencePanel(session.context.text, {
        onSave: (text) => void this.savePreferences(session.session_id, text),
      })
    );
  }

  private async savePreferences(sessionId: string, text: string): Promise<void> {
    this.busyLabel = 'refreshing sub-tasks…';
    void this.render({ page: 'board', sessionId });
    try {
      await this.client.updatePreferences(sessionId, text);
      this.notice = { kind: 'info', text: 'Sub-tasks refreshed for your preferences.' };
    } catch (error) {
      if (error instanceof ApiError) {
        // context was kept server-side; previous sub-tasks were retained
        this.notice = {
          kind: 'warning',
          text: `Preferences saved, but sub-tasks could not be refreshed: ${error.message}`,
        };
      } else {
        this.notice = {
          kind: 'warning',
          text: 'You appear to be offline; your edit is kept in the panel — save again to retry.',
        };
      }
    } finally {
      this.busyLabel = null;
    }
    await this.render({ page: 'board', sessionId });
  }

  private async summarize(sessionId: string): Promise<void> {
    this.busyLabel = 'summarizing…';
    void this.render({ page: 'board', sessionId });
    try {
      await this.client.summarize(sessionId);
    } catch (error) {
      this.notice = { kind: 'error', text: describe(error) };
    } finally {
      this.busyLabel = null;
    }
    // exit to the root node; the summary arrives with the session snapshot
    this.navigate(routeHash({ page: 'board', sessionId }));
    await this.render({ page: 'board', sessionId });
  }

  private takeNotice(): HTMLElement | null {
    if (!this.notice) return null;
    const banner = renderBanner(this.notice.kind, this.notice.text);
    this.notice = null;
    return banner;
  }
}

const describe = (error: unknown): string =>
  error instanceof Error ? error.message : String(error);

export const mount = (rootEl: HTMLElement, baseUrl = ''): App => {
  const app = new App(rootEl, new SubquestClient(baseUrl));
  app.start();
  return app;
};
