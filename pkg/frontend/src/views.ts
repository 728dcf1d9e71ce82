import type { NodePayload, OptionSetPayload } from './types';
import type { BoardViewModel } from './viewmodel';
import { selectableEntries } from './viewmodel';

export const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

export const renderThinking = (label = 'thinking…'): HTMLElement => {
  const wrap = el('div', 'thinking');
  wrap.setAttribute('role', 'status');
  wrap.append(el('span', 'thinking-dot'), el('span', 'thinking-label', label));
  return wrap;
};

export const renderBanner = (
  kind: 'error' | 'warning' | 'info',
  text: string,
  onRetry?: () => void
): HTMLElement => {
  const banner = el('div', `banner banner-${kind}`, text);
  if (onRetry) {
    const retry = el('button', 'retry', 'Retry');
    retry.addEventListener('click', onRetry);
    banner.append(' ', retry);
  }
  return banner;
};

export interface QueryEntryHandlers {
  onSubmit: (query: string) => void;
}

export const renderQueryEntry = (handlers: QueryEntryHandlers): HTMLElement => {
  const section = el('section', 'query-entry');
  section.append(el('h1', 'app-title', 'What do you want to get done?'));
  const form = el('form', 'query-form');
  const input = el('input', 'query-input');
  input.type = 'text';
  input.placeholder = 'e.g. I want to book a flight to Tokyo';
  const submit = el('button', 'query-submit', 'Explore');
  submit.type = 'submit';
  submit.disabled = true;
  input.addEventListener('input', () => {
    submit.disabled = input.value.trim() === '';
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const query = input.value.trim();
    if (query) handlers.onSubmit(query);
  });
  form.append(input, submit);
  section.append(form);
  return section;
};

export interface BoardHandlers {
  onOpen: (nodeId: string) => void;
  onDismiss: (nodeId: string) => void;
  onSummarize: () => void;
}

const statusBadge = (status: NodePayload['status']): HTMLElement =>
  el('span', `badge badge-${status}`, status);

export const renderBoard = (vm: BoardViewModel, handlers: BoardHandlers): HTMLElement => {
  const section = el('section', 'board');
  const heading = el('header', 'board-heading');
  heading.append(el('h1', 'board-query', vm.query), statusBadge(vm.rootStatus));
  section.append(heading);
  if (vm.rootNote) {
    section.append(renderBanner('warning', vm.rootNote));
  }
  if (vm.summary !== null) {
    const summaryBlock = el('section', 'summary');
    summaryBlock.append(el('h2', 'summary-title', 'Summary'), el('p', 'summary-text', vm.summary));
    section.append(summaryBlock);
  }
  const list = el('div', 'card-list');
  for (const card of vm.cards) {
    const cardEl = el('article', `card card-${card.status}`);
    cardEl.dataset.nodeId = card.id;
    const title = el('h2', 'card-title', card.title);
    const meta = el('div', 'card-meta');
    meta.append(statusBadge(card.status));
    if (card.selectionCount > 0) {
      meta.append(el('span', 'selection-count', `${card.selectionCount} selected`));
    }
    // Revealed on hover via CSS; always in the DOM so keyboards reach it.
    const seeMore = el('button', 'see-more', 'see more');
    seeMore.addEventListener('click', () => handlers.onOpen(card.id));
    const dismiss = el('button', 'dismiss', '×');
    dismiss.title = 'Hide this card (local only)';
    dismiss.addEventListener('click', () => handlers.onDismiss(card.id));
    cardEl.append(dismiss, title, meta, seeMore);
    list.append(cardEl);
  }
  section.append(list);
  const summarize = el('button', 'summarize', 'Summarize my journey');
  summarize.addEventListener('click', handlers.onSummarize);
  section.append(summarize);
  return section;
};

export interface NodeDetailHandlers {
  onToggle: (indices: number[]) => void;
  onRetry: () => void;
  onBack: () => void;
  onSummarize: () => void;
}

export const renderNodeDetail = (
  node: NodePayload,
  handlers: NodeDetailHandlers
): HTMLElement => {
  const section = el('section', 'node-detail');
  const back = el('button', 'back', '← all sub-tasks');
  back.addEventListener('click', handlers.onBack);
  section.append(back, el('h1', 'node-title', node.title));

  if (node.status === 'generating') {
    section.append(renderThinking('thinking about options…'));
  } else if (node.status === 'error') {
    section.append(
      renderBanner('error', node.error_detail ?? 'option generation failed', handlers.onRetry)
    );
  }

  if (node.options) {
    section.append(renderOptionChecklist(node.options, node.selected, handlers.onToggle));
  }

  const summarize = el('button', 'summarize', 'Summarize my journey');
  summarize.addEventListener('click', handlers.onSummarize);
  section.append(summarize);
  return section;
};

export const renderOptionChecklist = (
  options: OptionSetPayload,
  selected: number[],
  onToggle: (indices: number[]) => void
): HTMLElement => {
  const list = el('ul', 'option-list');
  const chosen = new Set(selected);
  selectableEntries(options).forEach((text, index) => {
    const item = el('li', index === 0 ? 'option recommended' : 'option');
    const label = el('label', 'option-label');
    const checkbox = el('input', 'option-checkbox');
    checkbox.type = 'checkbox';
    checkbox.value = String(index);
    checkbox.checked = chosen.has(index);
    checkbox.addEventListener('change', () => {
      const indices = Array.from(
        list.querySelectorAll<HTMLInputElement>('input:checked'),
        (box) => Number(box.value)
      );
      onToggle(indices);
    });
    label.append(checkbox);
    if (index === 0) label.append(el('span', 'recommended-badge', 'recommended'));
    label.append(el('span', 'option-text', text));
    item.append(label);
    list.append(item);
  });
  return list;
};

export interface PreferencePanelHandlers {
  onSave: (text: string) => void;
}

export const renderPreferencePanel = (
  contextText: string,
  handlers: PreferencePanelHandlers
): HTMLElement => {
  const panel = el('aside', 'preference-panel');
  panel.append(
    el('h2', 'panel-title', 'About you'),
    el(
      'p',
      'panel-hint',
      'Tell us about yourself and your preferences to get better recommendations.'
    )
  );
  const textarea = el('textarea', 'preference-text');
  textarea.value = contextText;
  const save = el('button', 'preference-save', 'Save preferences');
  save.addEventListener('click', () => handlers.onSave(textarea.value));
  panel.append(textarea, save);
  return panel;
};
