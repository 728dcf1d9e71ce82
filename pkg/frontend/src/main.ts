import { mount } from './app';

declare global {
  interface Window {
    SUBQUEST_API?: string;
  }
}

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app mount point');
}
mount(root, window.SUBQUEST_API ?? '');
