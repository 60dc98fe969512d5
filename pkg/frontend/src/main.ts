/**
 * Page wiring: connects input events to session commands and repaints the
 * canvas plus HUD from every acknowledged state.
 *
 * All semantics live on the server. A wheel notch, a drag, a click, or a
 * slider move each become exactly one command; the canvas shows only what
 * the last reply said.
 */

import { SessionClient, ViewerState } from './client.js';
import { orbit, pick, setScaleOffset, zoom } from './protocol.js';
import { Renderer } from './renderer.js';

const ORBIT_RADIANS_PER_PIXEL = 0.005;
const DRAG_THRESHOLD_PX = 3;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function formatFocus(state: ViewerState): string {
  const focus = state.focus;
  if (focus === null) {
    return '-';
  }
  const win = focus.window.length > 0
    ? `${focus.window[0]}..${focus.window[focus.window.length - 1]}`
    : '-';
  return `chr ${focus.chromosome}, fiber ${focus.fiber}, window ${win}`;
}

function main(): void {
  const canvas = element<HTMLCanvasElement>('view');
  const hudScale = element<HTMLElement>('hud-scale');
  const hudFocus = element<HTMLElement>('hud-focus');
  const hudInstances = element<HTMLElement>('hud-instances');
  const hudCamera = element<HTMLElement>('hud-camera');
  const banner = element<HTMLElement>('banner');
  const slider = element<HTMLInputElement>('offset');

  const renderer = new Renderer(canvas);
  const url = `ws://${location.host}/ws`;

  const repaint = (state: ViewerState): void => {
    renderer.draw(state.frame, state.camera);

    if (state.frame !== null) {
      const scale = state.frame.header.scale;
      hudScale.textContent =
        `s=${scale.s.toFixed(3)} row ${scale.row} (${state.info?.schedule[scale.row]?.semantic_name ?? '?'})`;
      const decoded = state.frame.batches.reduce((acc, b) => acc + b.count, 0);
      const reported = state.frame.header.stats.total ?? state.frame.total;
      const agree = decoded === reported ? 'ok' : 'MISMATCH';
      hudInstances.textContent = `${decoded} instances (server says ${reported}: ${agree})`;
    }
    hudFocus.textContent = formatFocus(state);
    if (state.camera !== null) {
      hudCamera.textContent = `distance ${state.camera.distance.toFixed(1)} nm`;
    }
    if (state.frame !== null) {
      slider.value = String(state.frame.header.scale.offset);
    }

    if (state.status === 'reconnecting') {
      banner.textContent = 'connection lost, reconnecting...';
      banner.hidden = false;
    } else if (state.lastError !== null) {
      banner.textContent = state.lastError;
      banner.hidden = false;
    } else {
      banner.hidden = true;
    }
  };

  const client = new SessionClient({
    url,
    width: canvas.width,
    height: canvas.height,
    onChange: repaint,
  });
  client.connect();

  canvas.addEventListener('wheel', (event) => {
    event.preventDefault();
    client.send(zoom(event.deltaY < 0 ? 1 : -1));
  });

  let dragging = false;
  let moved = 0;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener('pointerdown', (event) => {
    dragging = true;
    moved = 0;
    lastX = event.clientX;
    lastY = event.clientY;
    canvas.setPointerCapture(event.pointerId);
  });
  canvas.addEventListener('pointermove', (event) => {
    if (!dragging) {
      return;
    }
    const dx = event.clientX - lastX;
    const dy = event.clientY - lastY;
    lastX = event.clientX;
    lastY = event.clientY;
    moved += Math.abs(dx) + Math.abs(dy);
    if (moved > DRAG_THRESHOLD_PX) {
      client.send(orbit(dx * ORBIT_RADIANS_PER_PIXEL, dy * ORBIT_RADIANS_PER_PIXEL));
    }
  });
  canvas.addEventListener('pointerup', (event) => {
    canvas.releasePointerCapture(event.pointerId);
    if (dragging && moved <= DRAG_THRESHOLD_PX) {
      const rect = canvas.getBoundingClientRect();
      const x = Math.floor(((event.clientX - rect.left) / rect.width) * canvas.width);
      const y = Math.floor(((event.clientY - rect.top) / rect.height) * canvas.height);
      if (x >= 0 && x < canvas.width && y >= 0 && y < canvas.height) {
        client.send(pick(x, y));
      }
    }
    dragging = false;
  });

  slider.addEventListener('input', () => {
    client.send(setScaleOffset(Number(slider.value)));
  });
}

main();
