/**
 * Outbound command queue with coalescing.
 *
 * The session protocol allows one in-flight command at a time, so input
 * that arrives while a reply is pending gets queued. Camera motion is
 * coalesced: a burst of wheel or drag events collapses into one command
 * rather than a backlog the server would replay long after the gesture
 * ended. Discrete commands (pick, focus changes, hello) never merge.
 */

import { Command } from './protocol.js';

/** Merge an incoming command into the last queued one of the same type. */
function merge(last: Command, next: Command): boolean {
  switch (next.type) {
    case 'orbit':
      last.yaw = ((last.yaw as number) ?? 0) + ((next.yaw as number) ?? 0);
      last.pitch = ((last.pitch as number) ?? 0) + ((next.pitch as number) ?? 0);
      return true;
    case 'zoom':
      last.notches = ((last.notches as number) ?? 0) + ((next.notches as number) ?? 0);
      return true;
    case 'set_scale_offset':
    case 'set_camera':
      Object.assign(last, next);
      return true;
    default:
      return false;
  }
}

export class CommandQueue {
  private items: Command[] = [];

  /** Queue a command, coalescing into the tail when the types match. */
  push(command: Command): void {
    const last = this.items[this.items.length - 1];
    if (last !== undefined && last.type === command.type && merge(last, command)) {
      return;
    }
    this.items.push({ ...command });
  }

  /** Remove and return the oldest queued command, or undefined when empty. */
  next(): Command | undefined {
    return this.items.shift();
  }

  get length(): number {
    return this.items.length;
  }

  clear(): void {
    this.items = [];
  }
}
