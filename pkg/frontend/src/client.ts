/**
 * Session client: owns the WebSocket, the one-in-flight command rule, and
 * the mirrored server state.
 *
 * The displayed frame is always the last state the server acknowledged.
 * The client never predicts geometry or camera poses locally; it sends a
 * command, waits for the reply, and repaints from what comes back. While a
 * reply is pending, further input coalesces in the queue.
 */

import { CommandQueue } from './queue.js';
import {
  CameraPose,
  Command,
  DecodedRenderList,
  FocusState,
  PickResult,
  ProtocolError,
  RenderListHeader,
  SessionInfo,
  decodeRenderList,
  hello,
  parseServerMessage,
} from './protocol.js';

/** The slice of the WebSocket API the client uses; injectable for tests. */
export interface SocketLike {
  binaryType: string;
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = 'connecting' | 'ready' | 'reconnecting' | 'closed';

/** Everything the UI needs to paint, updated in place as replies arrive. */
export interface ViewerState {
  status: ConnectionStatus;
  info: SessionInfo | null;
  /** Last successfully decoded frame; retained when a decode fails. */
  frame: DecodedRenderList | null;
  /** Camera pose echoed with the last frame. */
  camera: CameraPose | null;
  /** Focus echoed with the last frame. */
  focus: FocusState | null;
  /** Last pick reply, hit or miss. */
  pick: PickResult | null;
  /** Last server or protocol error; cleared by the next good frame. */
  lastError: string | null;
}

export interface SessionClientOptions {
  url: string;
  /** Viewport sent with hello. */
  width: number;
  height: number;
  /** Socket constructor; defaults to the browser WebSocket. */
  factory?: SocketFactory;
  /** Delay before reconnecting after an unexpected close. */
  reconnectDelayMs?: number;
  /** Called after every state change. */
  onChange?: (state: ViewerState) => void;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class SessionClient {
  readonly state: ViewerState = {
    status: 'connecting',
    info: null,
    frame: null,
    camera: null,
    focus: null,
    pick: null,
    lastError: null,
  };

  private readonly url: string;
  private readonly width: number;
  private readonly height: number;
  private readonly factory: SocketFactory;
  private readonly reconnectDelayMs: number;
  private readonly onChange: (state: ViewerState) => void;
  private readonly queue = new CommandQueue();

  private socket: SocketLike | null = null;
  private inFlightCommand: Command | null = null;
  private pendingHeader: RenderListHeader | null = null;
  private closedByUser = false;

  constructor(options: SessionClientOptions) {
    this.url = options.url;
    this.width = options.width;
    this.height = options.height;
    this.factory = options.factory ?? defaultFactory;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.onChange = options.onChange ?? (() => {});
  }

  /** Open the socket and start the hello handshake. */
  connect(): void {
    this.closedByUser = false;
    const socket = this.factory(this.url);
    socket.binaryType = 'arraybuffer';
    socket.onopen = () => this.handleOpen();
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onclose = () => this.handleClose();
    socket.onerror = () => {};
    this.socket = socket;
  }

  /** Close the socket and stop reconnecting. */
  close(): void {
    this.closedByUser = true;
    this.state.status = 'closed';
    this.socket?.close();
    this.socket = null;
    this.notify();
  }

  /** True while a command awaits its reply. */
  get busy(): boolean {
    return this.inFlightCommand !== null;
  }

  /** Commands queued behind the in-flight one. */
  get queued(): number {
    return this.queue.length;
  }

  /**
   * Send a command, or queue it when one is already in flight or the
   * connection is down. Queued camera motion coalesces.
   */
  send(command: Command): void {
    if (this.inFlightCommand === null && this.state.status === 'ready' && this.socket) {
      this.transmit(command);
    } else {
      this.queue.push(command);
    }
  }

  private transmit(command: Command): void {
    this.inFlightCommand = command;
    this.socket!.send(JSON.stringify(command));
  }

  private complete(): void {
    this.inFlightCommand = null;
    this.pendingHeader = null;
    const next = this.queue.next();
    if (next !== undefined && this.state.status === 'ready' && this.socket) {
      this.transmit(next);
    }
  }

  private notify(): void {
    this.onChange(this.state);
  }

  private handleOpen(): void {
    this.state.status = 'ready';
    this.transmit(hello(this.width, this.height));
    this.notify();
  }

  private handleClose(): void {
    this.socket = null;
    this.inFlightCommand = null;
    this.pendingHeader = null;
    if (this.closedByUser) {
      return;
    }
    this.state.status = 'reconnecting';
    this.notify();
    setTimeout(() => {
      if (!this.closedByUser && this.socket === null) {
        this.connect();
      }
    }, this.reconnectDelayMs);
  }

  private handleMessage(data: unknown): void {
    if (typeof data === 'string') {
      this.handleText(data);
    } else if (data instanceof ArrayBuffer) {
      this.handleBinary(data);
    } else {
      this.fail('server sent a frame of unexpected kind');
    }
    this.notify();
  }

  /** Record a protocol failure and unblock the queue. */
  private fail(message: string): void {
    this.state.lastError = message;
    this.complete();
  }

  private handleText(text: string): void {
    if (this.pendingHeader !== null) {
      this.fail('render_list header was not followed by its binary payload');
      return;
    }
    let message;
    try {
      message = parseServerMessage(text);
    } catch (err) {
      this.fail(err instanceof ProtocolError ? err.message : String(err));
      return;
    }
    switch (message.type) {
      case 'session_info':
        this.state.info = message;
        this.state.camera = message.camera;
        this.state.focus = message.focus;
        break;
      case 'error':
        this.state.lastError = message.message;
        this.complete();
        break;
      case 'pick_result':
        this.state.pick = message;
        if (message.hit === null) {
          this.complete();
        }
        break;
      case 'render_list':
        this.pendingHeader = message;
        break;
    }
  }

  private handleBinary(payload: ArrayBuffer): void {
    const header = this.pendingHeader;
    this.pendingHeader = null;
    if (header === null) {
      this.fail('binary frame arrived without a render_list header');
      return;
    }
    try {
      const frame = decodeRenderList(header, payload);
      this.state.frame = frame;
      this.state.camera = header.camera;
      this.state.focus = header.focus;
      this.state.lastError = null;
    } catch (err) {
      this.state.lastError = err instanceof ProtocolError ? err.message : String(err);
    }
    this.complete();
  }
}
