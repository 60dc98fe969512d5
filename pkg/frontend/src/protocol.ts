/**
 * Wire protocol for the genomelens session service.
 *
 * Mirrors the server's JSON reply shapes and the packed 24-byte instance
 * layout exactly. Nothing in this module invents semantics of its own: the
 * server computes every scale, scope, and color decision, and the viewer
 * only decodes what it is told.
 */

/** Bytes per packed instance on the wire. */
export const INSTANCE_BYTES = 24;

/** Role name to wire byte, matching the server's packing table. */
export const ROLE_CODES: Record<string, number> = {
  coarse_flat: 0,
  coarse_shaded: 1,
  links: 2,
  overlay_detail: 3,
};

/** Camera pose as echoed by the server on every frame. */
export interface CameraPose {
  eye: [number, number, number];
  target: [number, number, number];
  up: [number, number, number];
  fov_deg: number;
  width: number;
  height: number;
  distance: number;
}

/** Focus state as echoed by the server on every frame. */
export interface FocusState {
  chromosome: number;
  fiber: number;
  window: number[];
  point: [number, number, number];
}

/** One row of the representation schedule, straight from session_info. */
export interface ScheduleRowInfo {
  index: number;
  data_level: string;
  color_mode: string;
  scope_mode: string;
  semantic_name: string;
  transition_to_next: string;
}

/** Reply to hello: static dataset and session facts. */
export interface SessionInfo {
  type: 'session_info';
  format_version: number;
  version: string;
  unit: string;
  levels: Record<string, number>;
  schedule: ScheduleRowInfo[];
  viewport: [number, number];
  instance_cap: number;
  camera: CameraPose;
  focus: FocusState;
}

/** Per-batch directory entry in a render_list header. */
export interface BatchInfo {
  role: string;
  count: number;
  draw_order: number;
  ref_level: string;
}

/** Header text frame preceding each binary instance payload. */
export interface RenderListHeader {
  type: 'render_list';
  total: number;
  batches: BatchInfo[];
  scale: { s: number; offset: number; row: number; t: number };
  weights: {
    ssao_weight: number;
    coarse_alpha: number;
    overlay_alpha: number;
    color_mix: number;
  };
  stats: Record<string, number>;
  camera: CameraPose;
  focus: FocusState;
}

/** Hit payload inside a pick_result, null when the ray misses. */
export interface PickHit {
  level: string;
  index: number;
  depth: number;
  role: string;
}

/** Reply to a pick command. */
export interface PickResult {
  type: 'pick_result';
  hit: PickHit | null;
}

/** Reply to any rejected command; session state is unchanged. */
export interface ErrorReply {
  type: 'error';
  message: string;
}

export type ServerMessage = SessionInfo | RenderListHeader | PickResult | ErrorReply;

/** Raised when a frame contradicts its own header or a reply is malformed. */
export class ProtocolError extends Error {}

const MESSAGE_TYPES = new Set(['session_info', 'render_list', 'pick_result', 'error']);

/**
 * Parse a text frame from the server into a typed message.
 * Throws ProtocolError on anything that is not a known reply shape.
 */
export function parseServerMessage(text: string): ServerMessage {
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch {
    throw new ProtocolError('server sent a text frame that is not valid JSON');
  }
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    throw new ProtocolError('server reply is not a JSON object');
  }
  const type = (value as { type?: unknown }).type;
  if (typeof type !== 'string' || !MESSAGE_TYPES.has(type)) {
    throw new ProtocolError(`server reply has unknown type ${JSON.stringify(type)}`);
  }
  return value as ServerMessage;
}

/** One decoded batch; field arrays are indexed per instance. */
export interface DecodedBatch {
  role: string;
  drawOrder: number;
  refLevel: string;
  count: number;
  /** First instance's position in the shared payload, for stride-based draws. */
  firstInstance: number;
  positions: Float32Array;
  radii: Float32Array;
  colors: Uint8Array;
  ssao: Uint8Array;
  /** True when every alpha byte in the batch is 255. */
  opaque: boolean;
}

/** A fully decoded frame: header, per-batch arrays, and the raw payload. */
export interface DecodedRenderList {
  header: RenderListHeader;
  batches: DecodedBatch[];
  total: number;
  /** The untouched binary payload, suitable for direct GPU upload. */
  payload: ArrayBuffer;
}

/**
 * Decode a binary instance payload against its header.
 *
 * Validates that the payload length matches total * 24, that the batch
 * directory sums to the total, and that every instance's role byte agrees
 * with the batch it sits in. Batches come back in header order, which is
 * the server's draw order.
 */
export function decodeRenderList(header: RenderListHeader, payload: ArrayBuffer): DecodedRenderList {
  const expected = header.total * INSTANCE_BYTES;
  if (payload.byteLength !== expected) {
    throw new ProtocolError(
      `payload is ${payload.byteLength} bytes, header promises ${header.total} instances (${expected} bytes)`,
    );
  }
  const counted = header.batches.reduce((acc, b) => acc + b.count, 0);
  if (counted !== header.total) {
    throw new ProtocolError(`batch counts sum to ${counted}, header total is ${header.total}`);
  }

  const view = new DataView(payload);
  const batches: DecodedBatch[] = [];
  let first = 0;
  for (const info of header.batches) {
    const roleByte = ROLE_CODES[info.role];
    if (roleByte === undefined) {
      throw new ProtocolError(`unknown batch role ${JSON.stringify(info.role)}`);
    }
    const positions = new Float32Array(info.count * 3);
    const radii = new Float32Array(info.count);
    const colors = new Uint8Array(info.count * 4);
    const ssao = new Uint8Array(info.count);
    let opaque = true;
    for (let i = 0; i < info.count; i++) {
      const base = (first + i) * INSTANCE_BYTES;
      positions[i * 3] = view.getFloat32(base, true);
      positions[i * 3 + 1] = view.getFloat32(base + 4, true);
      positions[i * 3 + 2] = view.getFloat32(base + 8, true);
      radii[i] = view.getFloat32(base + 12, true);
      colors[i * 4] = view.getUint8(base + 16);
      colors[i * 4 + 1] = view.getUint8(base + 17);
      colors[i * 4 + 2] = view.getUint8(base + 18);
      colors[i * 4 + 3] = view.getUint8(base + 19);
      ssao[i] = view.getUint8(base + 20);
      if (colors[i * 4 + 3] !== 255) {
        opaque = false;
      }
      const role = view.getUint8(base + 21);
      if (role !== roleByte) {
        throw new ProtocolError(
          `instance ${first + i} carries role byte ${role}, batch ${JSON.stringify(info.role)} expects ${roleByte}`,
        );
      }
    }
    batches.push({
      role: info.role,
      drawOrder: info.draw_order,
      refLevel: info.ref_level,
      count: info.count,
      firstInstance: first,
      positions,
      radii,
      colors,
      ssao,
      opaque,
    });
    first += info.count;
  }
  return { header, batches, total: header.total, payload };
}

/** Commands the viewer can send; plain JSON objects with a type tag. */
export interface Command {
  type: string;
  [key: string]: unknown;
}

export function hello(width: number, height: number): Command {
  return { type: 'hello', width, height };
}

export function zoom(notches: number): Command {
  return { type: 'zoom', notches };
}

export function orbit(yaw: number, pitch: number): Command {
  return { type: 'orbit', yaw, pitch };
}

export function pick(x: number, y: number): Command {
  return { type: 'pick', x, y };
}

export function setScaleOffset(offset: number): Command {
  return { type: 'set_scale_offset', offset };
}

export function setFocusChromosome(chromosome: number): Command {
  return { type: 'set_focus_chromosome', chromosome };
}

export function setFocusFiber(fiber: number): Command {
  return { type: 'set_focus_fiber', fiber };
}

export function requestFrame(): Command {
  return { type: 'request_frame' };
}
