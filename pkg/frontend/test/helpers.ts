/**
 * Test helpers: hand-packed wire frames built independently of the decoder,
 * so the tests assert the layout rather than echo the implementation.
 */

import {
  BatchInfo,
  CameraPose,
  FocusState,
  INSTANCE_BYTES,
  RenderListHeader,
  ROLE_CODES,
} from '../src/protocol.js';

export interface InstanceSpec {
  pos: [number, number, number];
  radius: number;
  rgba: [number, number, number, number];
  ssao: number;
  /** Role byte override; defaults to the batch's role code. */
  roleByte?: number;
}

export interface BatchSpec {
  role: string;
  instances: InstanceSpec[];
  drawOrder?: number;
  refLevel?: string;
}

export function cameraPose(overrides: Partial<CameraPose> = {}): CameraPose {
  return {
    eye: [0, 0, 12000],
    target: [0, 0, 0],
    up: [0, 1, 0],
    fov_deg: 40,
    width: 320,
    height: 240,
    distance: 12000,
    ...overrides,
  };
}

export function focusState(overrides: Partial<FocusState> = {}): FocusState {
  return {
    chromosome: 0,
    fiber: 5,
    window: [3, 4, 5, 6, 7],
    point: [100, 200, 300],
    ...overrides,
  };
}

/** Build a header whose directory matches the given batch specs. */
export function makeHeader(batches: BatchSpec[], overrides: Partial<RenderListHeader> = {}): RenderListHeader {
  const directory: BatchInfo[] = batches.map((spec, i) => ({
    role: spec.role,
    count: spec.instances.length,
    draw_order: spec.drawOrder ?? i,
    ref_level: spec.refLevel ?? 'nucleosome',
  }));
  const total = directory.reduce((acc, b) => acc + b.count, 0);
  return {
    type: 'render_list',
    total,
    batches: directory,
    scale: { s: 3.5, offset: 0, row: 3, t: 0.5 },
    weights: { ssao_weight: 1, coarse_alpha: 1, overlay_alpha: 0, color_mix: 0 },
    stats: { total, coarse: total, overlay: 0, links: 0 },
    camera: cameraPose(),
    focus: focusState(),
    ...overrides,
  };
}

/** Pack instances into the 24-byte wire layout, little-endian. */
export function packInstances(batches: BatchSpec[]): ArrayBuffer {
  const total = batches.reduce((acc, b) => acc + b.instances.length, 0);
  const buffer = new ArrayBuffer(total * INSTANCE_BYTES);
  const view = new DataView(buffer);
  let i = 0;
  for (const batch of batches) {
    const roleByte = ROLE_CODES[batch.role] ?? 0;
    for (const inst of batch.instances) {
      const base = i * INSTANCE_BYTES;
      view.setFloat32(base, inst.pos[0], true);
      view.setFloat32(base + 4, inst.pos[1], true);
      view.setFloat32(base + 8, inst.pos[2], true);
      view.setFloat32(base + 12, inst.radius, true);
      view.setUint8(base + 16, inst.rgba[0]);
      view.setUint8(base + 17, inst.rgba[1]);
      view.setUint8(base + 18, inst.rgba[2]);
      view.setUint8(base + 19, inst.rgba[3]);
      view.setUint8(base + 20, inst.ssao);
      view.setUint8(base + 21, inst.roleByte ?? roleByte);
      view.setUint16(base + 22, 0xbeef, true);
      i += 1;
    }
  }
  return buffer;
}

/** A plain opaque instance with distinct, exactly representable values. */
export function instance(seed: number, overrides: Partial<InstanceSpec> = {}): InstanceSpec {
  return {
    pos: [seed + 0.5, -seed - 0.25, seed * 2],
    radius: seed + 1.5,
    rgba: [(seed * 37) % 256, (seed * 59) % 256, (seed * 83) % 256, 255],
    ssao: (seed * 29) % 256,
    ...overrides,
  };
}
