/**
 * WebGL2 renderer: instanced camera-facing triangles, one per sphere.
 *
 * Each instance expands a single triangle that circumscribes the sphere's
 * screen disc; the fragment shader discards corners, shades the disc as a
 * sphere, and writes a corrected fragment depth so impostors interleave
 * correctly. Visual parity with the server's offline renderer is
 * approximate by design; what must hold exactly is structure: batches draw
 * in header order, coarse_flat draws unlit, and translucent batches do not
 * write depth.
 */

import { CameraPose, DecodedBatch, DecodedRenderList, INSTANCE_BYTES } from './protocol.js';

/** How one batch will be drawn; pure data, testable without a GL context. */
export interface DrawPlanEntry {
  role: string;
  firstInstance: number;
  count: number;
  /** Flat fill, no sphere shading (coarse_flat's ssao byte is zero anyway). */
  unlit: boolean;
  /** Opaque batches write depth; faded ones only test it. */
  depthWrite: boolean;
}

/**
 * Turn a decoded frame into an ordered list of draw calls.
 * Batch order is the server's draw order and is preserved as-is.
 */
export function buildDrawPlan(frame: DecodedRenderList): DrawPlanEntry[] {
  return frame.batches.map((batch: DecodedBatch) => ({
    role: batch.role,
    firstInstance: batch.firstInstance,
    count: batch.count,
    unlit: batch.role === 'coarse_flat',
    depthWrite: batch.opaque,
  }));
}

/** Corner offsets of a triangle circumscribing the unit circle. */
const CORNERS = new Float32Array([
  -Math.sqrt(3), -1,
  Math.sqrt(3), -1,
  0, 2,
]);

const VERTEX_SHADER = `#version 300 es
layout(location = 0) in vec2 a_corner;
layout(location = 1) in vec3 a_center;
layout(location = 2) in float a_radius;
layout(location = 3) in vec4 a_color;
layout(location = 4) in float a_ssao;

uniform mat4 u_view;
uniform mat4 u_proj;

out vec2 v_corner;
out vec4 v_color;
out float v_ssao;
out float v_viewZ;
out float v_radius;

void main() {
  vec4 center = u_view * vec4(a_center, 1.0);
  vec4 offset = vec4(a_corner * a_radius, 0.0, 0.0);
  gl_Position = u_proj * (center + offset);
  v_corner = a_corner;
  v_color = a_color;
  v_ssao = a_ssao;
  v_viewZ = center.z;
  v_radius = a_radius;
}
`;

const FRAGMENT_SHADER = `#version 300 es
precision highp float;

in vec2 v_corner;
in vec4 v_color;
in float v_ssao;
in float v_viewZ;
in float v_radius;

uniform float u_unlit;
uniform vec2 u_depthAB;

out vec4 outColor;

const vec3 LIGHT = normalize(vec3(0.4, 0.6, 0.7));

void main() {
  float r2 = dot(v_corner, v_corner);
  if (r2 > 1.0) {
    discard;
  }
  float nz = sqrt(1.0 - r2);
  vec3 normal = vec3(v_corner, nz);
  float lambert = max(dot(normal, LIGHT), 0.0);
  float shade = 0.30 + 0.70 * lambert;
  float lit = mix(1.0, shade, v_ssao * (1.0 - u_unlit));
  outColor = vec4(v_color.rgb * lit, v_color.a);

  float zEye = v_viewZ + nz * v_radius;
  float ndc = (u_depthAB.x * zEye + u_depthAB.y) / -zEye;
  gl_FragDepth = clamp(0.5 * ndc + 0.5, 0.0, 1.0);
}
`;

function compile(gl: WebGL2RenderingContext, kind: number, source: string): WebGLShader {
  const shader = gl.createShader(kind);
  if (shader === null) {
    throw new Error('failed to create shader');
  }
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
  }
  return shader;
}

/** Column-major look-at matrix using the server's camera basis. */
function viewMatrix(camera: CameraPose): Float32Array {
  const [ex, ey, ez] = camera.eye;
  const [tx, ty, tz] = camera.target;
  const [ux, uy, uz] = camera.up;
  let fx = tx - ex, fy = ty - ey, fz = tz - ez;
  const fl = Math.hypot(fx, fy, fz);
  fx /= fl; fy /= fl; fz /= fl;
  let rx = fy * uz - fz * uy, ry = fz * ux - fx * uz, rz = fx * uy - fy * ux;
  const rl = Math.hypot(rx, ry, rz);
  rx /= rl; ry /= rl; rz /= rl;
  const vx = ry * fz - rz * fy, vy = rz * fx - rx * fz, vz = rx * fy - ry * fx;
  return new Float32Array([
    rx, vx, -fx, 0,
    ry, vy, -fy, 0,
    rz, vz, -fz, 0,
    -(rx * ex + ry * ey + rz * ez),
    -(vx * ex + vy * ey + vz * ez),
    fx * ex + fy * ey + fz * ez,
    1,
  ]);
}

/** Column-major perspective matrix plus the (A, B) pair for depth rewrite. */
function projMatrix(camera: CameraPose): { matrix: Float32Array; depthAB: [number, number] } {
  const aspect = camera.width / camera.height;
  const f = 1.0 / Math.tan((camera.fov_deg * Math.PI) / 360.0);
  const near = Math.max(1e-6, 1e-3 * camera.distance);
  const far = 1e4 * near;
  const a = -(far + near) / (far - near);
  const b = (-2 * far * near) / (far - near);
  return {
    matrix: new Float32Array([
      f / aspect, 0, 0, 0,
      0, f, 0, 0,
      0, 0, a, -1,
      0, 0, b, 0,
    ]),
    depthAB: [a, b],
  };
}

export class Renderer {
  private readonly gl: WebGL2RenderingContext;
  private readonly program: WebGLProgram;
  private readonly cornerBuffer: WebGLBuffer;
  private readonly instanceBuffer: WebGLBuffer;
  private readonly uView: WebGLUniformLocation;
  private readonly uProj: WebGLUniformLocation;
  private readonly uUnlit: WebGLUniformLocation;
  private readonly uDepthAB: WebGLUniformLocation;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const gl = canvas.getContext('webgl2');
    if (gl === null) {
      throw new Error('WebGL2 is not available');
    }
    this.gl = gl;

    const program = gl.createProgram();
    if (program === null) {
      throw new Error('failed to create program');
    }
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERTEX_SHADER));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    this.program = program;

    const locate = (name: string): WebGLUniformLocation => {
      const loc = gl.getUniformLocation(program, name);
      if (loc === null) {
        throw new Error(`uniform ${name} not found`);
      }
      return loc;
    };
    this.uView = locate('u_view');
    this.uProj = locate('u_proj');
    this.uUnlit = locate('u_unlit');
    this.uDepthAB = locate('u_depthAB');

    this.cornerBuffer = gl.createBuffer()!;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.cornerBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, CORNERS, gl.STATIC_DRAW);
    this.instanceBuffer = gl.createBuffer()!;

    gl.enable(gl.DEPTH_TEST);
    gl.enable(gl.BLEND);
    gl.blendFuncSeparate(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA, gl.ONE, gl.ONE_MINUS_SRC_ALPHA);
  }

  /** Draw a frame, or clear to white when it is null or empty. */
  draw(frame: DecodedRenderList | null, camera: CameraPose | null): void {
    const gl = this.gl;
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.depthMask(true);
    gl.clearColor(1, 1, 1, 1);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (frame === null || frame.total === 0 || camera === null) {
      return;
    }

    gl.useProgram(this.program);
    gl.uniformMatrix4fv(this.uView, false, viewMatrix(camera));
    const proj = projMatrix(camera);
    gl.uniformMatrix4fv(this.uProj, false, proj.matrix);
    gl.uniform2f(this.uDepthAB, proj.depthAB[0], proj.depthAB[1]);

    gl.bindBuffer(gl.ARRAY_BUFFER, this.cornerBuffer);
    gl.enableVertexAttribArray(0);
    gl.vertexAttribPointer(0, 2, gl.FLOAT, false, 0, 0);
    gl.vertexAttribDivisor(0, 0);

    gl.bindBuffer(gl.ARRAY_BUFFER, this.instanceBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, frame.payload, gl.DYNAMIC_DRAW);
    for (const index of [1, 2, 3, 4]) {
      gl.enableVertexAttribArray(index);
      gl.vertexAttribDivisor(index, 1);
    }

    for (const entry of buildDrawPlan(frame)) {
      if (entry.count === 0) {
        continue;
      }
      const base = entry.firstInstance * INSTANCE_BYTES;
      gl.vertexAttribPointer(1, 3, gl.FLOAT, false, INSTANCE_BYTES, base);
      gl.vertexAttribPointer(2, 1, gl.FLOAT, false, INSTANCE_BYTES, base + 12);
      gl.vertexAttribPointer(3, 4, gl.UNSIGNED_BYTE, true, INSTANCE_BYTES, base + 16);
      gl.vertexAttribPointer(4, 1, gl.UNSIGNED_BYTE, true, INSTANCE_BYTES, base + 20);
      gl.uniform1f(this.uUnlit, entry.unlit ? 1.0 : 0.0);
      gl.depthMask(entry.depthWrite);
      gl.drawArraysInstanced(gl.TRIANGLES, 0, 3, entry.count);
    }
    gl.depthMask(true);
  }
}
