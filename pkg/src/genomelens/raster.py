"""Deterministic CPU reference renderer for render lists.

Spheres are rasterized as ray-traced impostors: each instance claims a
conservative pixel rectangle, every covered pixel solves the exact
ray-sphere intersection, and the nearest hit per pixel wins within a batch.
Batches composite in draw order over a white canvas, so a flattened coarse
layer sits beneath shaded overlay detail. The same intersection math drives
picking, which is brute force over all instances and ignores raster culls.

Output is bit-exact for identical inputs: per-pixel winners are chosen by a
64-bit (depth, color) key whose minimum is independent of instance order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from genomelens.model import DataLevel, ElementId
from genomelens.renderlist import RenderBatch, RenderList

DEFAULT_VIEW_DIR = (0.3, 0.25, 1.0)
DEFAULT_FOV_DEG = 60.0

_LIGHT_DIR = np.array((0.4, 0.6, 0.7), dtype=np.float64)
_LIGHT_DIR /= np.linalg.norm(_LIGHT_DIR)

_AMBIENT_SHARE = 0.30
_LAMBERT_SHARE = 0.70

MIN_PIXEL_RADIUS = 0.25
PICK_ALPHA_THRESHOLD = 128
_CHUNK_CANDIDATES = 2_000_000
_KEY_EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class CameraPose:
    """Perspective camera: eye/target/up in nm, vertical FOV, pixel viewport."""

    eye: tuple[float, float, float]
    target: tuple[float, float, float]
    up: tuple[float, float, float]
    fov_deg: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.eye == self.target:
            raise ValueError("camera eye must differ from target")
        if not 0.0 < self.fov_deg < 120.0:
            raise ValueError("vertical FOV must be in (0, 120) degrees")
        if self.width < 1 or self.height < 1:
            raise ValueError("viewport must be at least 1x1")

    @property
    def distance(self) -> float:
        e = np.asarray(self.eye) - np.asarray(self.target)
        return float(np.linalg.norm(e))


@dataclass(frozen=True)
class PickHit:
    """Nearest picked instance: its element identity, ray depth, batch role."""

    element: ElementId
    depth: float
    role: str


def camera_for(
    target: tuple[float, float, float] | np.ndarray,
    distance: float,
    width: int,
    height: int,
    fov_deg: float = DEFAULT_FOV_DEG,
    view_dir: tuple[float, float, float] = DEFAULT_VIEW_DIR,
) -> CameraPose:
    """Standard pose looking at `target` from `distance` along the default axis."""
    if distance <= 0.0:
        raise ValueError("camera distance must be positive")
    d = np.asarray(view_dir, dtype=np.float64)
    d = d / np.linalg.norm(d)
    t = np.asarray(target, dtype=np.float64)
    eye = t + distance * d
    return CameraPose(
        eye=(float(eye[0]), float(eye[1]), float(eye[2])),
        target=(float(t[0]), float(t[1]), float(t[2])),
        up=(0.0, 1.0, 0.0),
        fov_deg=fov_deg,
        width=width,
        height=height,
    )


def _basis(cam: CameraPose) -> tuple[np.ndarray, np.ndarray, float, float]:
    """(eye, rows [right, up, forward], focal length in pixels, near plane)."""
    eye = np.asarray(cam.eye, dtype=np.float64)
    target = np.asarray(cam.target, dtype=np.float64)
    fwd = target - eye
    dist = np.linalg.norm(fwd)
    fwd = fwd / dist
    up_hint = np.asarray(cam.up, dtype=np.float64)
    right = np.cross(fwd, up_hint)
    norm = np.linalg.norm(right)
    if norm < 1e-12:
        raise ValueError("camera up is parallel to the view direction")
    right = right / norm
    up = np.cross(right, fwd)
    f_px = (cam.height / 2.0) / math.tan(math.radians(cam.fov_deg) / 2.0)
    near = max(1e-6, 1e-3 * dist)
    return eye, np.stack([right, up, fwd]), f_px, near


def _pixel_dirs(width: int, height: int, f_px: float) -> np.ndarray:
    """Normalized camera-space ray directions per pixel, shape (H*W, 3)."""
    xs = (np.arange(width, dtype=np.float64) + 0.5 - width / 2.0) / f_px
    ys = (height / 2.0 - (np.arange(height, dtype=np.float64) + 0.5)) / f_px
    u = np.repeat(ys, width)
    v = np.tile(xs, height)
    dirs = np.empty((height * width, 3), dtype=np.float64)
    dirs[:, 0] = v
    dirs[:, 1] = u
    dirs[:, 2] = 1.0
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs


def _pixel_dir(cam: CameraPose, x: int, y: int, f_px: float) -> np.ndarray:
    u = (x + 0.5 - cam.width / 2.0) / f_px
    v = (cam.height / 2.0 - (y + 0.5)) / f_px
    d = np.array((u, v, 1.0), dtype=np.float64)
    return d / np.linalg.norm(d)


def _camera_space(batch: RenderBatch, eye: np.ndarray, rot: np.ndarray) -> np.ndarray:
    return (batch.positions.astype(np.float64) - eye) @ rot.T


def _screen_interval(
    c_lo: np.ndarray, c_hi: np.ndarray, den_lo: np.ndarray, den_hi: np.ndarray, f_px: float
) -> tuple[np.ndarray, np.ndarray]:
    """Conservative projected interval of num/den over a [lo,hi]x[lo,hi] box."""
    lo = f_px * np.minimum(c_lo / den_lo, c_lo / den_hi)
    hi = f_px * np.maximum(c_hi / den_lo, c_hi / den_hi)
    return lo, hi


def _shade_factor(normals: np.ndarray, ssao_weight: float) -> np.ndarray:
    hemi = 0.5 + 0.5 * normals[:, 1]
    lambert = np.maximum(normals @ _LIGHT_DIR, 0.0)
    lit = _AMBIENT_SHARE * hemi + _LAMBERT_SHARE * lambert
    return (1.0 - ssao_weight) + ssao_weight * lit


def _rasterize_batch(
    batch: RenderBatch,
    centers: np.ndarray,
    dirs: np.ndarray,
    f_px: float,
    near: float,
    width: int,
    height: int,
) -> np.ndarray:
    """Per-pixel u64 (depth, rgba) keys for one batch; empty pixels hold the sentinel."""
    keys = np.full(height * width, _KEY_EMPTY, dtype=np.uint64)
    cx, cy, cz = centers[:, 0], centers[:, 1], centers[:, 2]
    radius = batch.radii.astype(np.float64)
    visible = cz - radius > near
    visible &= f_px * radius >= MIN_PIXEL_RADIUS * cz
    if not np.any(visible):
        return keys
    idx = np.flatnonzero(visible)
    cx, cy, cz, radius = cx[idx], cy[idx], cz[idx], radius[idx]
    den_lo, den_hi = cz - radius, cz + radius
    x_lo, x_hi = _screen_interval(cx - radius, cx + radius, den_lo, den_hi, f_px)
    y_lo, y_hi = _screen_interval(cy - radius, cy + radius, den_lo, den_hi, f_px)
    # Continuous screen coords -> inclusive pixel index rects (y axis flips).
    px0 = np.maximum(np.ceil(x_lo + width / 2.0 - 0.5).astype(np.int64) - 1, 0)
    px1 = np.minimum(np.floor(x_hi + width / 2.0 - 0.5).astype(np.int64) + 1, width - 1)
    py0 = np.maximum(np.ceil(height / 2.0 - y_hi - 0.5).astype(np.int64) - 1, 0)
    py1 = np.minimum(np.floor(height / 2.0 - y_lo - 0.5).astype(np.int64) + 1, height - 1)
    on_screen = (px0 <= px1) & (py0 <= py1)
    if not np.any(on_screen):
        return keys
    keep = np.flatnonzero(on_screen)
    idx = idx[keep]
    cx, cy, cz, radius = cx[keep], cy[keep], cz[keep], radius[keep]
    px0, px1, py0, py1 = px0[keep], px1[keep], py0[keep], py1[keep]

    center_sq = cx * cx + cy * cy + cz * cz - radius * radius
    base_rgb = batch.colors[idx, :3].astype(np.float64)
    alpha_byte = batch.colors[idx, 3].astype(np.uint64)

    areas = (px1 - px0 + 1) * (py1 - py0 + 1)
    bounds = np.concatenate(([0], np.cumsum(areas)))
    start = 0
    n = len(idx)
    while start < n:
        stop = int(np.searchsorted(bounds, bounds[start] + _CHUNK_CANDIDATES, side="left"))
        stop = max(stop, start + 1)
        stop = min(stop, n)
        sl = slice(start, stop)
        area = areas[sl]
        total = int(area.sum())
        rep = np.repeat(np.arange(start, stop), area)
        offset = np.arange(total, dtype=np.int64) - np.repeat(
            bounds[sl] - bounds[start], area
        )
        w_rep = np.repeat(px1[sl] - px0[sl] + 1, area)
        dx = offset % w_rep
        dy = offset // w_rep
        pix = (np.repeat(py0[sl], area) + dy) * width + np.repeat(px0[sl], area) + dx

        d = dirs[pix]
        mx, my, mz = cx[rep], cy[rep], cz[rep]
        b = mx * d[:, 0] + my * d[:, 1] + mz * d[:, 2]
        disc = b * b - center_sq[rep]
        hit = disc >= 0.0
        t = b - np.sqrt(np.maximum(disc, 0.0))
        hit &= t > near
        if np.any(hit):
            rep_h = rep[hit]
            pix_h = pix[hit]
            t_h = t[hit]
            normals = (t_h[:, None] * d[hit] - centers[idx[rep_h]]) / radius[rep_h][:, None]
            factor = _shade_factor(normals, batch.ssao_weight)
            rgb = np.rint(np.clip(base_rgb[rep_h] * factor[:, None], 0.0, 255.0)).astype(
                np.uint64
            )
            packed = (rgb[:, 0] << np.uint64(24)) | (rgb[:, 1] << np.uint64(16)) | (
                rgb[:, 2] << np.uint64(8)
            ) | alpha_byte[rep_h]
            depth_bits = t_h.astype(np.float32).view(np.uint32).astype(np.uint64)
            key = (depth_bits << np.uint64(32)) | packed
            order = np.lexsort((key, pix_h))
            pix_s = pix_h[order]
            key_s = key[order]
            first = np.ones(len(pix_s), dtype=bool)
            first[1:] = pix_s[1:] != pix_s[:-1]
            winners = pix_s[first]
            keys[winners] = np.minimum(keys[winners], key_s[first])
        start = stop
    return keys


def render(rlist: RenderList, cam: CameraPose) -> np.ndarray:
    """Rasterize to an (H, W, 4) uint8 image over a white background."""
    eye, rot, f_px, near = _basis(cam)
    width, height = cam.width, cam.height
    dirs = _pixel_dirs(width, height, f_px)
    canvas = np.full((height * width, 3), 255.0, dtype=np.float64)
    for batch in rlist.batches:
        if not len(batch):
            continue
        centers = _camera_space(batch, eye, rot)
        keys = _rasterize_batch(batch, centers, dirs, f_px, near, width, height)
        covered = keys != _KEY_EMPTY
        if not np.any(covered):
            continue
        packed = keys[covered] & np.uint64(0xFFFFFFFF)
        rgb = np.empty((len(packed), 3), dtype=np.float64)
        rgb[:, 0] = (packed >> np.uint64(24)) & np.uint64(255)
        rgb[:, 1] = (packed >> np.uint64(16)) & np.uint64(255)
        rgb[:, 2] = (packed >> np.uint64(8)) & np.uint64(255)
        alpha = ((packed & np.uint64(255)) / 255.0)[:, None]
        canvas[covered] = (1.0 - alpha) * canvas[covered] + alpha * rgb
    image = np.empty((height, width, 4), dtype=np.uint8)
    image[:, :, :3] = np.rint(canvas).astype(np.uint8).reshape(height, width, 3)
    image[:, :, 3] = 255
    return image


def pick(rlist: RenderList, cam: CameraPose, x: int, y: int) -> PickHit | None:
    """Exact nearest-hit query at one pixel; faded instances are not pickable.

    Ties on depth break by batch order, then instance index, so the result
    is deterministic for any instance ordering.
    """
    if not (0 <= x < cam.width and 0 <= y < cam.height):
        raise ValueError("pick pixel outside the viewport")
    eye, rot, f_px, near = _basis(cam)
    d = _pixel_dir(cam, x, y, f_px)
    best: tuple[float, int, int] | None = None
    best_batch: RenderBatch | None = None
    for order, batch in enumerate(rlist.batches):
        if not len(batch):
            continue
        pickable = batch.colors[:, 3] >= PICK_ALPHA_THRESHOLD
        if not np.any(pickable):
            continue
        centers = _camera_space(batch, eye, rot)
        b = centers @ d
        disc = b * b - (np.einsum("ij,ij->i", centers, centers) - batch.radii.astype(np.float64) ** 2)
        t = b - np.sqrt(np.maximum(disc, 0.0))
        valid = pickable & (disc >= 0.0) & (t > near)
        if not np.any(valid):
            continue
        t = np.where(valid, t, np.inf)
        i = int(np.argmin(t))
        candidate = (float(t[i]), order, i)
        if best is None or candidate < best:
            best = candidate
            best_batch = batch
    if best is None or best_batch is None:
        return None
    depth, _, i = best
    return PickHit(
        element=ElementId(best_batch.ref_level, int(best_batch.ref_index[i])),
        depth=depth,
        role=best_batch.role,
    )


def write_image(image: np.ndarray, path: str) -> None:
    """Write an (H, W, 3|4) uint8 image as binary PPM (P6)."""
    if image.ndim != 3 or image.shape[2] not in (3, 4):
        raise ValueError("expected an (H, W, 3|4) image")
    height, width = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image[:, :, :3]).tobytes())


def read_image(path: str) -> np.ndarray:
    """Read a binary PPM (P6) written by write_image back into (H, W, 3)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError(f"{path}: not a P6 image with 8-bit depth")
    width, height = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=height * width * 3)
    return pixels.reshape(height, width, 3).copy()
