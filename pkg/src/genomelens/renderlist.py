"""Per-frame assembly of sphere-impostor instance batches.

assemble() turns (dataset, scale parameter, focus) into an ordered list of
render batches: a coarse layer from the current schedule row, optional
linker geometry at the nucleosome-detail row, and an overlay layer from the
next row restricted to the visible scope. Virtual levels are expanded from
the nucleosome frames and templates on demand; expansions and linker arcs
are cached per window on the dataset.

The wire layout (shared with the session service and the viewer) packs one
instance into 24 little-endian bytes: f32 x, y, z; f32 radius; u8 r, g, b, a;
u8 ssao weight; u8 batch role; u16 padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import colorsys
import numpy as np

from genomelens.config import DEFAULT_CONFIG, EngineConfig
from genomelens.model import DataLevel, ElementId, GenomeDataset, ancestors
from genomelens.scale import (
    SCHEDULE,
    LevelDraw,
    ScaleParam,
    ScheduleRow,
    TransitionWeights,
    draw_state,
    transition_weights,
)
from genomelens.scope import (
    FocusState,
    ScopeResult,
    chromosome_index_of,
    tint_gains,
    visible_scope,
)
from genomelens.synth import linker_points

ROLE_CODES: dict[str, int] = {
    "coarse_flat": 0,
    "coarse_shaded": 1,
    "links": 2,
    "overlay_detail": 3,
}

INSTANCE_DTYPE = np.dtype(
    [
        ("pos", "<f4", (3,)),
        ("radius", "<f4"),
        ("rgba", "u1", (4,)),
        ("ssao", "u1"),
        ("role", "u1"),
        ("pad", "<u2"),
    ]
)

INSTANCE_BYTES = 24

# Pseudo-sequence base classes, ordered so that 3 - class is the complement
# (A pairs T, G pairs C).
NT_BASES = ("A", "G", "C", "T")
NT_COLORS: dict[str, tuple[int, int, int]] = {
    "A": (44, 160, 44),
    "G": (255, 127, 14),
    "C": (31, 119, 180),
    "T": (214, 39, 40),
}
STRAND_SLOTS = 146

CPK_COLORS: dict[str, tuple[int, int, int]] = {
    "C": (0x90, 0x90, 0x90),
    "N": (0x30, 0x50, 0xF8),
    "O": (0xFF, 0x0D, 0x0D),
    "P": (0xFF, 0x80, 0x00),
    "H": (0xFF, 0xFF, 0xFF),
}
UNKNOWN_ELEMENT_COLOR = (200, 200, 200)

VDW_RADIUS_NM: dict[str, float] = {
    "H": 0.120,
    "C": 0.170,
    "N": 0.155,
    "O": 0.152,
    "P": 0.180,
}
MIN_ATOM_RADIUS_NM = 0.06

NUCLEOTIDE_RADIUS_NM = 1.0
RADIUS_SPACING_FACTOR = 0.4

GOLDEN_ANGLE_DEG = 137.508


class InstanceCapError(RuntimeError):
    """Raised when a frame would exceed the instance cap; never truncates."""

    def __init__(self, row: int, count: int, cap: int) -> None:
        super().__init__(
            f"schedule row {row} pushes the frame to {count} instances, over the cap of {cap}"
        )
        self.row = row
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class RenderBatch:
    """One homogeneous group of sphere instances."""

    role: str
    draw_order: int
    positions: np.ndarray  # (n, 3) float32, nm
    radii: np.ndarray  # (n,) float32, nm
    colors: np.ndarray  # (n, 4) uint8 RGBA; alpha already includes fades
    ssao_weight: float
    ref_level: DataLevel
    ref_index: np.ndarray  # (n,) int64 element indices at ref_level

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class RenderList:
    """Ordered batches plus the scale snapshot they were assembled under."""

    batches: tuple[RenderBatch, ...]
    scale: ScaleParam
    row: int
    t: float
    weights: TransitionWeights
    stats: dict[str, int]

    def total_instances(self) -> int:
        return sum(len(b) for b in self.batches)

    def pack(self) -> tuple[dict, bytes]:
        """Header dict plus the binary payload in the 24-byte wire layout."""
        total = self.total_instances()
        packed = np.zeros(total, dtype=INSTANCE_DTYPE)
        directory = []
        offset = 0
        for batch in self.batches:
            n = len(batch)
            part = packed[offset : offset + n]
            part["pos"] = batch.positions
            part["radius"] = batch.radii
            part["rgba"] = batch.colors
            part["ssao"] = int(round(batch.ssao_weight * 255.0))
            part["role"] = ROLE_CODES[batch.role]
            directory.append(
                {
                    "role": batch.role,
                    "count": n,
                    "draw_order": batch.draw_order,
                    "ref_level": batch.ref_level.name.lower(),
                }
            )
            offset += n
        header = {
            "total": total,
            "batches": directory,
            "scale": {
                "s": self.scale.s,
                "offset": self.scale.offset,
                "row": self.row,
                "t": self.t,
            },
            "weights": {
                "ssao_weight": self.weights.ssao_weight,
                "coarse_alpha": self.weights.coarse_alpha,
                "overlay_alpha": self.weights.overlay_alpha,
                "color_mix": self.weights.color_mix,
            },
            "stats": dict(self.stats),
        }
        return header, packed.tobytes()


def chromosome_palette(count: int) -> np.ndarray:
    """Golden-angle hue walk, one RGB row per chromosome."""
    out = np.empty((count, 3), dtype=np.uint8)
    for i in range(count):
        hue = (i * GOLDEN_ANGLE_DEG) % 360.0
        r, g, b = colorsys.hls_to_rgb(hue / 360.0, 0.55, 0.55)
        out[i] = (round(r * 255.0), round(g * 255.0), round(b * 255.0))
    return out


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 values."""
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def nucleotide_class(nt_index: np.ndarray | int) -> np.ndarray | int:
    """Pseudo-sequence base class (index into NT_BASES) per global nucleotide.

    The first strand hashes its own index; the paired strand (slots 146 and
    up within a nucleosome) takes the complement of its partner, so the two
    strands always agree base-for-base.
    """
    idx = np.atleast_1d(np.asarray(nt_index, dtype=np.uint64))
    slot = idx % np.uint64(2 * STRAND_SLOTS)
    paired = slot >= STRAND_SLOTS
    own = np.where(paired, idx - np.uint64(STRAND_SLOTS), idx)
    cls = (_splitmix64(own) & np.uint64(3)).astype(np.uint8)
    cls = np.where(paired, np.uint8(3) - cls, cls)
    if np.isscalar(nt_index) or np.ndim(nt_index) == 0:
        return int(cls[0])
    return cls


def _nt_class_palette() -> np.ndarray:
    return np.array([NT_COLORS[b] for b in NT_BASES], dtype=np.uint8)


def _element_ids(dataset: GenomeDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-atom (element id, color row, radius) arrays for the atom template."""
    cache = dataset._cache
    if "atom_element_tables" not in cache:
        symbols = sorted(set(dataset.atom_template.elements))
        colors = np.array(
            [CPK_COLORS.get(s, UNKNOWN_ELEMENT_COLOR) for s in symbols], dtype=np.uint8
        )
        radii = np.array(
            [max(VDW_RADIUS_NM.get(s, 0.0), MIN_ATOM_RADIUS_NM) for s in symbols],
            dtype=np.float32,
        )
        ids = np.array(
            [symbols.index(s) for s in dataset.atom_template.elements], dtype=np.intp
        )
        cache["atom_element_tables"] = (ids, colors, radii)
    return cache["atom_element_tables"]


def element_radius(level: DataLevel, dataset: GenomeDataset, element: str | None = None) -> float:
    """Sphere radius for one level: spacing-scaled, fixed, or van der Waals."""
    if level == DataLevel.NUCLEOTIDE:
        return NUCLEOTIDE_RADIUS_NM
    if level == DataLevel.ATOM:
        if element is None:
            raise ValueError("atom radius needs an element symbol")
        return max(VDW_RADIUS_NM.get(element, 0.0), MIN_ATOM_RADIUS_NM)
    return RADIUS_SPACING_FACTOR * dataset.stats[level]


def _dataset_palette(dataset: GenomeDataset) -> np.ndarray:
    if "chromosome_palette" not in dataset._cache:
        count = len(dataset.tables[DataLevel.CHROMOSOME])
        dataset._cache["chromosome_palette"] = chromosome_palette(count)
    return dataset._cache["chromosome_palette"]


def element_color(
    dataset: GenomeDataset,
    scope_row: int,
    elem: ElementId,
    color_mix: float = 0.0,
    config: EngineConfig = DEFAULT_CONFIG,
) -> tuple[int, int, int, int]:
    """Reference per-element color rule; assemble() vectorizes the same math.

    scope_row selects the coloring mode of the schedule row the element is
    rendered under; color_mix blends toward the next palette during the two
    color-change transitions (chromosome -> nucleotide, nucleotide -> element).
    """
    if scope_row == 0:
        rgb = np.array(config.nucleus_color, dtype=np.float64)
    else:
        path = ancestors(dataset, elem)
        chromosome = elem.index if elem.level == DataLevel.CHROMOSOME else path.chromosome
        assert chromosome is not None
        chrom_rgb = _dataset_palette(dataset)[chromosome].astype(np.float64)
        if scope_row <= 3:
            rgb = chrom_rgb
        else:
            nt_index = (
                elem.index
                if elem.level == DataLevel.NUCLEOTIDE
                else elem.index // len(dataset.atom_template)
            )
            nt_rgb = _nt_class_palette()[nucleotide_class(nt_index)].astype(np.float64)
            if scope_row <= 5:
                rgb = (1.0 - color_mix) * chrom_rgb + color_mix * nt_rgb
            else:
                symbol = dataset.atom_template.elements[elem.index % len(dataset.atom_template)]
                elem_rgb = np.array(
                    CPK_COLORS.get(symbol, UNKNOWN_ELEMENT_COLOR), dtype=np.float64
                )
                rgb = (1.0 - color_mix) * nt_rgb + color_mix * elem_rgb
    r, g, b = (int(v) for v in np.rint(np.clip(rgb, 0.0, 255.0)))
    return r, g, b, 255


def _window_nucleotide_positions(dataset: GenomeDataset, na: int, nb: int) -> np.ndarray:
    """World positions (W, S, 3) float64 of the window's nucleotides."""
    key = ("nt_world", na, nb)
    if key not in dataset._cache:
        origins = dataset.tables[DataLevel.NUCLEOSOME].positions[na:nb]
        axes = dataset.frames[na:nb]
        local = dataset.nucleotide_template.local_positions
        world = origins[:, None, :] + (
            local[None, :, 0, None] * axes[:, None, 0, :]
            + local[None, :, 1, None] * axes[:, None, 1, :]
            + local[None, :, 2, None] * axes[:, None, 2, :]
        )
        world.setflags(write=False)
        dataset._cache[key] = world
    return dataset._cache[key]


def _window_nucleotide_classes(dataset: GenomeDataset, na: int, nb: int) -> np.ndarray:
    """Base classes (W, S) uint8 of the window's nucleotides."""
    key = ("nt_class", na, nb)
    if key not in dataset._cache:
        s = len(dataset.nucleotide_template)
        idx = np.arange(na * s, nb * s, dtype=np.uint64)
        cls = np.asarray(nucleotide_class(idx)).reshape(nb - na, s)
        cls.setflags(write=False)
        dataset._cache[key] = cls
    return dataset._cache[key]


def _window_atom_positions(dataset: GenomeDataset, na: int, nb: int) -> np.ndarray:
    """World positions (W, S, A, 3) float32 of the window's atoms."""
    key = ("atom_world", na, nb)
    if key not in dataset._cache:
        nt_world = _window_nucleotide_positions(dataset, na, nb)
        axes = dataset.frames[na:nb]
        off = dataset.atom_template.offsets
        rotated = (
            off[None, :, 0, None] * axes[:, None, 0, :]
            + off[None, :, 1, None] * axes[:, None, 1, :]
            + off[None, :, 2, None] * axes[:, None, 2, :]
        )
        world = (nt_world[:, :, None, :] + rotated[:, None, :, :]).astype(np.float32)
        world.setflags(write=False)
        dataset._cache[key] = world
    return dataset._cache[key]


def _window_links(dataset: GenomeDataset, na: int, nb: int) -> tuple[np.ndarray, np.ndarray]:
    """Linker arc points between consecutive window nucleosomes.

    Returns (points (L, 3) float32, pair (L,) intp) where pair[i] is the
    window-relative index of the preceding nucleosome.
    """
    key = ("links", na, nb)
    if key not in dataset._cache:
        template = dataset.nucleotide_template
        origins = dataset.tables[DataLevel.NUCLEOSOME].positions[na:nb]
        axes = dataset.frames[na:nb]
        exits = origins + (
            template.exit_local[0] * axes[:, 0, :]
            + template.exit_local[1] * axes[:, 1, :]
            + template.exit_local[2] * axes[:, 2, :]
        )
        entries = origins + (
            template.entry_local[0] * axes[:, 0, :]
            + template.entry_local[1] * axes[:, 1, :]
            + template.entry_local[2] * axes[:, 2, :]
        )
        chunks: list[np.ndarray] = []
        pairs: list[np.ndarray] = []
        for j in range(nb - na - 1):
            pts = linker_points(
                exits[j], axes[j, 0], entries[j + 1], axes[j + 1, 0], template.linker_spacing
            )
            if len(pts):
                chunks.append(pts)
                pairs.append(np.full(len(pts), j, dtype=np.intp))
        if chunks:
            points = np.concatenate(chunks).astype(np.float32)
            pair = np.concatenate(pairs)
        else:
            points = np.empty((0, 3), dtype=np.float32)
            pair = np.empty(0, dtype=np.intp)
        points.setflags(write=False)
        pair.setflags(write=False)
        dataset._cache[key] = (points, pair)
    return dataset._cache[key]


def _fade_keep_slice(fade: np.ndarray) -> tuple[int, int]:
    """Contiguous [w0, w1) of nucleosomes with nonzero fade (zeros only at ends)."""
    w = len(fade)
    w0 = 1 if w and fade[0] == 0.0 else 0
    w1 = w - 1 if w > 1 and fade[-1] == 0.0 else w
    return w0, max(w0, w1)


def _alpha_bytes(alpha: float, fade: np.ndarray) -> np.ndarray:
    return np.rint(alpha * fade * 255.0).astype(np.uint8)


def _quantize_mix_lut(base: np.ndarray, target: np.ndarray, mix: float) -> np.ndarray:
    """uint8 LUT of (1-mix)*base[i] + mix*target[j] over all palette pairs."""
    blended = (1.0 - mix) * base.astype(np.float64)[:, None, :] + mix * target.astype(
        np.float64
    )[None, :, :]
    return np.rint(np.clip(blended, 0.0, 255.0)).astype(np.uint8)


def _stored_batch(
    dataset: GenomeDataset,
    entry: LevelDraw,
    sc: ScopeResult,
    role: str,
    draw_order: int,
    focus: FocusState,
    config: EngineConfig,
) -> RenderBatch:
    level = entry.level
    a, b = sc.ranges[level]
    n = b - a
    positions = dataset.tables[level].positions[a:b].astype(np.float32)
    radii = np.full(n, element_radius(level, dataset), dtype=np.float32)
    if entry.scope_row == 0:
        rgb = np.tile(np.array(config.nucleus_color, dtype=np.float64), (n, 1))
    else:
        palette = _dataset_palette(dataset)
        rgb = palette[chromosome_index_of(dataset, level)[a:b]].astype(np.float64)
    gains = tint_gains(dataset, entry.scope_row, level, a, b, focus, config)
    rgb *= gains[:, None]
    colors = np.empty((n, 4), dtype=np.uint8)
    colors[:, :3] = np.rint(np.clip(rgb, 0.0, 255.0))
    colors[:, 3] = int(round(entry.alpha * 255.0))
    return RenderBatch(
        role=role,
        draw_order=draw_order,
        positions=positions,
        radii=radii,
        colors=colors,
        ssao_weight=entry.ssao,
        ref_level=level,
        ref_index=np.arange(a, b, dtype=np.int64),
    )


def _nucleotide_batch(
    dataset: GenomeDataset,
    entry: LevelDraw,
    sc: ScopeResult,
    role: str,
    draw_order: int,
    config: EngineConfig,
) -> RenderBatch:
    na, nb = sc.ranges[DataLevel.NUCLEOSOME]
    fade = sc.fade if sc.fade is not None else np.ones(nb - na)
    w0, w1 = _fade_keep_slice(fade)
    s = len(dataset.nucleotide_template)
    world = _window_nucleotide_positions(dataset, na, nb)[w0:w1]
    classes = _window_nucleotide_classes(dataset, na, nb)[w0:w1]
    chroms = chromosome_index_of(dataset, DataLevel.NUCLEOSOME)[na + w0 : na + w1]
    lut = _quantize_mix_lut(_dataset_palette(dataset), _nt_class_palette(), entry.color_mix)
    rgb = lut[chroms[:, None], classes]
    n = (w1 - w0) * s
    colors = np.empty((n, 4), dtype=np.uint8)
    colors[:, :3] = rgb.reshape(n, 3)
    colors[:, 3] = np.repeat(_alpha_bytes(entry.alpha, fade[w0:w1]), s)
    return RenderBatch(
        role=role,
        draw_order=draw_order,
        positions=world.reshape(n, 3).astype(np.float32),
        radii=np.full(n, NUCLEOTIDE_RADIUS_NM, dtype=np.float32),
        colors=colors,
        ssao_weight=entry.ssao,
        ref_level=DataLevel.NUCLEOTIDE,
        ref_index=np.arange((na + w0) * s, (na + w1) * s, dtype=np.int64),
    )


def _atom_batch(
    dataset: GenomeDataset,
    entry: LevelDraw,
    sc: ScopeResult,
    role: str,
    draw_order: int,
    config: EngineConfig,
) -> RenderBatch:
    na, nb = sc.ranges[DataLevel.NUCLEOSOME]
    fade = sc.fade if sc.fade is not None else np.ones(nb - na)
    w0, w1 = _fade_keep_slice(fade)
    s = len(dataset.nucleotide_template)
    a_per = len(dataset.atom_template)
    world = _window_atom_positions(dataset, na, nb)[w0:w1]
    classes = _window_nucleotide_classes(dataset, na, nb)[w0:w1]
    elem_ids, elem_colors, elem_radii = _element_ids(dataset)
    lut = _quantize_mix_lut(_nt_class_palette(), elem_colors, entry.color_mix)
    rgb = lut[classes[:, :, None], elem_ids[None, None, :]]
    n = (w1 - w0) * s * a_per
    colors = np.empty((n, 4), dtype=np.uint8)
    colors[:, :3] = rgb.reshape(n, 3)
    colors[:, 3] = np.repeat(_alpha_bytes(entry.alpha, fade[w0:w1]), s * a_per)
    return RenderBatch(
        role=role,
        draw_order=draw_order,
        positions=world.reshape(n, 3),
        radii=np.tile(elem_radii[elem_ids], (w1 - w0) * s),
        colors=colors,
        ssao_weight=entry.ssao,
        ref_level=DataLevel.ATOM,
        ref_index=np.arange((na + w0) * s * a_per, (na + w1) * s * a_per, dtype=np.int64),
    )


def _links_batch(
    dataset: GenomeDataset,
    entry: LevelDraw,
    sc: ScopeResult,
    draw_order: int,
    config: EngineConfig,
) -> RenderBatch:
    na, nb = sc.ranges[DataLevel.NUCLEOSOME]
    fade = sc.fade if sc.fade is not None else np.ones(nb - na)
    points, pair = _window_links(dataset, na, nb)
    pair_fade = np.minimum(fade[:-1], fade[1:]) if nb - na > 1 else np.empty(0)
    keep = pair_fade[pair] > 0.0 if len(pair) else np.zeros(0, dtype=bool)
    points = points[keep]
    pair = pair[keep]
    n = len(points)
    chroms = chromosome_index_of(dataset, DataLevel.NUCLEOSOME)[na + pair]
    colors = np.empty((n, 4), dtype=np.uint8)
    colors[:, :3] = _dataset_palette(dataset)[chroms]
    colors[:, 3] = _alpha_bytes(entry.alpha, pair_fade[pair])
    return RenderBatch(
        role="links",
        draw_order=draw_order,
        positions=points,
        radii=np.full(n, NUCLEOTIDE_RADIUS_NM, dtype=np.float32),
        colors=colors,
        ssao_weight=1.0,
        ref_level=DataLevel.NUCLEOSOME,
        ref_index=np.asarray(na + pair, dtype=np.int64),
    )


def _planned_count(dataset: GenomeDataset, entry: LevelDraw, sc: ScopeResult) -> int:
    if not entry.level.is_virtual:
        a, b = sc.ranges[entry.level]
        return b - a
    na, nb = sc.ranges[DataLevel.NUCLEOSOME]
    fade = sc.fade if sc.fade is not None else np.ones(nb - na)
    w0, w1 = _fade_keep_slice(fade)
    count = (w1 - w0) * len(dataset.nucleotide_template)
    if entry.level == DataLevel.ATOM:
        count *= len(dataset.atom_template)
    return count


def assemble(
    dataset: GenomeDataset,
    scale: ScaleParam,
    focus: FocusState,
    config: EngineConfig = DEFAULT_CONFIG,
) -> RenderList:
    """Build the frame's render list for one scale parameter and focus.

    Pure function of its inputs: identical calls yield identical batches.
    Raises InstanceCapError before materializing any batch that would push
    the frame over the configured instance cap.
    """
    weights = transition_weights(scale, SCHEDULE, config)
    entries = draw_state(scale, SCHEDULE, config)
    planned = []
    total = 0
    for entry in entries:
        sc = visible_scope(dataset, entry.scope_row, focus, config)
        count = _planned_count(dataset, entry, sc)
        total += count
        if total > config.instance_cap:
            raise InstanceCapError(entry.scope_row, total, config.instance_cap)
        planned.append((entry, sc))

    batches: list[RenderBatch] = []
    stats = {"total": 0, "coarse": 0, "overlay": 0, "links": 0}
    for entry, sc in planned:
        if entry.role == "coarse":
            role = "coarse_shaded" if entry.ssao >= 1.0 else "coarse_flat"
            draw_order = 0
        else:
            role = "overlay_detail"
            draw_order = 2
        if not entry.level.is_virtual:
            batch = _stored_batch(dataset, entry, sc, role, draw_order, focus, config)
        elif entry.level == DataLevel.NUCLEOTIDE:
            batch = _nucleotide_batch(dataset, entry, sc, role, draw_order, config)
        else:
            batch = _atom_batch(dataset, entry, sc, role, draw_order, config)
        if len(batch):
            batches.append(batch)
            stats["overlay" if draw_order == 2 else "coarse"] += len(batch)
        if entry.role == "coarse" and entry.scope_row == 4 and sc.link_detail:
            links = _links_batch(dataset, entry, sc, 1, config)
            total += len(links)
            if total > config.instance_cap:
                raise InstanceCapError(entry.scope_row, total, config.instance_cap)
            if len(links):
                batches.append(links)
                stats["links"] += len(links)
    batches.sort(key=lambda b: b.draw_order)
    stats["total"] = sum(len(b) for b in batches)
    row, t = scale.effective(config)
    return RenderList(
        batches=tuple(batches),
        scale=scale,
        row=row,
        t=t,
        weights=weights,
        stats=stats,
    )
