"""Scale schedule, camera-distance mapping, and transition blend weights.

The eight-row schedule maps the continuous scale parameter s in [0, 7] to a
data level, a coloring, a scope rule, and the transition style toward the
next row. A row's fractional phase t drives either a visual embedding
(flatten coarse, overlay detail, fade coarse) or a color change (same
geometry, colors remixed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from genomelens.config import DEFAULT_CONFIG, EngineConfig
from genomelens.model import DataLevel

N_ROWS = 8

EMBEDDING = "visual_embedding"
COLOR_CHANGE = "color_change"
NO_TRANSITION = "none"

SCOPE_ALL = "all"
SCOPE_FOCUS_CHROMOSOME = "focus_chromosome"
SCOPE_FOCUS_WINDOW = "focus_window"

COLOR_SINGLE = "single"
COLOR_BY_CHROMOSOME = "by_chromosome"
COLOR_BY_NUCLEOTIDE = "by_nucleotide"
COLOR_BY_ELEMENT = "by_element"


@dataclass(frozen=True)
class ScheduleRow:
    index: int
    data_level: DataLevel
    color_mode: str
    scope_mode: str
    semantic_name: str
    transition_to_next: str


SCHEDULE: tuple[ScheduleRow, ...] = (
    ScheduleRow(0, DataLevel.CHROMOSOME, COLOR_SINGLE, SCOPE_ALL, "nucleus", EMBEDDING),
    ScheduleRow(1, DataLevel.LOCUS, COLOR_BY_CHROMOSOME, SCOPE_ALL, "chromosome", EMBEDDING),
    ScheduleRow(2, DataLevel.FIBER, COLOR_BY_CHROMOSOME, SCOPE_ALL, "chromosome with detail", EMBEDDING),
    ScheduleRow(3, DataLevel.NUCLEOSOME, COLOR_BY_CHROMOSOME, SCOPE_FOCUS_CHROMOSOME, "fibers", EMBEDDING),
    ScheduleRow(4, DataLevel.NUCLEOTIDE, COLOR_BY_CHROMOSOME, SCOPE_FOCUS_WINDOW, "nucleosomes", COLOR_CHANGE),
    ScheduleRow(5, DataLevel.NUCLEOTIDE, COLOR_BY_NUCLEOTIDE, SCOPE_FOCUS_WINDOW, "nucleotides", EMBEDDING),
    ScheduleRow(6, DataLevel.ATOM, COLOR_BY_NUCLEOTIDE, SCOPE_FOCUS_WINDOW, "nucleotides with detail", COLOR_CHANGE),
    ScheduleRow(7, DataLevel.ATOM, COLOR_BY_ELEMENT, SCOPE_FOCUS_WINDOW, "individual atoms", NO_TRANSITION),
)


@dataclass(frozen=True)
class ScaleParam:
    """Global scale parameter plus the user's representation offset."""

    s: float
    offset: float = 0.0

    def effective(self, config: EngineConfig = DEFAULT_CONFIG) -> tuple[int, float]:
        """(row, phase t) after applying the offset."""
        limit = config.offset_limit
        u = self.s + max(-limit, min(limit, self.offset))
        row = int(max(0, min(N_ROWS - 1, math.floor(u))))
        t = max(0.0, min(1.0, u - row))
        return row, t


@dataclass(frozen=True)
class CameraScaleConfig:
    """Reference viewing distances: geometric schedule from d0 down to d7."""

    d0: float = DEFAULT_CONFIG.d0_nm
    d7: float = DEFAULT_CONFIG.d7_nm

    def __post_init__(self) -> None:
        if not (0.0 < self.d7 < self.d0):
            raise ValueError("require 0 < d7 < d0")

    @classmethod
    def from_engine(cls, config: EngineConfig) -> "CameraScaleConfig":
        return cls(d0=config.d0_nm, d7=config.d7_nm)

    def row_distance(self, k: float) -> float:
        return self.d0 * (self.d7 / self.d0) ** (k / (N_ROWS - 1))


@dataclass(frozen=True)
class TransitionWeights:
    """Blend weights for a (row, t) pair; see transition_weights."""

    row: int
    t: float
    ssao_weight: float
    coarse_alpha: float
    overlay_alpha: float
    color_mix: float


@dataclass(frozen=True)
class LevelDraw:
    """One data level's draw parameters: the role-free form of the weights.

    `scope_row` names the schedule row whose scope rule and coloring govern
    this entry (the overlay of row k is row k+1's representation arriving).
    """

    level: DataLevel
    role: str  # "coarse" | "overlay"
    scope_row: int
    alpha: float
    ssao: float
    color_mix: float


def scale_from_distance(d: float, cfg: CameraScaleConfig = CameraScaleConfig()) -> float:
    """Map camera distance to the global scale parameter, clamped to [0, 7]."""
    if d <= 0:
        raise ValueError("distance must be positive")
    s = (N_ROWS - 1) * (math.log(cfg.d0) - math.log(d)) / (math.log(cfg.d0) - math.log(cfg.d7))
    return max(0.0, min(float(N_ROWS - 1), s))


def distance_from_scale(s: float, cfg: CameraScaleConfig = CameraScaleConfig()) -> float:
    """Inverse of scale_from_distance on [0, 7]."""
    if not (0.0 <= s <= N_ROWS - 1):
        raise ValueError("scale must be within [0, 7]")
    return cfg.row_distance(s)


def camera_speed(d: float, coeff: float = DEFAULT_CONFIG.zoom_coeff) -> float:
    """Distance covered by one interaction unit at viewing distance d."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return coeff * d


def zoom_distance(d: float, notches: float, coeff: float = DEFAULT_CONFIG.zoom_coeff) -> float:
    """Apply n zoom notches: each notch moves by camera_speed toward the target."""
    return d * (1.0 - coeff) ** notches


def _ramp(t: float, start: float, end: float) -> float:
    if t <= start:
        return 0.0
    if t >= end:
        return 1.0
    return (t - start) / (end - start)


def transition_weights(
    p: ScaleParam,
    schedule: tuple[ScheduleRow, ...] = SCHEDULE,
    config: EngineConfig = DEFAULT_CONFIG,
) -> TransitionWeights:
    """Blend weights for the effective row/phase of `p`."""
    row, t = p.effective(config)
    transition = schedule[row].transition_to_next
    if transition == EMBEDDING:
        ssao = 1.0 - _ramp(t, 0.0, config.embed_ssao_end)
        overlay = _ramp(t, config.embed_overlay_start, config.embed_overlay_end)
        coarse = 1.0 - _ramp(t, config.embed_coarse_start, 1.0)
        mix = overlay
    elif transition == COLOR_CHANGE:
        ssao = 1.0
        overlay = t
        coarse = 1.0 - t
        mix = _ramp(t, config.color_ramp_start, config.color_ramp_end)
    else:
        ssao, overlay, coarse, mix = 1.0, 0.0, 1.0, 0.0
    return TransitionWeights(row=row, t=t, ssao_weight=ssao, coarse_alpha=coarse, overlay_alpha=overlay, color_mix=mix)


def level_color_mix(level: DataLevel, row: int, t: float, config: EngineConfig = DEFAULT_CONFIG) -> float:
    """Continuous per-level color remix fraction across the whole scale range.

    Nucleotide spheres arrive chromosome-colored and remix to nucleotide
    colors across row 4; atom spheres arrive nucleotide-colored and remix to
    element colors across row 6. All other levels never remix.
    """
    ramp_row = {DataLevel.NUCLEOTIDE: 4, DataLevel.ATOM: 6}.get(level)
    if ramp_row is None:
        return 0.0
    if row < ramp_row:
        return 0.0
    if row > ramp_row:
        return 1.0
    return _ramp(t, config.color_ramp_start, config.color_ramp_end)


def blend_vector(
    p: ScaleParam,
    schedule: tuple[ScheduleRow, ...] = SCHEDULE,
    config: EngineConfig = DEFAULT_CONFIG,
) -> tuple[float, ...]:
    """Role-free summary of the drawn scene: the quantity continuous in s.

    Components: per data level (6 of them) the total alpha A and the
    shading-weighted alpha A*S, then the two color remix fractions. Roles
    (coarse vs overlay) are deliberately absent; swapping roles at a row
    boundary must not move this vector.
    """
    alpha = [0.0] * len(DataLevel)
    shaded = [0.0] * len(DataLevel)
    for entry in draw_state(p, schedule, config):
        alpha[entry.level] += entry.alpha
        shaded[entry.level] += entry.alpha * entry.ssao
    row, t = p.effective(config)
    m_nt = level_color_mix(DataLevel.NUCLEOTIDE, row, t, config)
    m_atom = level_color_mix(DataLevel.ATOM, row, t, config)
    return tuple(alpha) + tuple(shaded) + (m_nt, m_atom)


def draw_state(
    p: ScaleParam,
    schedule: tuple[ScheduleRow, ...] = SCHEDULE,
    config: EngineConfig = DEFAULT_CONFIG,
) -> tuple[LevelDraw, ...]:
    """Role-free draw plan: which levels are drawn, at what alpha and shading.

    This is the quantity that is continuous in s: when a row boundary is
    crossed, yesterday's overlay becomes today's coarse layer with identical
    alpha, shading, and colors, so the drawn scene never jumps. Entries with
    zero alpha are omitted; color-change rows keep one entry (geometry is
    unchanged, only colors remix).
    """
    row, t = p.effective(config)
    weights = transition_weights(p, schedule, config)
    here = schedule[row]
    entries: list[LevelDraw] = []
    if here.transition_to_next == EMBEDDING:
        nxt = schedule[row + 1]
        if weights.coarse_alpha > 0.0:
            entries.append(
                LevelDraw(
                    level=here.data_level,
                    role="coarse",
                    scope_row=row,
                    alpha=weights.coarse_alpha,
                    ssao=weights.ssao_weight,
                    color_mix=level_color_mix(here.data_level, row, t, config),
                )
            )
        if weights.overlay_alpha > 0.0:
            entries.append(
                LevelDraw(
                    level=nxt.data_level,
                    role="overlay",
                    scope_row=row + 1,
                    alpha=weights.overlay_alpha,
                    ssao=1.0,
                    color_mix=level_color_mix(nxt.data_level, row, t, config),
                )
            )
    else:
        # Color-change rows and the last row draw one layer at full presence.
        entries.append(
            LevelDraw(
                level=here.data_level,
                role="coarse",
                scope_row=row,
                alpha=1.0,
                ssao=1.0,
                color_mix=level_color_mix(here.data_level, row, t, config),
            )
        )
    return tuple(entries)
