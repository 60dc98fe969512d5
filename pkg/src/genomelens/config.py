"""Engine configuration: transition timing, fading, caps, camera constants.

Every tunable that the engine exposes lives here so that a single JSON file
(or the GENOMELENS_CONFIG environment variable pointing at one) can retarget
transition timing, highlight strength, fade length, and the scale schedule
endpoints without touching code.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

CONFIG_ENV_VAR = "GENOMELENS_CONFIG"


@dataclass(frozen=True)
class EngineConfig:
    # Camera / scale schedule endpoints (nm).
    d0_nm: float = 12000.0
    d7_nm: float = 5.0
    # Camera speed coefficient: one interaction unit moves c * distance.
    zoom_coeff: float = 0.1
    fov_deg: float = 60.0
    # Visual-embedding phase breakpoints within a row's t in [0, 1]:
    # shading is removed over [0, ssao_end], detail overlays over
    # [overlay_start, overlay_end], the coarse layer fades over
    # [coarse_start, 1].
    embed_ssao_end: float = 0.35
    embed_overlay_start: float = 0.35
    embed_overlay_end: float = 0.70
    embed_coarse_start: float = 0.70
    # Color-change rows remix colors over this t interval.
    color_ramp_start: float = 0.25
    color_ramp_end: float = 0.75
    # Fraction of the focus window faded out at each sequence end.
    fade_fraction: float = 0.10
    # Linear-RGB gain applied to focus-highlighted elements.
    highlight_gain: float = 1.15
    # Hard per-frame instance budget; exceeding it is an error, not a trim.
    instance_cap: int = 2_000_000
    # Scale-offset control range.
    offset_limit: float = 0.9
    # Flat color of the coarsest row (the nucleus as a single tinted mass).
    nucleus_color: tuple[int, int, int] = (182, 186, 196)
    # Generator capacity guard (total stored points across levels).
    max_points: int = 20_000_000

    def __post_init__(self) -> None:
        if not (0.0 < self.d7_nm < self.d0_nm):
            raise ValueError("require 0 < d7_nm < d0_nm")
        if not (0.0 < self.embed_ssao_end <= self.embed_overlay_start
                < self.embed_overlay_end <= self.embed_coarse_start < 1.0):
            raise ValueError("embedding breakpoints must be ordered within (0, 1)")
        if not (0.0 <= self.color_ramp_start < self.color_ramp_end <= 1.0):
            raise ValueError("color ramp must be ordered within [0, 1]")
        if not (0.0 <= self.fade_fraction < 0.5):
            raise ValueError("fade_fraction must be in [0, 0.5)")
        if not (0.0 < self.zoom_coeff < 1.0):
            raise ValueError("zoom_coeff must be in (0, 1)")
        if self.instance_cap < 1 or self.max_points < 1:
            raise ValueError("caps must be positive")
        if not (0.0 <= self.offset_limit < 1.0):
            raise ValueError("offset_limit must be in [0, 1)")


DEFAULT_CONFIG = EngineConfig()


def config_from_dict(data: dict) -> EngineConfig:
    """Build a config from a plain dict, rejecting unknown keys."""
    known = {f.name for f in fields(EngineConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    if "nucleus_color" in data:
        data = dict(data, nucleus_color=tuple(data["nucleus_color"]))
    return replace(DEFAULT_CONFIG, **data)


def load_config(path: str | os.PathLike | None = None) -> EngineConfig:
    """Load config from `path`, else from $GENOMELENS_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return DEFAULT_CONFIG
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a JSON object")
    return config_from_dict(raw)
