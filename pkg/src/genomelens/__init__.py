"""Multi-scale 3D genome visualization engine."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import CONFIG_ENV_VAR, DEFAULT_CONFIG, EngineConfig, load_config
from .model import (
    AncestorPath,
    DataLevel,
    ElementId,
    GenomeDataset,
    LevelTable,
    ValidationReport,
    ancestors,
    child_range,
    validate,
)
from .gssio import GssError, load_dataset, write_dataset
from .synth import CapacityError, GenParams, generate
from .scale import (
    CameraScaleConfig,
    ScaleParam,
    ScheduleRow,
    SCHEDULE,
    TransitionWeights,
    camera_speed,
    distance_from_scale,
    draw_state,
    scale_from_distance,
    transition_weights,
    zoom_distance,
)
from .scope import (
    FocusState,
    ScopeResult,
    default_focus,
    focus_from_element,
    set_focus_chromosome,
    set_focus_fiber,
    visible_scope,
)
from .renderlist import InstanceCapError, RenderBatch, RenderList, assemble
from .raster import (
    CameraPose,
    PickHit,
    camera_for,
    pick,
    read_image,
    render,
    write_image,
)

__all__ = [
    "AncestorPath",
    "CONFIG_ENV_VAR",
    "CameraPose",
    "CameraScaleConfig",
    "CapacityError",
    "DEFAULT_CONFIG",
    "DataLevel",
    "ElementId",
    "EngineConfig",
    "FocusState",
    "GenParams",
    "GenomeDataset",
    "GssError",
    "InstanceCapError",
    "LevelTable",
    "PickHit",
    "RenderBatch",
    "RenderList",
    "SCHEDULE",
    "ScaleParam",
    "ScheduleRow",
    "ScopeResult",
    "TransitionWeights",
    "ValidationReport",
    "ancestors",
    "assemble",
    "camera_for",
    "camera_speed",
    "child_range",
    "default_focus",
    "distance_from_scale",
    "draw_state",
    "focus_from_element",
    "generate",
    "load_config",
    "load_dataset",
    "pick",
    "read_image",
    "render",
    "scale_from_distance",
    "set_focus_chromosome",
    "set_focus_fiber",
    "transition_weights",
    "validate",
    "visible_scope",
    "write_dataset",
    "write_image",
    "zoom_distance",
]
