"""Stateful session service streaming RenderLists over a WebSocket protocol.

Each WebSocket connection owns one `Session` (camera + scale + focus against a
shared read-only dataset).  Commands arrive as JSON text frames; every command
yields exactly one reply, and any command that changes session state is
additionally answered with a fresh ``render_list`` (one JSON header frame
followed by one binary frame in the 24-byte instance layout).  The scale
parameter is re-derived from the camera distance after every command, so
``|scale_from_distance(d) - s| < 1e-9`` holds at all times.

The HTTP side is a thin FastAPI app exposing ``/health`` and ``/info`` plus
the ``/ws`` WebSocket endpoint; `serve` runs it under uvicorn.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from . import __version__
from .config import DEFAULT_CONFIG, EngineConfig
from .model import STORED_LEVELS, GenomeDataset
from .raster import CameraPose, PickHit, camera_for, pick
from .renderlist import InstanceCapError, RenderList, assemble
from .scale import (
    SCHEDULE,
    CameraScaleConfig,
    ScaleParam,
    scale_from_distance,
    zoom_distance,
)
from .scope import (
    FocusState,
    default_focus,
    focus_from_element,
    set_focus_chromosome,
    set_focus_fiber,
)

FORMAT_VERSION = 1

DEFAULT_PORT = 9800
DEFAULT_VIEWPORT = (800, 600)

_MAX_VIEWPORT_SIDE = 4096
_MAX_PITCH = math.pi / 2 - 1e-3


def canonical_json(obj: Any) -> str:
    """Serialize a protocol message deterministically (sorted keys, compact)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class CommandError(Exception):
    """A command could not be applied; the session is left unchanged."""


def _require(msg: dict, key: str) -> Any:
    if key not in msg:
        raise CommandError(f"missing field {key!r}")
    return msg[key]


def _number(msg: dict, key: str) -> float:
    value = _require(msg, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CommandError(f"field {key!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise CommandError(f"field {key!r} must be finite")
    return value


def _integer(msg: dict, key: str) -> int:
    value = _require(msg, key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise CommandError(f"field {key!r} must be an integer")
    return value


def _vec3(msg: dict, key: str) -> tuple[float, float, float]:
    value = _require(msg, key)
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise CommandError(f"field {key!r} must be a list of three numbers")
    out = []
    for coord in value:
        if isinstance(coord, bool) or not isinstance(coord, (int, float)):
            raise CommandError(f"field {key!r} must be a list of three numbers")
        coord = float(coord)
        if not math.isfinite(coord):
            raise CommandError(f"field {key!r} must be finite")
        out.append(coord)
    return (out[0], out[1], out[2])


class Session:
    """One client's view of the dataset: camera, scale, focus, current frame.

    `handle` maps one inbound JSON text frame to the ordered list of
    wire-ready outbound frames (canonical-JSON strings and binary payloads).
    All state changes are atomic: the next RenderList is assembled before
    anything is committed, so a failing command leaves the session intact.
    """

    def __init__(
        self,
        dataset: GenomeDataset,
        config: EngineConfig = DEFAULT_CONFIG,
        viewport: tuple[int, int] = DEFAULT_VIEWPORT,
    ) -> None:
        self.dataset = dataset
        self.config = config
        self.cam_cfg = CameraScaleConfig.from_engine(config)
        self.focus = default_focus(dataset)
        self.camera = camera_for(
            self.focus.focus_point,
            config.d0_nm,
            viewport[0],
            viewport[1],
            fov_deg=config.fov_deg,
        )
        self.scale = ScaleParam(scale_from_distance(config.d0_nm, self.cam_cfg))
        self._rlist = assemble(dataset, self.scale, self.focus, config)
        self._frames = self._pack_frames(self._rlist)

    @property
    def render_list(self) -> RenderList:
        return self._rlist

    # -- wire entry point ---------------------------------------------------

    def handle(self, raw: str) -> list[str | bytes]:
        """Apply one command; return the outbound frames it produces."""
        try:
            msg = json.loads(raw)
        except ValueError:
            return [self._error("message is not valid JSON")]
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return [self._error("message must be an object with a string 'type'")]
        handler = self._HANDLERS.get(msg["type"])
        if handler is None:
            return [self._error(f"unknown command {msg['type']!r}")]
        try:
            return handler(self, msg)
        except CommandError as exc:
            return [self._error(str(exc))]

    # -- commands -------------------------------------------------------------

    def _cmd_hello(self, msg: dict) -> list[str | bytes]:
        width = self.camera.width
        height = self.camera.height
        if "width" in msg or "height" in msg:
            width = _integer(msg, "width")
            height = _integer(msg, "height")
            if not (1 <= width <= _MAX_VIEWPORT_SIDE and 1 <= height <= _MAX_VIEWPORT_SIDE):
                raise CommandError(
                    f"viewport must be between 1x1 and {_MAX_VIEWPORT_SIDE}x{_MAX_VIEWPORT_SIDE}"
                )
        camera = dataclasses.replace(self.camera, width=width, height=height)
        frames = self._commit(camera=camera)
        return [self._session_info(), *frames]

    def _cmd_set_camera(self, msg: dict) -> list[str | bytes]:
        eye = _vec3(msg, "eye")
        target = _vec3(msg, "target")
        up = _vec3(msg, "up") if "up" in msg else self.camera.up
        try:
            camera = dataclasses.replace(self.camera, eye=eye, target=target, up=up)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        scale = ScaleParam(
            scale_from_distance(camera.distance, self.cam_cfg), self.scale.offset
        )
        return self._commit(camera=camera, scale=scale)

    def _cmd_orbit(self, msg: dict) -> list[str | bytes]:
        yaw = _number(msg, "yaw") if "yaw" in msg else 0.0
        pitch = _number(msg, "pitch") if "pitch" in msg else 0.0
        ex, ey, ez = self.camera.eye
        tx, ty, tz = self.camera.target
        ox, oy, oz = ex - tx, ey - ty, ez - tz
        radius = math.sqrt(ox * ox + oy * oy + oz * oz)
        azimuth = math.atan2(ox, oz) + yaw
        elevation = math.asin(max(-1.0, min(1.0, oy / radius))) + pitch
        elevation = max(-_MAX_PITCH, min(_MAX_PITCH, elevation))
        eye = (
            tx + radius * math.cos(elevation) * math.sin(azimuth),
            ty + radius * math.sin(elevation),
            tz + radius * math.cos(elevation) * math.cos(azimuth),
        )
        try:
            camera = dataclasses.replace(self.camera, eye=eye)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        scale = ScaleParam(
            scale_from_distance(camera.distance, self.cam_cfg), self.scale.offset
        )
        return self._commit(camera=camera, scale=scale)

    def _cmd_zoom(self, msg: dict) -> list[str | bytes]:
        notches = _number(msg, "notches")
        distance = zoom_distance(self.camera.distance, notches, self.config.zoom_coeff)
        ex, ey, ez = self.camera.eye
        tx, ty, tz = self.camera.target
        ratio = distance / self.camera.distance
        eye = (tx + (ex - tx) * ratio, ty + (ey - ty) * ratio, tz + (ez - tz) * ratio)
        try:
            camera = dataclasses.replace(self.camera, eye=eye)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        scale = ScaleParam(
            scale_from_distance(camera.distance, self.cam_cfg), self.scale.offset
        )
        return self._commit(camera=camera, scale=scale)

    def _cmd_pick(self, msg: dict) -> list[str | bytes]:
        x = _integer(msg, "x")
        y = _integer(msg, "y")
        if not (0 <= x < self.camera.width and 0 <= y < self.camera.height):
            raise CommandError("pick coordinates outside the viewport")
        hit = pick(self._rlist, self.camera, x, y)
        if hit is None:
            return [self._pick_result(None)]
        focus = focus_from_element(self.dataset, hit.element)
        frames = self._refocus(focus)
        return [self._pick_result(hit), *frames]

    def _cmd_set_focus_chromosome(self, msg: dict) -> list[str | bytes]:
        chromosome = _integer(msg, "chromosome")
        try:
            focus = set_focus_chromosome(self.dataset, chromosome)
        except (IndexError, ValueError) as exc:
            raise CommandError(str(exc)) from exc
        return self._refocus(focus)

    def _cmd_set_focus_fiber(self, msg: dict) -> list[str | bytes]:
        fiber = _integer(msg, "fiber")
        try:
            focus = set_focus_fiber(self.dataset, fiber)
        except (IndexError, ValueError) as exc:
            raise CommandError(str(exc)) from exc
        return self._refocus(focus)

    def _cmd_set_scale_offset(self, msg: dict) -> list[str | bytes]:
        offset = _number(msg, "offset")
        limit = self.config.offset_limit
        if abs(offset) > limit:
            raise CommandError(f"scale offset must be within [-{limit}, {limit}]")
        return self._commit(scale=ScaleParam(self.scale.s, offset))

    def _cmd_request_frame(self, msg: dict) -> list[str | bytes]:
        return list(self._frames)

    _HANDLERS = {
        "hello": _cmd_hello,
        "set_camera": _cmd_set_camera,
        "orbit": _cmd_orbit,
        "zoom": _cmd_zoom,
        "pick": _cmd_pick,
        "set_focus_chromosome": _cmd_set_focus_chromosome,
        "set_focus_fiber": _cmd_set_focus_fiber,
        "set_scale_offset": _cmd_set_scale_offset,
        "request_frame": _cmd_request_frame,
    }

    # -- state transitions ----------------------------------------------------

    def _refocus(self, focus: FocusState) -> list[str | bytes]:
        """Move the camera target to the new focus point, eye unchanged."""
        try:
            camera = dataclasses.replace(self.camera, target=focus.focus_point)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        scale = ScaleParam(
            scale_from_distance(camera.distance, self.cam_cfg), self.scale.offset
        )
        return self._commit(camera=camera, scale=scale, focus=focus)

    def _commit(
        self,
        camera: CameraPose | None = None,
        scale: ScaleParam | None = None,
        focus: FocusState | None = None,
    ) -> list[str | bytes]:
        camera = camera if camera is not None else self.camera
        scale = scale if scale is not None else self.scale
        focus = focus if focus is not None else self.focus
        try:
            rlist = assemble(self.dataset, scale, focus, self.config)
        except InstanceCapError as exc:
            raise CommandError(str(exc)) from exc
        self.camera = camera
        self.scale = scale
        self.focus = focus
        self._rlist = rlist
        self._frames = self._pack_frames(rlist)
        return list(self._frames)

    # -- outbound frames --------------------------------------------------------

    def _pack_frames(self, rlist: RenderList) -> tuple[str, bytes]:
        header, payload = rlist.pack()
        header["type"] = "render_list"
        header["camera"] = self._camera_json()
        header["focus"] = self._focus_json()
        return (canonical_json(header), payload)

    def _camera_json(self) -> dict:
        cam = self.camera
        return {
            "eye": list(cam.eye),
            "target": list(cam.target),
            "up": list(cam.up),
            "fov_deg": cam.fov_deg,
            "width": cam.width,
            "height": cam.height,
            "distance": cam.distance,
        }

    def _focus_json(self) -> dict:
        focus = self.focus
        return {
            "chromosome": focus.chromosome,
            "fiber": focus.focus_fiber,
            "window": list(focus.fiber_window),
            "point": list(focus.focus_point),
        }

    def _session_info(self) -> str:
        levels = {
            level.name.lower(): len(self.dataset.tables[level])
            for level in STORED_LEVELS
        }
        schedule = [
            {
                "index": row.index,
                "data_level": row.data_level.name.lower(),
                "color_mode": row.color_mode,
                "scope_mode": row.scope_mode,
                "semantic_name": row.semantic_name,
                "transition_to_next": row.transition_to_next,
            }
            for row in SCHEDULE
        ]
        return canonical_json(
            {
                "type": "session_info",
                "format_version": FORMAT_VERSION,
                "version": __version__,
                "unit": "nm",
                "levels": levels,
                "schedule": schedule,
                "viewport": [self.camera.width, self.camera.height],
                "instance_cap": self.config.instance_cap,
                "camera": self._camera_json(),
                "focus": self._focus_json(),
            }
        )

    def _pick_result(self, hit: PickHit | None) -> str:
        payload: dict | None = None
        if hit is not None:
            payload = {
                "level": hit.element.level.name.lower(),
                "index": hit.element.index,
                "depth": hit.depth,
                "role": hit.role,
            }
        return canonical_json({"type": "pick_result", "hit": payload})

    def _error(self, message: str) -> str:
        return canonical_json({"type": "error", "message": message})


class HealthResponse(BaseModel):
    status: str = "ok"


class ScheduleRowInfo(BaseModel):
    index: int
    data_level: str
    color_mode: str
    scope_mode: str
    semantic_name: str
    transition_to_next: str


class InfoResponse(BaseModel):
    name: str
    version: str
    format_version: int
    unit: str
    levels: dict[str, int]
    schedule: list[ScheduleRowInfo]
    default_viewport: tuple[int, int]
    instance_cap: int
    provenance: str


def create_app(
    dataset: GenomeDataset,
    config: EngineConfig = DEFAULT_CONFIG,
    viewport: tuple[int, int] = DEFAULT_VIEWPORT,
) -> FastAPI:
    """FastAPI app exposing the session protocol for one shared dataset."""
    app = FastAPI(title="genomelens", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse()

    @app.get("/info", response_model=InfoResponse)
    def info() -> InfoResponse:
        return InfoResponse(
            name="genomelens",
            version=__version__,
            format_version=FORMAT_VERSION,
            unit="nm",
            levels={
                level.name.lower(): len(dataset.tables[level])
                for level in STORED_LEVELS
            },
            schedule=[
                ScheduleRowInfo(
                    index=row.index,
                    data_level=row.data_level.name.lower(),
                    color_mode=row.color_mode,
                    scope_mode=row.scope_mode,
                    semantic_name=row.semantic_name,
                    transition_to_next=row.transition_to_next,
                )
                for row in SCHEDULE
            ],
            default_viewport=viewport,
            instance_cap=config.instance_cap,
            provenance=dataset.provenance,
        )

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        session = Session(dataset, config, viewport=viewport)
        try:
            while True:
                message = await ws.receive()
                if message["type"] == "websocket.disconnect":
                    break
                if message.get("bytes") is not None:
                    await ws.send_text(
                        session._error("binary frames are not accepted")
                    )
                    continue
                text = message.get("text")
                if text is None:
                    continue
                for frame in session.handle(text):
                    if isinstance(frame, bytes):
                        await ws.send_bytes(frame)
                    else:
                        await ws.send_text(frame)
        except WebSocketDisconnect:
            pass

    return app


def serve(
    dataset: GenomeDataset,
    config: EngineConfig = DEFAULT_CONFIG,
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    viewport: tuple[int, int] = DEFAULT_VIEWPORT,
) -> None:
    """Run the session service until interrupted."""
    import uvicorn

    app = create_app(dataset, config, viewport=viewport)
    uvicorn.run(app, host=host, port=port, log_level="warning")
