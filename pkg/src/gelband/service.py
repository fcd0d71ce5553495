"""Local HTTP analysis service, the backend for the browser client.

Sessions live in memory with least-recently-used eviction.  Each session
holds one uploaded image plus the last config and its pipeline result;
analysis reruns only when the config actually changes, so repeated reads
are cheap and deterministic.

All error responses share one JSON shape:
    {"error": {"code": "...", "message": "...", "stage": "..." | null}}
with codes like unknown_session, unknown_band, bad_request, and the
snake-cased pipeline errors (no_peaks, constant_image, ...).
"""

from __future__ import annotations

import re
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import GelAnalysisError, NoPeaksError
from .pipeline import PipelineConfig, PipelineResult, apply_config_deltas, config_to_dict, run_pipeline
from .raster import GrayImage, image_png_bytes, load_image_bytes
from .report import (
    REPORT_NAME,
    build_report,
    hash_source,
    ratio_size,
    report_to_doc,
    write_report,
)

__all__ = ["create_app", "app", "SessionStore", "MAX_SESSIONS"]

MAX_SESSIONS = 16

STAGE_NAMES = ("input", "enhanced", "thresholded", "shifted", "filtered")


class ServiceError(Exception):
    """Request-level failure carrying an HTTP status and a machine code."""

    def __init__(self, status: int, code: str, message: str, stage: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.stage = stage


def _error_response(exc: ServiceError) -> JSONResponse:
    return JSONResponse(
        status_code=exc.status,
        content={"error": {"code": exc.code, "message": str(exc), "stage": exc.stage}},
    )


def _pipeline_error_code(exc: GelAnalysisError) -> str:
    name = type(exc).__name__
    name = name.removesuffix("Error")
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def _wrap_pipeline_error(exc: GelAnalysisError) -> ServiceError:
    message = str(exc)
    if isinstance(exc, NoPeaksError) and "alpha" not in message:
        message += " (set an alpha override)"
    return ServiceError(422, _pipeline_error_code(exc), message, stage=exc.stage)


@dataclass
class Session:
    id: str
    image: GrayImage
    source: dict
    config: PipelineConfig = field(default_factory=PipelineConfig)
    result: PipelineResult | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def analysis(self) -> PipelineResult:
        """The pipeline result for the current config, computed on demand."""
        with self.lock:
            if self.result is None:
                self.result = run_pipeline(self.image, self.config)
            return self.result

    def reconfigure(self, cfg: PipelineConfig) -> PipelineResult:
        """Swap in a new config, keeping the old state if the run fails."""
        with self.lock:
            if self.result is None or cfg != self.config:
                result = run_pipeline(self.image, cfg)
                self.config = cfg
                self.result = result
            return self.result


class SessionStore:
    """Bounded in-memory session map with LRU eviction."""

    def __init__(self, capacity: int = MAX_SESSIONS):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, Session] = OrderedDict()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session
            self._sessions.move_to_end(session.id)
            while len(self._sessions) > self.capacity:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
            self._sessions.move_to_end(session_id)
            return self._sessions[session_id]

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception:
        raise ServiceError(400, "bad_request", "request body must be a JSON object")
    if not isinstance(body, dict):
        raise ServiceError(400, "bad_request", "request body must be a JSON object")
    return body


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="gelband analysis service")
    # The browser client may be opened from disk or a separate static
    # server, so cross-origin requests must be allowed.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions = store if store is not None else SessionStore()
    app.state.sessions = sessions

    @app.exception_handler(ServiceError)
    async def _on_service_error(request: Request, exc: ServiceError):
        return _error_response(exc)

    @app.post("/api/sessions")
    async def create_session(request: Request, name: str = ""):
        data = await request.body()
        if not data:
            raise ServiceError(400, "bad_request", "upload the image file as the request body")
        try:
            image = load_image_bytes(data)
        except GelAnalysisError as exc:
            raise ServiceError(415, _pipeline_error_code(exc), str(exc))
        session = Session(id=uuid.uuid4().hex, image=image,
                          source=hash_source(data, name or "upload"))
        sessions.add(session)
        return {
            "id": session.id,
            "width": image.width,
            "height": image.height,
            "bit_depth": image.bit_depth,
            "config": config_to_dict(session.config),
        }

    @app.get("/api/sessions/{session_id}/image")
    async def stage_image(session_id: str, stage: str = "input", normalize: int = 0):
        session = sessions.get(session_id)
        if stage not in STAGE_NAMES:
            raise ServiceError(404, "unknown_stage",
                               f"stage must be one of {', '.join(STAGE_NAMES)}")
        try:
            result = session.analysis()
        except GelAnalysisError as exc:
            raise _wrap_pipeline_error(exc)
        if stage not in result.stages:
            raise ServiceError(404, "unknown_stage",
                               f"stage {stage!r} not present (enhance is off)")
        img = result.stages[stage]
        if normalize:
            img = _normalized_for_display(img)
        return Response(content=image_png_bytes(img, display_8bit=True),
                        media_type="image/png")

    @app.post("/api/sessions/{session_id}/analyze")
    async def analyze(session_id: str, request: Request):
        session = sessions.get(session_id)
        deltas = await _json_body(request)
        try:
            cfg = apply_config_deltas(session.config, deltas)
        except (ValueError, GelAnalysisError) as exc:
            raise ServiceError(400, "bad_request", str(exc))
        try:
            result = session.reconfigure(cfg)
        except GelAnalysisError as exc:
            raise _wrap_pipeline_error(exc)
        doc = report_to_doc(build_report(session.source, cfg, result))
        return {
            "config": doc["config"],
            "decision": doc["decision"],
            "bands": doc["bands"],
        }

    @app.get("/api/sessions/{session_id}/bands")
    async def bands(session_id: str):
        session = sessions.get(session_id)
        try:
            result = session.analysis()
        except GelAnalysisError as exc:
            raise _wrap_pipeline_error(exc)
        doc = report_to_doc(build_report(session.source, session.config, result))
        return {"bands": doc["bands"], "decision": doc["decision"]}

    @app.post("/api/sessions/{session_id}/ratio")
    async def ratio(session_id: str, request: Request):
        session = sessions.get(session_id)
        body = await _json_body(request)
        try:
            ref_label, n_label = int(body["ref"]), int(body["n"])
        except (KeyError, TypeError, ValueError):
            raise ServiceError(400, "bad_request",
                               "body must carry integer band labels 'ref' and 'n'")
        try:
            result = session.analysis()
        except GelAnalysisError as exc:
            raise _wrap_pipeline_error(exc)
        by_label = {b.label: b for b in result.bands}
        for label in (ref_label, n_label):
            if label not in by_label:
                raise ServiceError(404, "unknown_band", f"no band labeled {label}")
        value = ratio_size(by_label[n_label].area, by_label[ref_label].area)
        return {"ref": ref_label, "n": n_label, "ratio": value}

    @app.post("/api/sessions/{session_id}/report")
    async def persist_report(session_id: str, request: Request):
        session = sessions.get(session_id)
        body = await _json_body(request) if (await request.body()) else {}
        reference = body.get("reference")
        out_dir = body.get("out") or f"reports/{session_id}"
        try:
            result = session.analysis()
        except GelAnalysisError as exc:
            raise _wrap_pipeline_error(exc)
        try:
            rep = build_report(session.source, session.config, result,
                               reference=None if reference is None else int(reference))
        except ValueError as exc:
            raise ServiceError(404, "unknown_band", str(exc))
        try:
            write_report(rep, out_dir, image=result.stages["input"])
        except OSError as exc:
            raise ServiceError(500, "io_failure", str(exc))
        return {"dir": str(out_dir), "path": str(Path(out_dir) / REPORT_NAME)}

    return app


def _normalized_for_display(img: GrayImage) -> GrayImage:
    """Linear stretch to the full intensity range, for stage inspection."""
    lo = float(img.pixels.min())
    hi = float(img.pixels.max())
    if hi <= lo:
        return img.with_pixels(np.zeros_like(img.pixels))
    return img.with_pixels((img.pixels - lo) * (img.max_range / (hi - lo)))


app = create_app()
