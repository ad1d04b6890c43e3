"""HTTP service exposing the lens engine for interactive viewers.

Sessions hold one uploaded image plus cached system factorizations so that
parameter tweaks that keep the lens footprint (alpha, epsilon) skip the
assembly/factorization cost entirely. Compute requests within a session
are single-flight: they never interleave, and a request that went stale
while waiting (a newer one arrived) is answered as superseded.
"""

from __future__ import annotations

import argparse
import io
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import uvicorn
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from PIL import Image

from .errors import EmptyRoiError, GeolensError, ImageIOError, InvalidArgumentError
from .lens import Circle, LensSpec, MetricParams, Polygon
from .pipeline import PipelineConfig, run_lens_job
from .raster import ImageBuffer

MAX_DIM = 4096
DEFAULT_IDLE_SECONDS = 30 * 60


@dataclass
class Session:
    id: str
    image: ImageBuffer
    factor_cache: dict = field(default_factory=dict)
    compute_lock: threading.Lock = field(default_factory=threading.Lock)
    generation: int = 0
    gen_lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    result_png: bytes | None = None
    heatmap_png: bytes | None = None
    last_report: dict | None = None


class SessionStore:
    def __init__(self, idle_seconds: float = DEFAULT_IDLE_SECONDS):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.idle_seconds = idle_seconds

    def create(self, image: ImageBuffer) -> Session:
        sess = Session(id=secrets.token_hex(8), image=image)
        with self._lock:
            self._expire_locked()
            self._sessions[sess.id] = sess
        return sess

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._expire_locked()
            sess = self._sessions.get(session_id)
            if sess:
                sess.last_access = time.monotonic()
            return sess

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def _expire_locked(self) -> None:
        now = time.monotonic()
        stale = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_access > self.idle_seconds
        ]
        for sid in stale:
            del self._sessions[sid]


def _png_bytes(buffer: ImageBuffer) -> bytes:
    bio = io.BytesIO()
    Image.fromarray(buffer.pixels, "RGBA").save(bio, format="PNG")
    return bio.getvalue()


def _decode_image(data: bytes) -> ImageBuffer:
    try:
        with Image.open(io.BytesIO(data)) as im:
            return ImageBuffer(np.asarray(im.convert("RGBA")).copy())
    except Exception as exc:  # noqa: BLE001 - bad upload is a client error
        raise ImageIOError("<upload>", f"cannot decode image ({exc})") from exc


def _lens_from_json(body: dict) -> LensSpec:
    shape = body.get("shape")
    if not isinstance(shape, dict):
        raise InvalidArgumentError("field 'shape' must be an object")
    kind = shape.get("kind")
    if kind == "circle":
        center = shape.get("center")
        if not (isinstance(center, (list, tuple)) and len(center) == 2):
            raise InvalidArgumentError("field 'shape.center' must be [x, y]")
        geo = Circle(center=(float(center[0]), float(center[1])), radius=float(shape.get("radius", 0)))
    elif kind == "polygon":
        points = shape.get("points")
        if not isinstance(points, list) or len(points) < 3:
            raise InvalidArgumentError("field 'shape.points' must list at least 3 [x, y] pairs")
        geo = Polygon(np.asarray(points, dtype=float))
    else:
        raise InvalidArgumentError("field 'shape.kind' must be 'circle' or 'polygon'")
    return LensSpec(
        shape=geo,
        profile=body.get("profile", "gaussian"),
        h0=float(body.get("h0", 0.0)),
        metric=MetricParams(alpha=float(body.get("alpha", 0.0))),
        height_mode=body.get("height_mode", "normalized"),
    )


def _config_from_json(body: dict) -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.lenses = [_lens_from_json(body)]
    cfg.alpha = float(body.get("alpha", 0.0))
    cfg.epsilon = float(body.get("epsilon", cfg.epsilon))
    boundary = body.get("boundary_mode", "fixed_rectangle")
    cfg.boundary_mode = {"fixed": "fixed_rectangle"}.get(boundary, boundary)
    mesh = body.get("mesh") or {}
    cfg.rows = int(mesh.get("rows", cfg.rows))
    cfg.cols = int(mesh.get("cols", cfg.cols))
    cfg.emit_heatmap = True
    return cfg


def create_app(
    idle_seconds: float = DEFAULT_IDLE_SECONDS, ui_dir: str | None = None
) -> FastAPI:
    app = FastAPI(title="geolens")
    store = SessionStore(idle_seconds=idle_seconds)
    app.state.store = store

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    async def create_session(request: Request):
        data = await request.body()
        try:
            image = _decode_image(data)
        except ImageIOError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if image.width > MAX_DIM or image.height > MAX_DIM:
            return JSONResponse(
                {"error": f"image exceeds {MAX_DIM}x{MAX_DIM}"}, status_code=400
            )
        sess = store.create(image)
        return {"session_id": sess.id, "width": image.width, "height": image.height}

    @app.put("/sessions/{session_id}/lens")
    async def put_lens(session_id: str, request: Request):
        sess = store.get(session_id)
        if sess is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        try:
            body = await request.json()
        except Exception:  # noqa: BLE001
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        try:
            cfg = _config_from_json(body)
        except (GeolensError, ValueError, TypeError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)

        with sess.gen_lock:
            sess.generation += 1
            my_gen = sess.generation
        with sess.compute_lock:
            with sess.gen_lock:
                if sess.generation != my_gen:
                    return JSONResponse(
                        {"status": "superseded", "generation": my_gen}, status_code=409
                    )
            try:
                result = run_lens_job(sess.image, cfg, factor_cache=sess.factor_cache)
            except (InvalidArgumentError, EmptyRoiError) as exc:
                # bad lens placement/parameters: the client's fault
                return JSONResponse({"error": str(exc)}, status_code=400)
            except GeolensError as exc:
                return JSONResponse(
                    {"error": str(exc), "report": sess.last_report}, status_code=500
                )
            rep = result.report
            sess.result_png = _png_bytes(result.image)
            sess.heatmap_png = (
                _png_bytes(result.heatmap) if result.heatmap is not None else None
            )
            report = {
                "iterations": rep.iterations,
                "converged": rep.converged,
                "energy_trace": rep.energy_trace,
                "flips": [int(t) for t in rep.flipped_triangles],
                "distortion": {
                    "total": result.distortion.total,
                    "max": result.distortion.max,
                    "mean": result.distortion.mean,
                },
                "stage_seconds": result.stage_seconds,
                "factorization_seconds": result.factor_seconds,
                "factorization_cached": result.factor_from_cache,
                "result_url": f"/sessions/{session_id}/result.png",
                "heatmap_url": f"/sessions/{session_id}/heatmap.png",
            }
            sess.last_report = report
            return report

    @app.get("/sessions/{session_id}/result.png")
    def get_result(session_id: str):
        sess = store.get(session_id)
        if sess is None or sess.result_png is None:
            return JSONResponse({"error": "no result available"}, status_code=404)
        return Response(content=sess.result_png, media_type="image/png")

    @app.get("/sessions/{session_id}/heatmap.png")
    def get_heatmap(session_id: str):
        sess = store.get(session_id)
        if sess is None or sess.heatmap_png is None:
            return JSONResponse({"error": "no heatmap available"}, status_code=404)
        return Response(content=sess.heatmap_png, media_type="image/png")

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        if not store.delete(session_id):
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return {"status": "deleted"}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="viewer")

    return app


app = create_app()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geolens-serve")
    parser.add_argument("--host", default=os.environ.get("GEOLENS_HOST", "127.0.0.1"))
    parser.add_argument(
        "--port", type=int, default=int(os.environ.get("GEOLENS_PORT", "8008"))
    )
    parser.add_argument(
        "--idle-timeout", type=float, default=DEFAULT_IDLE_SECONDS,
        help="seconds before idle sessions expire",
    )
    parser.add_argument(
        "--ui-dir", default=None,
        help="serve the built viewer (frontend/ directory) at /",
    )
    args = parser.parse_args(argv)
    uvicorn.run(
        create_app(idle_seconds=args.idle_timeout, ui_dir=args.ui_dir),
        host=args.host,
        port=args.port,
    )
    return 0


if __name__ == "__main__":
    main()
