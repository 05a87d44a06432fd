"""HTTP JSON API over the run store, consumed by the CLI and the layout UI."""

from __future__ import annotations

import hashlib
import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .conditioner import ANCHORS
from .repaint import RepaintRequest
from .sampler import SamplerConfig
from .scene import SceneError, SceneSpec, VOCABULARY, parse_scene
from .store import RunNotFound, RunStore


def error_payload(code, message, position=None):
    err = {"code": code, "message": message}
    if position is not None:
        err["position"] = position
    return {"error": err}


def create_app(store: RunStore, static_dir=None) -> FastAPI:
    app = FastAPI(title="regioncomp")

    @app.exception_handler(SceneError)
    async def scene_error(_req: Request, exc: SceneError):
        return JSONResponse(status_code=400,
                            content=error_payload("invalid_scene", str(exc), exc.position))

    @app.exception_handler(ValueError)
    async def value_error(_req: Request, exc: ValueError):
        return JSONResponse(status_code=400,
                            content=error_payload("invalid_request", str(exc)))

    @app.exception_handler(RunNotFound)
    async def not_found(_req: Request, exc: RunNotFound):
        return JSONResponse(status_code=404,
                            content=error_payload("not_found", f"run {exc.args[0]} not found"))

    @app.get("/api/vocab")
    def vocab():
        return {**VOCABULARY, "anchors": {k: list(v) for k, v in ANCHORS.items()}}

    @app.post("/api/runs")
    async def create_run(request: Request):
        body = await request.json()
        if "dsl" in body:
            scene = parse_scene(body["dsl"])
        elif "scene" in body:
            scene = SceneSpec.from_dict(body["scene"])
        else:
            return JSONResponse(status_code=400,
                                content=error_payload("invalid_request",
                                                      "body needs 'scene' or 'dsl'"))
        cfg = SamplerConfig.from_dict(body.get("config", {}))
        run_id = store.create_run(scene, cfg)
        return {"run_id": run_id}

    @app.get("/api/runs")
    def list_runs():
        return {"runs": store.list_runs()}

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        rec = store.get_record(run_id)
        d = rec.to_dict()
        # UI conveniences: the derived prompt and the stored-image hash are
        # computed here so clients never re-derive them
        d["global_prompt"] = rec.scene.global_tokens()
        d["image_sha256"] = hashlib.sha256(store.get_image_bytes(run_id, "ppm")).hexdigest()
        return d

    @app.get("/api/runs/{run_id}/image.png")
    def get_image_png(run_id: str):
        return Response(content=store.get_image_bytes(run_id, "png"), media_type="image/png")

    @app.get("/api/runs/{run_id}/image.ppm")
    def get_image_ppm(run_id: str):
        return Response(content=store.get_image_bytes(run_id, "ppm"),
                        media_type="image/x-portable-pixmap")

    @app.post("/api/runs/{run_id}/repaint")
    async def create_repaint(run_id: str, request: Request):
        body = await request.json()
        if "nonce" not in body or body["nonce"] is None:
            body = dict(body)
            body["nonce"] = store.count_children(run_id) + 1
        req = RepaintRequest.from_dict(body)
        child = store.create_repaint(run_id, req)
        return {"run_id": child}

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def default_static_dir():
    here = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    candidate = os.path.join(here, "frontend", "dist")
    return candidate if os.path.isdir(candidate) else None


def serve(store_root, host="127.0.0.1", port=8000, static_dir=None):
    import uvicorn

    app = create_app(RunStore(store_root), static_dir or default_static_dir())
    uvicorn.run(app, host=host, port=port, log_level="info")
