"""HTTP inference service: /health, /score, /restore.

Handlers share an immutable model snapshot; a reload swaps the snapshot
atomically, so concurrent requests always see a consistent model and
serial == concurrent results. Images travel as multipart uploads,
scalars as JSON. Inference runs on a worker so the configured deadline
can answer 504 instead of hanging the client.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import Future, ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass

from fastapi import FastAPI, File, Form, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from modsr.checkpoint import checkpoint_file_hash, load_checkpoint, models_from_checkpoint
from modsr.images import decode_image, encode_png
from modsr.nets import Models, ScorePair, restore_image, score_image

access_log = logging.getLogger("modsr.access")

MAX_BODY_BYTES = 32 << 20


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8008
    checkpoint: str = ""
    max_edge: int = 1024
    timeout_s: float = 60.0
    cors_origins: tuple = ()

    def __post_init__(self):
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        cfg = cls(**overrides)
        bind = os.environ.get("MODSR_BIND")
        if bind:
            host, _, port = bind.rpartition(":")
            cfg.host = host or cfg.host
            cfg.port = int(port)
            cfg.__post_init__()
        ckpt = os.environ.get("MODSR_CHECKPOINT")
        if ckpt:
            cfg.checkpoint = ckpt
        return cfg


@dataclass
class ModelSnapshot:
    models: Models
    checkpoint_hash: str
    config_hash: str


def load_snapshot(path: str) -> ModelSnapshot:
    ckpt = load_checkpoint(path)
    models, _ = models_from_checkpoint(ckpt)
    return ModelSnapshot(models=models, checkpoint_hash=checkpoint_file_hash(path),
                         config_hash=ckpt.cfg_hash)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(cfg: ServiceConfig, snapshot: ModelSnapshot | None = None,
               load: bool = True) -> FastAPI:
    """Build the app; with ``load`` the checkpoint must be loadable or
    this raises (startup fails fast). ``load=False`` leaves the model
    empty and endpoints answer 503 until a reload succeeds."""
    if snapshot is None and load:
        if not cfg.checkpoint:
            raise ValueError("no checkpoint configured")
        snapshot = load_snapshot(cfg.checkpoint)

    app = FastAPI(title="modsr inference service")
    app.state.cfg = cfg
    app.state.snapshot = snapshot
    app.state.pool = ThreadPoolExecutor(max_workers=8)
    if cfg.cors_origins:
        app.add_middleware(CORSMiddleware, allow_origins=list(cfg.cors_origins),
                           allow_methods=["*"], allow_headers=["*"])

    @app.middleware("http")
    async def log_requests(request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        access_log.info(json.dumps({
            "method": request.method, "path": request.url.path,
            "status": response.status_code,
            "ms": round((time.perf_counter() - t0) * 1000.0, 2),
        }))
        return response

    def _decode_upload(data: bytes):
        if len(data) > MAX_BODY_BYTES:
            return None, _error(413, "payload too large")
        try:
            img = decode_image(data)
        except Exception:
            return None, _error(400, "malformed image payload")
        if max(img.shape[1], img.shape[2]) > cfg.max_edge:
            return None, _error(413, f"image edge exceeds {cfg.max_edge}")
        return img, None

    def _run(fn) -> tuple:
        fut: Future = app.state.pool.submit(fn)
        try:
            return fut.result(timeout=cfg.timeout_s), None
        except FutureTimeout:
            return None, _error(504, "inference deadline exceeded")

    @app.get("/health")
    def health():
        snap: ModelSnapshot | None = app.state.snapshot
        if snap is None:
            return _error(503, "model not loaded")
        return {"status": "ok", "checkpoint_hash": snap.checkpoint_hash,
                "config_hash": snap.config_hash}

    @app.post("/score")
    def score(image: UploadFile = File(...)):
        snap: ModelSnapshot | None = app.state.snapshot
        if snap is None:
            return _error(503, "model not loaded")
        img, err = _decode_upload(image.file.read())
        if err:
            return err
        result, err = _run(lambda: score_image(snap.models.udem, img).clamped())
        if err:
            return err
        return {"s_n": result.s_n, "s_b": result.s_b}

    @app.post("/restore")
    def restore(image: UploadFile = File(...), scores: str | None = Form(None)):
        snap: ModelSnapshot | None = app.state.snapshot
        if snap is None:
            return _error(503, "model not loaded")
        img, err = _decode_upload(image.file.read())
        if err:
            return err

        pair = None
        if scores is not None:
            try:
                raw = json.loads(scores)
                pair = ScorePair(float(raw["s_n"]), float(raw["s_b"]))
            except (ValueError, KeyError, TypeError):
                return _error(422, "scores must be JSON with finite s_n and s_b")
            if not (math.isfinite(pair.s_n) and math.isfinite(pair.s_b)):
                return _error(422, "scores must be finite")

        def work():
            used = pair if pair is not None else score_image(snap.models.udem, img).clamped()
            return used, restore_image(snap.models, img, used)

        result, err = _run(work)
        if err:
            return err
        used, out = result
        return Response(content=encode_png(out), media_type="image/png",
                        headers={"X-Score-Noise": f"{used.s_n:.6f}",
                                 "X-Score-Blur": f"{used.s_b:.6f}"})

    @app.post("/admin/reload")
    def reload_model():
        try:
            app.state.snapshot = load_snapshot(cfg.checkpoint)
        except Exception as exc:
            return _error(503, f"reload failed: {exc}")
        return {"status": "reloaded",
                "checkpoint_hash": app.state.snapshot.checkpoint_hash}

    return app


def serve(cfg: ServiceConfig) -> None:  # pragma: no cover - wraps uvicorn
    import uvicorn
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
