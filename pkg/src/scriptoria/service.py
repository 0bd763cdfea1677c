"""Operator-facing HTTP API over the analysis store.

Endpoints mirror the examiner workflow: upload a document (binarize +
line/word detection run immediately), inspect and re-tune the layout,
select template characters, search them, and compare two documents'
feature vectors.  Errors surface as {"code", "message"} JSON with 4xx
for client-input problems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import FileResponse, JSONResponse

from .errors import NotFoundError, ScriptoriaError, ValidationError
from .features import compare
from .matcher import MatcherConfig
from .network import EmbeddingNetwork, load_network
from .store import AnalysisStore

DEFAULT_PORT = 8967


@dataclass(frozen=True)
class ServiceConfig:
    """Service defaults; the calibrated same-writer threshold lives here."""

    t_c: float = 0.1
    run_length: int = 5
    threshold: float = 4.0
    normalization_mode: str = "raw"
    so: Optional[int] = None  # None = per-line default rule (half x-height)
    search_time_budget_s: Optional[float] = 30.0
    workers: int = 1
    weights_path: Optional[str] = None
    cors_origins: tuple[str, ...] = ()

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ServiceConfig":
        obj = json.loads(Path(path).read_text())
        known = {
            "t_c",
            "run_length",
            "threshold",
            "normalization_mode",
            "so",
            "search_time_budget_s",
            "workers",
            "weights_path",
            "cors_origins",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "cors_origins" in obj:
            obj["cors_origins"] = tuple(obj["cors_origins"])
        return cls(**obj)


def create_app(root: str | Path, config: ServiceConfig = ServiceConfig()) -> FastAPI:
    store = AnalysisStore(root)
    network: Optional[EmbeddingNetwork] = None
    if config.weights_path:
        network = load_network(config.weights_path)

    app = FastAPI(title="scriptoria", version="0.1.0")

    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ScriptoriaError)
    async def _domain_error(request: Request, exc: ScriptoriaError):
        status = 404 if isinstance(exc, NotFoundError) else 400
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": str(exc)}
        )

    def _matcher_config(t_c: Optional[float], run_length: Optional[int]) -> MatcherConfig:
        return MatcherConfig(
            t_c=t_c if t_c is not None else config.t_c,
            run_length=run_length if run_length is not None else config.run_length,
            embedder=network,
            workers=config.workers,
            time_budget_s=config.search_time_budget_s,
        )

    @app.get("/documents")
    def list_documents():
        out = []
        for doc_id in store.list_documents():
            record = store.load_record(doc_id)
            out.append({"id": doc_id, "source_path": record.source_path, "medium": record.medium})
        return out

    @app.post("/documents")
    def upload_document(
        file: UploadFile = File(...),
        medium: str = Form("paper-scan"),
        method: str = Form("otsu"),
        threshold: Optional[int] = Form(None),
        invert: bool = Form(False),
        so: Optional[int] = Form(None),
    ):
        image_bytes = file.file.read()
        analysis = store.ingest(
            image_bytes,
            source_name=file.filename or "upload.png",
            method=method,
            threshold=threshold,
            medium=medium,
            invert=invert,
            so=so if so is not None else config.so,
        )
        layout = json.loads(analysis.layout_json)
        return {
            "id": analysis.record.id,
            "lines": len(layout["lines"]),
            "words": sum(len(l["words"]) for l in layout["lines"]),
        }

    @app.get("/documents/{doc_id}/layout")
    def get_layout(doc_id: str):
        return json.loads(store.read_text(doc_id, "layout.json"))

    @app.get("/documents/{doc_id}/image")
    def get_image(doc_id: str):
        return FileResponse(store.source_path(doc_id))

    @app.put("/documents/{doc_id}/so")
    def put_so(doc_id: str, body: dict):
        so = body.get("so")
        per_line = body.get("per_line")
        if so is None and per_line is None:
            raise ValidationError("body must carry 'so' and/or 'per_line'")
        with store.lock(doc_id):
            layout_json = store.update_so(doc_id, so, per_line)
        return json.loads(layout_json)

    @app.get("/documents/{doc_id}/templates")
    def get_templates(doc_id: str):
        return store.list_templates(doc_id)

    @app.post("/documents/{doc_id}/templates")
    def post_template(doc_id: str, body: dict):
        bbox = body.get("bbox")
        label = body.get("label")
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise ValidationError("bbox must be [row, col, h, w]")
        if not label:
            raise ValidationError("template needs a label")
        with store.lock(doc_id):
            template_id = store.add_template(doc_id, tuple(int(v) for v in bbox), str(label))
        return {"template_id": template_id, "bbox": list(bbox), "label": label}

    @app.post("/documents/{doc_id}/search")
    def post_search(doc_id: str, body: dict):
        template_id = body.get("template_id")
        if not template_id:
            raise ValidationError("search needs a template_id")
        cfg = _matcher_config(body.get("t_c"), body.get("run_length"))
        with store.lock(doc_id):
            result = store.run_template_search(doc_id, str(template_id), cfg)
        return json.loads(store.read_text(doc_id, f"matches/{template_id}.json"))

    @app.get("/documents/{doc_id}/features")
    def get_features(doc_id: str, mode: Optional[str] = None):
        mode = mode or config.normalization_mode
        with store.lock(doc_id):
            fv = store.build_features(doc_id, mode)
        return json.loads(fv.to_json())

    @app.post("/compare")
    def post_compare(body: dict):
        a, b = body.get("a"), body.get("b")
        if not a or not b:
            raise ValidationError("compare needs document ids 'a' and 'b'")
        threshold = body.get("threshold", config.threshold)
        mode = body.get("mode", config.normalization_mode)
        fa = store.build_features(str(a), mode)
        fb = store.build_features(str(b), mode)
        result = compare(fa, fb, float(threshold))
        return json.loads(result.to_json(a=str(a), b=str(b)))

    return app
