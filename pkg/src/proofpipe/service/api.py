"""HTTP API over a data directory.

Read endpoints serve snapshot views of the dataset files; the only write
path is annotation submission, which serializes through the queue's
single-writer lock. Pipelines are launched from the CLI, never from the
API, so the service holds no compute state.

Error bodies are always {"error": <machine code>, "detail": <message>}.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from proofpipe.core import InvalidScoreValue, Problem, Proof, ProofAnalysis, score_from_text
from proofpipe.service.annotations import (
    AnnotationQueue,
    TaskAlreadySubmitted,
    TaskNotFound,
)
from proofpipe.service.models import RunManifest, TaskStatus
from proofpipe.service.store import decode_record, encode_record, load_json, load_records

RUNS_DIR = "runs"


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def create_app(data_dir: Union[str, Path]) -> FastAPI:
    root = Path(data_dir)
    queue = AnnotationQueue(root)
    app = FastAPI(title="proofpipe annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc))

    def _load(name: str, cls):
        path = root / name
        if not path.exists():
            return []
        return load_records(path, cls)

    @app.get("/problems")
    def get_problems():
        return [encode_record(p) for p in _load("problems.jsonl", Problem)]

    # Proof and task ids are hierarchical (they contain slashes), so these
    # routes need path converters.
    @app.get("/proofs/{proof_id:path}")
    def get_proof(proof_id: str):
        for proof in _load("proofs.jsonl", Proof):
            if proof.id == proof_id:
                return encode_record(proof)
        return _error(404, "not_found", f"no proof {proof_id!r}")

    @app.get("/analyses/{proof_id:path}")
    def get_analyses(proof_id: str):
        return [
            encode_record(a)
            for a in _load("analyses.jsonl", ProofAnalysis)
            if a.proof_id == proof_id
        ]

    @app.get("/runs")
    def get_runs():
        manifests = []
        runs_root = root / RUNS_DIR
        if runs_root.is_dir():
            for manifest_path in sorted(runs_root.glob("*/manifest.json")):
                manifests.append(encode_record(decode_record(load_json(manifest_path), RunManifest)))
        return manifests

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        manifest_path = root / RUNS_DIR / run_id / "manifest.json"
        if not manifest_path.exists():
            return _error(404, "not_found", f"no run {run_id!r}")
        return encode_record(decode_record(load_json(manifest_path), RunManifest))

    @app.get("/annotations")
    def get_annotations(status: Optional[str] = None):
        if status is None:
            wanted = None
        else:
            try:
                wanted = TaskStatus(status)
            except ValueError:
                return _error(400, "invalid_status", f"unknown status {status!r}")
        return [encode_record(t) for t in queue.tasks(wanted)]

    @app.post("/annotations/{task_id:path}")
    async def submit_annotation(task_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "invalid_request", "request body must be a JSON object")
        if not isinstance(body, dict):
            return _error(400, "invalid_request", "request body must be a JSON object")
        raw_score = body.get("score")
        annotator_id = body.get("annotator_id")
        if not isinstance(raw_score, str) or not isinstance(annotator_id, str) or not annotator_id:
            return _error(
                400, "invalid_request", "body needs string fields 'score' and 'annotator_id'"
            )
        try:
            score = score_from_text(raw_score)
        except InvalidScoreValue as exc:
            return _error(400, "invalid_score", str(exc))
        try:
            record = queue.submit(task_id, score, annotator_id)
        except TaskNotFound as exc:
            return _error(404, "task_not_found", str(exc))
        except TaskAlreadySubmitted as exc:
            return _error(409, "task_already_submitted", str(exc))
        return {"task": encode_record(queue.get(task_id)), "record": encode_record(record)}

    return app
