"""Line-delimited persistence for every dataset record type.

One JSON object per line, UTF-8, stable field order per type, so files are
diffable and byte-identical across reruns. Writes go through a temp file
and an atomic rename; a crashed writer never leaves a partial dataset.
load(persist(x)) == x for every registered type.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, TypeVar

from proofpipe.core import (
    AnalysisRole,
    Category,
    LabelSource,
    Lineage,
    LineageKind,
    MetaAssessment,
    MetaExample,
    Problem,
    Proof,
    ProofAnalysis,
    ProofLabel,
    ProofPipeError,
    Score,
    format_score,
    score_from_text,
)
from proofpipe.service.models import (
    AnnotationEvent,
    AnnotationTask,
    RunKind,
    RunManifest,
    RunStatus,
    TaskKind,
    TaskStatus,
)

R = TypeVar("R")


class SchemaViolation(ProofPipeError):
    """A record failed to decode; carries the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


# ---------------------------------------------------------------------------
# Field-level helpers
# ---------------------------------------------------------------------------


def _enc_score(score: Optional[Score]) -> Optional[str]:
    return None if score is None else format_score(score)


def _dec_score(value: Any) -> Optional[Score]:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError(f"score must be a string spelling, got {value!r}")
    return score_from_text(value)


def enc_fraction(value: Optional[Fraction]) -> Optional[str]:
    return None if value is None else str(value)


def dec_fraction(value: Any) -> Optional[Fraction]:
    if value is None:
        return None
    return Fraction(value)


def _require(obj: dict, fields: Sequence[str], cls: type) -> None:
    if not isinstance(obj, dict):
        raise ValueError(f"expected object for {cls.__name__}, got {type(obj).__name__}")
    missing = [f for f in fields if f not in obj]
    if missing:
        raise ValueError(f"{cls.__name__} record missing fields {missing}")
    unknown = [f for f in obj if f not in fields]
    if unknown:
        raise ValueError(f"{cls.__name__} record has unknown fields {unknown}")


def _str_tuple(value: Any, what: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ValueError(f"{what} must be a list of strings")
    return tuple(value)


# ---------------------------------------------------------------------------
# Per-type codecs (stable field order = dict construction order)
# ---------------------------------------------------------------------------


def _enc_problem(p: Problem) -> dict:
    return {"id": p.id, "statement": p.statement, "category": p.category.value, "source": p.source}


def _dec_problem(obj: dict) -> Problem:
    _require(obj, ("id", "statement", "category", "source"), Problem)
    return Problem(
        id=obj["id"],
        statement=obj["statement"],
        category=Category(obj["category"]),
        source=obj["source"],
    )


def _enc_lineage(lineage: Lineage) -> dict:
    return {
        "kind": lineage.kind.value,
        "parent_proof_id": lineage.parent_proof_id,
        "analysis_ids": list(lineage.analysis_ids),
    }


def _dec_lineage(obj: dict) -> Lineage:
    _require(obj, ("kind", "parent_proof_id", "analysis_ids"), Lineage)
    return Lineage(
        kind=LineageKind(obj["kind"]),
        parent_proof_id=obj["parent_proof_id"],
        analysis_ids=_str_tuple(obj["analysis_ids"], "lineage.analysis_ids"),
    )


def _enc_proof(p: Proof) -> dict:
    return {
        "id": p.id,
        "problem_id": p.problem_id,
        "solution_text": p.solution_text,
        "self_analysis_text": p.self_analysis_text,
        "self_score": _enc_score(p.self_score),
        "lineage": _enc_lineage(p.lineage),
        "sampling_seed": p.sampling_seed,
        "created_at": p.created_at,
    }


def _dec_proof(obj: dict) -> Proof:
    fields = (
        "id",
        "problem_id",
        "solution_text",
        "self_analysis_text",
        "self_score",
        "lineage",
        "sampling_seed",
        "created_at",
    )
    _require(obj, fields, Proof)
    return Proof(
        id=obj["id"],
        problem_id=obj["problem_id"],
        solution_text=obj["solution_text"],
        self_analysis_text=obj["self_analysis_text"],
        self_score=_dec_score(obj["self_score"]),
        lineage=_dec_lineage(obj["lineage"]),
        sampling_seed=obj["sampling_seed"],
        created_at=obj["created_at"],
    )


def _enc_analysis(a: ProofAnalysis) -> dict:
    return {
        "id": a.id,
        "proof_id": a.proof_id,
        "analysis_text": a.analysis_text,
        "extracted_score": _enc_score(a.extracted_score),
        "format_ok": a.format_ok,
        "role": a.role.value,
        "created_at": a.created_at,
    }


def _dec_analysis(obj: dict) -> ProofAnalysis:
    fields = ("id", "proof_id", "analysis_text", "extracted_score", "format_ok", "role", "created_at")
    _require(obj, fields, ProofAnalysis)
    return ProofAnalysis(
        id=obj["id"],
        proof_id=obj["proof_id"],
        analysis_text=obj["analysis_text"],
        extracted_score=_dec_score(obj["extracted_score"]),
        format_ok=obj["format_ok"],
        role=AnalysisRole(obj["role"]),
        created_at=obj["created_at"],
    )


def _enc_assessment(m: MetaAssessment) -> dict:
    return {
        "id": m.id,
        "analysis_id": m.analysis_id,
        "meta_text": m.meta_text,
        "quality_score": _enc_score(m.quality_score),
        "format_ok": m.format_ok,
    }


def _dec_assessment(obj: dict) -> MetaAssessment:
    _require(obj, ("id", "analysis_id", "meta_text", "quality_score", "format_ok"), MetaAssessment)
    return MetaAssessment(
        id=obj["id"],
        analysis_id=obj["analysis_id"],
        meta_text=obj["meta_text"],
        quality_score=_dec_score(obj["quality_score"]),
        format_ok=obj["format_ok"],
    )


def _enc_label(l: ProofLabel) -> dict:
    return {
        "proof_id": l.proof_id,
        "score": format_score(l.score),
        "source": l.source.value,
        "evidence_analysis_ids": list(l.evidence_analysis_ids),
        "annotator_id": l.annotator_id,
    }


def _dec_label(obj: dict) -> ProofLabel:
    _require(obj, ("proof_id", "score", "source", "evidence_analysis_ids", "annotator_id"), ProofLabel)
    return ProofLabel(
        proof_id=obj["proof_id"],
        score=score_from_text(obj["score"]),
        source=LabelSource(obj["source"]),
        evidence_analysis_ids=_str_tuple(obj["evidence_analysis_ids"], "evidence_analysis_ids"),
        annotator_id=obj["annotator_id"],
    )


def _enc_meta_example(e: MetaExample) -> dict:
    return {
        "problem_id": e.problem_id,
        "proof_id": e.proof_id,
        "analysis_id": e.analysis_id,
        "quality_score": format_score(e.quality_score),
        "source": e.source.value,
    }


def _dec_meta_example(obj: dict) -> MetaExample:
    _require(obj, ("problem_id", "proof_id", "analysis_id", "quality_score", "source"), MetaExample)
    return MetaExample(
        problem_id=obj["problem_id"],
        proof_id=obj["proof_id"],
        analysis_id=obj["analysis_id"],
        quality_score=score_from_text(obj["quality_score"]),
        source=LabelSource(obj["source"]),
    )


def _enc_task(t: AnnotationTask) -> dict:
    return {
        "task_id": t.task_id,
        "kind": t.kind.value,
        "problem_id": t.problem_id,
        "proof_id": t.proof_id,
        "analysis_ids": list(t.analysis_ids),
        "status": t.status.value,
        "submitted_label": _enc_score(t.submitted_label),
        "annotator_id": t.annotator_id,
        "created_at": t.created_at,
    }


def _dec_task(obj: dict) -> AnnotationTask:
    fields = (
        "task_id",
        "kind",
        "problem_id",
        "proof_id",
        "analysis_ids",
        "status",
        "submitted_label",
        "annotator_id",
        "created_at",
    )
    _require(obj, fields, AnnotationTask)
    return AnnotationTask(
        task_id=obj["task_id"],
        kind=TaskKind(obj["kind"]),
        problem_id=obj["problem_id"],
        proof_id=obj["proof_id"],
        analysis_ids=_str_tuple(obj["analysis_ids"], "analysis_ids"),
        status=TaskStatus(obj["status"]),
        submitted_label=_dec_score(obj["submitted_label"]),
        annotator_id=obj["annotator_id"],
        created_at=obj["created_at"],
    )


def _enc_event(e: AnnotationEvent) -> dict:
    return {
        "seq": e.seq,
        "task_id": e.task_id,
        "score": format_score(e.score),
        "annotator_id": e.annotator_id,
    }


def _dec_event(obj: dict) -> AnnotationEvent:
    _require(obj, ("seq", "task_id", "score", "annotator_id"), AnnotationEvent)
    return AnnotationEvent(
        seq=obj["seq"],
        task_id=obj["task_id"],
        score=score_from_text(obj["score"]),
        annotator_id=obj["annotator_id"],
    )


def _enc_manifest(m: RunManifest) -> dict:
    return {
        "run_id": m.run_id,
        "kind": m.kind.value,
        "config": m.config,
        "seed": m.seed,
        "status": m.status.value,
        "outputs": m.outputs,
    }


def _dec_manifest(obj: dict) -> RunManifest:
    _require(obj, ("run_id", "kind", "config", "seed", "status", "outputs"), RunManifest)
    if not isinstance(obj["config"], dict):
        raise ValueError("manifest config must be an object")
    if not isinstance(obj["outputs"], dict):
        raise ValueError("manifest outputs must be an object")
    return RunManifest(
        run_id=obj["run_id"],
        kind=RunKind(obj["kind"]),
        config=obj["config"],
        seed=obj["seed"],
        status=RunStatus(obj["status"]),
        outputs=dict(obj["outputs"]),
    )


CODECS: dict[type, tuple[Callable[[Any], dict], Callable[[dict], Any]]] = {
    Problem: (_enc_problem, _dec_problem),
    Proof: (_enc_proof, _dec_proof),
    ProofAnalysis: (_enc_analysis, _dec_analysis),
    MetaAssessment: (_enc_assessment, _dec_assessment),
    ProofLabel: (_enc_label, _dec_label),
    MetaExample: (_enc_meta_example, _dec_meta_example),
    AnnotationTask: (_enc_task, _dec_task),
    AnnotationEvent: (_enc_event, _dec_event),
    RunManifest: (_enc_manifest, _dec_manifest),
}


def encode_record(record: Any) -> dict:
    codec = CODECS.get(type(record))
    if codec is None:
        raise TypeError(f"no codec registered for {type(record).__name__}")
    return codec[0](record)


def decode_record(obj: dict, cls: type[R]) -> R:
    codec = CODECS.get(cls)
    if codec is None:
        raise TypeError(f"no codec registered for {cls.__name__}")
    return codec[1](obj)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def dumps_record(record: Any) -> str:
    return json.dumps(encode_record(record), ensure_ascii=False, separators=(",", ":"))


def loads_record(line: str, cls: type[R], line_no: int) -> R:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}", line=line_no)
    try:
        return decode_record(obj, cls)
    except SchemaViolation:
        raise
    except (ValueError, KeyError, TypeError, ProofPipeError) as exc:
        raise SchemaViolation(str(exc), line=line_no)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via temp file + rename so readers never see a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def persist_records(path: Path, records: Iterable[Any]) -> str:
    """Write records as one line each; returns the file's sha256 digest."""
    data = "".join(dumps_record(r) + "\n" for r in records).encode("utf-8")
    atomic_write_bytes(Path(path), data)
    return hashlib.sha256(data).hexdigest()


def load_records(path: Path, cls: type[R]) -> list[R]:
    """Load every record, failing with the offending line number."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            records.append(loads_record(line, cls, line_no))
    return records


def append_record(path: Path, record: Any) -> None:
    """Append one record; the line is written in a single call."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(dumps_record(record) + "\n")


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def dump_json(path: Path, obj: Any) -> str:
    """Atomic pretty-printed JSON (for manifests and checkpoints)."""
    data = (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    atomic_write_bytes(Path(path), data)
    return hashlib.sha256(data).hexdigest()


def load_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
