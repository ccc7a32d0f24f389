"""Persistence, run management, annotation queue, and HTTP API."""

from proofpipe.service.annotations import (
    AnnotationQueue,
    DuplicateTask,
    ProofAlreadyLabeled,
    TaskAlreadySubmitted,
    TaskNotFound,
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
from proofpipe.service.store import (
    SchemaViolation,
    append_record,
    decode_record,
    dump_json,
    encode_record,
    file_digest,
    load_json,
    load_records,
    persist_records,
)

__all__ = [
    "AnnotationEvent",
    "AnnotationQueue",
    "AnnotationTask",
    "DuplicateTask",
    "ProofAlreadyLabeled",
    "RunKind",
    "RunManifest",
    "RunStatus",
    "SchemaViolation",
    "TaskAlreadySubmitted",
    "TaskKind",
    "TaskNotFound",
    "TaskStatus",
    "append_record",
    "decode_record",
    "dump_json",
    "encode_record",
    "file_digest",
    "load_json",
    "load_records",
    "persist_records",
]
