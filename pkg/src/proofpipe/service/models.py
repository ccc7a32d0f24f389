"""Service-level record types: annotation queue entries and run manifests."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

from proofpipe.core import Score


class TaskKind(enum.Enum):
    PROOF_SCORE = "proof_score"
    META_QUALITY = "meta_quality"


class TaskStatus(enum.Enum):
    PENDING = "pending"
    SUBMITTED = "submitted"


@dataclass(frozen=True)
class AnnotationTask:
    """A unit of human review: score a proof (or rate an analysis).

    analysis_ids are the issue-reporting analyses surfaced as review
    context. Tasks are stored append-only; status transitions live in a
    separate event log and are folded in at load time.
    """

    task_id: str
    kind: TaskKind
    problem_id: str
    proof_id: str
    analysis_ids: tuple[str, ...] = ()
    status: TaskStatus = TaskStatus.PENDING
    submitted_label: Optional[Score] = None
    annotator_id: Optional[str] = None
    created_at: int = 0

    def __post_init__(self) -> None:
        if not self.task_id or not self.problem_id or not self.proof_id:
            raise ValueError("task_id, problem_id, and proof_id must be non-empty")
        if (self.status is TaskStatus.SUBMITTED) != (self.submitted_label is not None):
            raise ValueError("submitted tasks carry a label; pending ones do not")


@dataclass(frozen=True)
class AnnotationEvent:
    """One submission against a task; the event log is append-only."""

    seq: int
    task_id: str
    score: Score
    annotator_id: str

    def __post_init__(self) -> None:
        if not self.task_id or not self.annotator_id:
            raise ValueError("task_id and annotator_id must be non-empty")


class RunKind(enum.Enum):
    AUTOLABEL = "autolabel"
    EVAL = "eval"
    REFINE = "refine"
    SEARCH = "search"


class RunStatus(enum.Enum):
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    kind: RunKind
    config: dict[str, Any]
    seed: int
    status: RunStatus = RunStatus.RUNNING
    outputs: dict[str, str] = field(default_factory=dict)  # file name -> sha256

    def __post_init__(self) -> None:
        if not self.run_id:
            raise ValueError("run_id must be non-empty")
        if self.status is RunStatus.COMPLETED and not self.outputs:
            raise ValueError("completed runs must declare output digests")
