"""Human annotation queue.

Tasks and their submissions are two append-only files: tasks.jsonl holds
creation records, task_events.jsonl holds submissions. Current status is
the fold of events over tasks, so nothing is ever rewritten in place and
concurrent readers always see a consistent prefix. Submitting appends the
event and the resulting human-source label in one locked section.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional, Union

from proofpipe.autolabel import AutoLabelOutcome, Decision
from proofpipe.core import LabelSource, MetaExample, ProofLabel, ProofPipeError, Score
from proofpipe.service.models import AnnotationEvent, AnnotationTask, TaskKind, TaskStatus
from proofpipe.service.store import append_record, load_records

TASKS_FILE = "tasks.jsonl"
EVENTS_FILE = "task_events.jsonl"
LABELS_FILE = "labels.jsonl"
META_EXAMPLES_FILE = "meta_examples.jsonl"


class DuplicateTask(ProofPipeError):
    """The proof already has a pending task."""


class ProofAlreadyLabeled(ProofPipeError):
    """The proof already has a label; it does not need annotation."""


class TaskNotFound(ProofPipeError):
    pass


class TaskAlreadySubmitted(ProofPipeError):
    pass


class AnnotationQueue:
    """Single-writer view over the annotation files in a data directory."""

    def __init__(self, data_dir: Union[str, Path]) -> None:
        self.data_dir = Path(data_dir)
        self._lock = threading.Lock()

    def _path(self, name: str) -> Path:
        return self.data_dir / name

    def _load_tasks(self) -> dict[str, AnnotationTask]:
        """Tasks with event-folded statuses, in creation order."""
        tasks_path = self._path(TASKS_FILE)
        tasks: dict[str, AnnotationTask] = {}
        if tasks_path.exists():
            for task in load_records(tasks_path, AnnotationTask):
                tasks[task.task_id] = task
        events_path = self._path(EVENTS_FILE)
        if events_path.exists():
            for event in load_records(events_path, AnnotationEvent):
                task = tasks.get(event.task_id)
                if task is None:
                    continue
                tasks[event.task_id] = AnnotationTask(
                    task_id=task.task_id,
                    kind=task.kind,
                    problem_id=task.problem_id,
                    proof_id=task.proof_id,
                    analysis_ids=task.analysis_ids,
                    status=TaskStatus.SUBMITTED,
                    submitted_label=event.score,
                    annotator_id=event.annotator_id,
                    created_at=task.created_at,
                )
        return tasks

    def tasks(self, status: Optional[TaskStatus] = None) -> list[AnnotationTask]:
        """All tasks oldest-first, optionally filtered by status."""
        ordered = sorted(self._load_tasks().values(), key=lambda t: (t.created_at, t.task_id))
        if status is None:
            return ordered
        return [t for t in ordered if t.status is status]

    def get(self, task_id: str) -> AnnotationTask:
        task = self._load_tasks().get(task_id)
        if task is None:
            raise TaskNotFound(f"no annotation task {task_id!r}")
        return task

    def _labeled_proof_ids(self) -> set[str]:
        labels_path = self._path(LABELS_FILE)
        if not labels_path.exists():
            return set()
        return {label.proof_id for label in load_records(labels_path, ProofLabel)}

    def enqueue(self, outcome: AutoLabelOutcome, problem_id: str) -> AnnotationTask:
        """Queue a routed proof for human scoring.

        The surfaced context is the outcome's issue-reporting analyses.
        Refuses proofs that already have a pending task or a label.
        """
        if outcome.decision is not Decision.ROUTED_TO_HUMAN:
            raise ValueError(
                f"outcome for proof {outcome.proof_id} is {outcome.decision.value}, not routed"
            )
        with self._lock:
            existing = self._load_tasks()
            for task in existing.values():
                if task.proof_id == outcome.proof_id and task.status is TaskStatus.PENDING:
                    raise DuplicateTask(f"proof {outcome.proof_id} already has a pending task")
            if outcome.proof_id in self._labeled_proof_ids():
                raise ProofAlreadyLabeled(f"proof {outcome.proof_id} already has a label")
            task = AnnotationTask(
                task_id=f"task-{outcome.proof_id}",
                kind=TaskKind.PROOF_SCORE,
                problem_id=problem_id,
                proof_id=outcome.proof_id,
                analysis_ids=tuple(
                    a.id for a in outcome.analyses if a.reports_issues()
                ),
                created_at=len(existing) + 1,
            )
            append_record(self._path(TASKS_FILE), task)
            return task

    def submit(
        self, task_id: str, score: Score, annotator_id: str
    ) -> Union[ProofLabel, MetaExample]:
        """Record a human judgment: append the event and the dataset record."""
        with self._lock:
            task = self._load_tasks().get(task_id)
            if task is None:
                raise TaskNotFound(f"no annotation task {task_id!r}")
            if task.status is TaskStatus.SUBMITTED:
                raise TaskAlreadySubmitted(f"task {task_id!r} was already submitted")
            events_path = self._path(EVENTS_FILE)
            seq = (
                len(load_records(events_path, AnnotationEvent)) + 1
                if events_path.exists()
                else 1
            )
            append_record(
                events_path,
                AnnotationEvent(seq=seq, task_id=task_id, score=score, annotator_id=annotator_id),
            )
            if task.kind is TaskKind.PROOF_SCORE:
                record: Union[ProofLabel, MetaExample] = ProofLabel(
                    proof_id=task.proof_id,
                    score=score,
                    source=LabelSource.HUMAN,
                    evidence_analysis_ids=task.analysis_ids,
                    annotator_id=annotator_id,
                )
                append_record(self._path(LABELS_FILE), record)
            else:
                record = MetaExample(
                    problem_id=task.problem_id,
                    proof_id=task.proof_id,
                    analysis_id=task.analysis_ids[0] if task.analysis_ids else task.proof_id,
                    quality_score=score,
                    source=LabelSource.HUMAN,
                )
                append_record(self._path(META_EXAMPLES_FILE), record)
            return record
