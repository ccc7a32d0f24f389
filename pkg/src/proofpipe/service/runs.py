"""Run directories: manifest, stage checkpoints, assembled outputs.

A run directory is the unit of resumability. Every expensive stage (one
proof's labeling, one problem's evaluation, one refinement thread, one
search iteration) checkpoints its full result as a JSON shard under
stages/; re-invoking a run with the same id, config, and seed loads
existing shards instead of recomputing, then reassembles the final output
files deterministically from the shards. Because record ids and ordering
are derived from stable coordinates, a resumed run's outputs are
byte-identical to an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from proofpipe.autolabel import (
    AutoLabelConfig,
    AutoLabelOutcome,
    AutoLabelRunResult,
    Decision,
    ValidationResult,
    autolabel_proof,
)
from proofpipe.backends import Backend, SamplingParams
from proofpipe.core import (
    Category,
    MetaAssessment,
    MetaExample,
    Problem,
    Proof,
    ProofAnalysis,
    ProofLabel,
    ProofPipeError,
    Score,
    derive_seed,
    format_score,
    score_from_text,
)
from proofpipe.service.models import (
    AnnotationTask,
    RunKind,
    RunManifest,
    RunStatus,
    TaskKind,
)
from proofpipe.service.store import (
    decode_record,
    dec_fraction,
    dump_json,
    enc_fraction,
    encode_record,
    load_json,
    persist_records,
)
from proofpipe.strategies import (
    CandidatePool,
    MajorityVoteConfig,
    PoolEntry,
    ProblemEval,
    RefinementStep,
    RefinementThread,
    RefineRunResult,
    SearchCertificate,
    SearchConfig,
    SearchIterationRecord,
    SearchResult,
    SearchState,
    StopReason,
    eval_problem,
    finish_search,
    pass_and_best_metrics,
    search_step,
    sequential_refine,
    start_search,
    verify_proof,
)

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
STAGES_DIR = "stages"


class RunConfigMismatch(ProofPipeError):
    """An existing run directory was started with a different setup."""


def _score_opt(score: Optional[Score]) -> Optional[str]:
    return None if score is None else format_score(score)


def _dec_score_opt(value: Optional[str]) -> Optional[Score]:
    return None if value is None else score_from_text(value)


class RunDirectory:
    """Filesystem handle for one run."""

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        self.stages = self.root / STAGES_DIR

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    def load_manifest(self) -> Optional[RunManifest]:
        if not self.manifest_path.exists():
            return None
        return decode_record(load_json(self.manifest_path), RunManifest)

    def save_manifest(self, manifest: RunManifest) -> None:
        dump_json(self.manifest_path, encode_record(manifest))

    def stage_path(self, key: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]+", "_", key)
        tag = hashlib.sha256(key.encode()).hexdigest()[:8]
        return self.stages / f"{safe}.{tag}.json"

    def has_stage(self, key: str) -> bool:
        return self.stage_path(key).exists()

    def load_stage(self, key: str) -> Any:
        return load_json(self.stage_path(key))

    def save_stage(self, key: str, payload: Any) -> None:
        dump_json(self.stage_path(key), payload)

    def write_records(self, name: str, records: Sequence[Any]) -> str:
        return persist_records(self.root / name, records)

    def write_json(self, name: str, obj: Any) -> str:
        return dump_json(self.root / name, obj)


def start_run(
    root: Union[str, Path], run_id: str, kind: RunKind, config: dict, seed: int
) -> RunDirectory:
    """Open (or create) a run directory, refusing mismatched resumes."""
    run_dir = RunDirectory(root)
    existing = run_dir.load_manifest()
    if existing is not None:
        if (existing.kind, existing.config, existing.seed) != (kind, config, seed):
            raise RunConfigMismatch(
                f"run {run_id!r} at {run_dir.root} was started with a different "
                "kind, config, or seed; refusing to resume"
            )
        logger.info("resuming run %s at %s", run_id, run_dir.root)
        return run_dir
    run_dir.root.mkdir(parents=True, exist_ok=True)
    run_dir.stages.mkdir(parents=True, exist_ok=True)
    run_dir.save_manifest(RunManifest(run_id=run_id, kind=kind, config=config, seed=seed))
    return run_dir


def _finalize(run_dir: RunDirectory, outputs: dict[str, str]) -> RunManifest:
    manifest = run_dir.load_manifest()
    assert manifest is not None
    final = RunManifest(
        run_id=manifest.run_id,
        kind=manifest.kind,
        config=manifest.config,
        seed=manifest.seed,
        status=RunStatus.COMPLETED,
        outputs=outputs,
    )
    run_dir.save_manifest(final)
    return final


def _mark_failed(run_dir: RunDirectory) -> None:
    manifest = run_dir.load_manifest()
    if manifest is None:
        return
    run_dir.save_manifest(
        RunManifest(
            run_id=manifest.run_id,
            kind=manifest.kind,
            config=manifest.config,
            seed=manifest.seed,
            status=RunStatus.FAILED,
            outputs=manifest.outputs,
        )
    )


# ---------------------------------------------------------------------------
# Composite shard codecs
# ---------------------------------------------------------------------------


def _enc_validation(v: ValidationResult) -> dict:
    return {
        "analysis_id": v.analysis_id,
        "confirmations": v.confirmations,
        "valid": v.valid,
        "assessments": [encode_record(a) for a in v.assessments],
        "failures": v.failures,
    }


def _dec_validation(obj: dict) -> ValidationResult:
    return ValidationResult(
        analysis_id=obj["analysis_id"],
        confirmations=obj["confirmations"],
        valid=obj["valid"],
        assessments=tuple(decode_record(a, MetaAssessment) for a in obj["assessments"]),
        failures=obj["failures"],
    )


def _enc_outcome(o: AutoLabelOutcome) -> dict:
    return {
        "proof_id": o.proof_id,
        "decision": o.decision.value,
        "score": _score_opt(o.score),
        "analyses": [encode_record(a) for a in o.analyses],
        "validations": [_enc_validation(v) for v in o.validations],
        "label": None if o.label is None else encode_record(o.label),
        "meta_examples": [encode_record(e) for e in o.meta_examples],
    }


def _dec_outcome(obj: dict) -> AutoLabelOutcome:
    return AutoLabelOutcome(
        proof_id=obj["proof_id"],
        decision=Decision(obj["decision"]),
        score=_dec_score_opt(obj["score"]),
        analyses=tuple(decode_record(a, ProofAnalysis) for a in obj["analyses"]),
        validations=tuple(_dec_validation(v) for v in obj["validations"]),
        label=None if obj["label"] is None else decode_record(obj["label"], ProofLabel),
        meta_examples=tuple(decode_record(e, MetaExample) for e in obj["meta_examples"]),
    )


def _enc_problem_eval(pe: ProblemEval) -> dict:
    return {
        "problem_id": pe.problem_id,
        "category": pe.category.value,
        "proofs": [encode_record(p) for p in pe.proofs],
        "proof_scores": [_score_opt(s) for s in pe.proof_scores],
        "analyses": [[encode_record(a) for a in group] for group in pe.analyses],
        "value": enc_fraction(pe.value),
    }


def _dec_problem_eval(obj: dict) -> ProblemEval:
    return ProblemEval(
        problem_id=obj["problem_id"],
        category=Category(obj["category"]),
        proofs=tuple(decode_record(p, Proof) for p in obj["proofs"]),
        proof_scores=tuple(_dec_score_opt(s) for s in obj["proof_scores"]),
        analyses=tuple(
            tuple(decode_record(a, ProofAnalysis) for a in group) for group in obj["analyses"]
        ),
        value=dec_fraction(obj["value"]),
    )


def _enc_thread_shard(
    thread: RefinementThread,
    final_score: Optional[Score],
    final_analyses: Sequence[ProofAnalysis],
) -> dict:
    return {
        "thread_id": thread.thread_id,
        "problem_id": thread.problem_id,
        "stopped_reason": thread.stopped_reason.value,
        "steps": [
            {
                "proof": encode_record(s.proof),
                "self_score": _score_opt(s.self_score),
                "raw_text": s.raw_text,
            }
            for s in thread.steps
        ],
        "final_score": _score_opt(final_score),
        "final_analyses": [encode_record(a) for a in final_analyses],
    }


def _dec_thread_shard(
    obj: dict,
) -> tuple[RefinementThread, Optional[Score], tuple[ProofAnalysis, ...]]:
    thread = RefinementThread(
        thread_id=obj["thread_id"],
        problem_id=obj["problem_id"],
        steps=tuple(
            RefinementStep(
                proof=decode_record(s["proof"], Proof),
                self_score=_dec_score_opt(s["self_score"]),
                raw_text=s["raw_text"],
            )
            for s in obj["steps"]
        ),
        stopped_reason=StopReason(obj["stopped_reason"]),
    )
    return (
        thread,
        _dec_score_opt(obj["final_score"]),
        tuple(decode_record(a, ProofAnalysis) for a in obj["final_analyses"]),
    )


def _enc_pool_entry(e: PoolEntry) -> dict:
    return {
        "proof": encode_record(e.proof),
        "analyses": [encode_record(a) for a in e.analyses],
        "attempts": e.attempts,
        "iteration_added": e.iteration_added,
    }


def _dec_pool_entry(obj: dict) -> PoolEntry:
    return PoolEntry(
        proof=decode_record(obj["proof"], Proof),
        analyses=tuple(decode_record(a, ProofAnalysis) for a in obj["analyses"]),
        attempts=obj["attempts"],
        iteration_added=obj["iteration_added"],
    )


def _enc_iter_record(r: SearchIterationRecord) -> dict:
    return {
        "iteration": r.iteration,
        "selected_proof_ids": list(r.selected_proof_ids),
        "pairs": [list(pair) for pair in r.pairs],
        "added_proof_ids": list(r.added_proof_ids),
        "pool_size": r.pool_size,
        "max_mean_score": enc_fraction(r.max_mean_score),
    }


def _dec_iter_record(obj: dict) -> SearchIterationRecord:
    return SearchIterationRecord(
        iteration=obj["iteration"],
        selected_proof_ids=tuple(obj["selected_proof_ids"]),
        pairs=tuple((p[0], p[1]) for p in obj["pairs"]),
        added_proof_ids=tuple(obj["added_proof_ids"]),
        pool_size=obj["pool_size"],
        max_mean_score=dec_fraction(obj["max_mean_score"]),
    )


# ---------------------------------------------------------------------------
# Autolabel runs
# ---------------------------------------------------------------------------


def run_autolabel_dir(
    root: Union[str, Path],
    run_id: str,
    problems: Sequence[Problem],
    proofs: Sequence[Proof],
    cfg: AutoLabelConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[AutoLabelRunResult, RunManifest]:
    """Checkpointed autolabel run; the output directory is servable as-is."""
    config = {
        "n": cfg.n,
        "m": cfg.m,
        "k": cfg.k,
        "undecided_policy": cfg.undecided_policy.value,
    }
    run_dir = start_run(root, run_id, RunKind.AUTOLABEL, config, seed)
    by_id = {p.id: p for p in problems}
    result = AutoLabelRunResult()
    try:
        for proof in sorted(proofs, key=lambda p: p.id):
            problem = by_id.get(proof.problem_id)
            if problem is None:
                raise ValueError(f"proof {proof.id} references unknown problem {proof.problem_id}")
            key = f"proof-{proof.id}"
            if run_dir.has_stage(key):
                outcome = _dec_outcome(run_dir.load_stage(key))
            else:
                outcome = autolabel_proof(problem, proof, cfg, backend, seed, params, max_in_flight)
                run_dir.save_stage(key, _enc_outcome(outcome))
            result.add(outcome)

        proof_by_id = {p.id: p for p in proofs}
        tasks = []
        for i, proof_id in enumerate(result.routed):
            outcome = next(o for o in result.outcomes if o.proof_id == proof_id)
            tasks.append(
                AnnotationTask(
                    task_id=f"task-{proof_id}",
                    kind=TaskKind.PROOF_SCORE,
                    problem_id=proof_by_id[proof_id].problem_id,
                    proof_id=proof_id,
                    analysis_ids=tuple(a.id for a in outcome.analyses if a.reports_issues()),
                    created_at=i + 1,
                )
            )
        outputs = {
            "problems.jsonl": run_dir.write_records(
                "problems.jsonl", sorted(problems, key=lambda p: p.id)
            ),
            "proofs.jsonl": run_dir.write_records(
                "proofs.jsonl", sorted(proofs, key=lambda p: p.id)
            ),
            "labels.jsonl": run_dir.write_records("labels.jsonl", result.labels),
            "meta_examples.jsonl": run_dir.write_records(
                "meta_examples.jsonl", result.meta_examples
            ),
            "analyses.jsonl": run_dir.write_records(
                "analyses.jsonl", [a for o in result.outcomes for a in o.analyses]
            ),
            "meta_assessments.jsonl": run_dir.write_records(
                "meta_assessments.jsonl",
                [m for o in result.outcomes for v in o.validations for m in v.assessments],
            ),
            "tasks.jsonl": run_dir.write_records("tasks.jsonl", tasks),
        }
        manifest = _finalize(run_dir, outputs)
    except Exception:
        _mark_failed(run_dir)
        raise
    return result, manifest


# ---------------------------------------------------------------------------
# One-shot evaluation runs
# ---------------------------------------------------------------------------


def run_eval_dir(
    root: Union[str, Path],
    run_id: str,
    problems: Sequence[Problem],
    g: int,
    v: int,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[list[ProblemEval], RunManifest]:
    config = {"g": g, "v": v}
    run_dir = start_run(root, run_id, RunKind.EVAL, config, seed)
    evals: list[ProblemEval] = []
    try:
        for problem in sorted(problems, key=lambda p: p.id):
            key = f"problem-{problem.id}"
            if run_dir.has_stage(key):
                evals.append(_dec_problem_eval(run_dir.load_stage(key)))
            else:
                pe = eval_problem(problem, g, v, backend, seed, params, max_in_flight)
                run_dir.save_stage(key, _enc_problem_eval(pe))
                evals.append(pe)

        sums: dict[str, Fraction] = {}
        counts: dict[str, int] = {}
        for pe in evals:
            if pe.value is None:
                continue
            sums[pe.category.value] = sums.get(pe.category.value, Fraction(0)) + pe.value
            counts[pe.category.value] = counts.get(pe.category.value, 0) + 1
        summary = {
            "problems": [
                {
                    "problem_id": pe.problem_id,
                    "category": pe.category.value,
                    "proof_ids": [p.id for p in pe.proofs],
                    "proof_scores": [_score_opt(s) for s in pe.proof_scores],
                    "value": enc_fraction(pe.value),
                }
                for pe in evals
            ],
            "category_means": {
                cat: enc_fraction(sums[cat] / counts[cat]) for cat in sorted(sums)
            },
            "missing": [pe.problem_id for pe in evals if pe.value is None],
        }
        outputs = {
            "problems.jsonl": run_dir.write_records(
                "problems.jsonl", sorted(problems, key=lambda p: p.id)
            ),
            "proofs.jsonl": run_dir.write_records(
                "proofs.jsonl", [p for pe in evals for p in pe.proofs]
            ),
            "analyses.jsonl": run_dir.write_records(
                "analyses.jsonl", [a for pe in evals for group in pe.analyses for a in group]
            ),
            "summary.json": run_dir.write_json("summary.json", summary),
        }
        manifest = _finalize(run_dir, outputs)
    except Exception:
        _mark_failed(run_dir)
        raise
    return evals, manifest


# ---------------------------------------------------------------------------
# Refinement runs
# ---------------------------------------------------------------------------


def run_refine_dir(
    root: Union[str, Path],
    run_id: str,
    problems: Sequence[Problem],
    threads: int,
    max_iters: int,
    v: int,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[dict[str, RefineRunResult], RunManifest]:
    config = {"threads": threads, "max_iters": max_iters, "v": v}
    run_dir = start_run(root, run_id, RunKind.REFINE, config, seed)
    results: dict[str, RefineRunResult] = {}
    try:
        for problem in sorted(problems, key=lambda p: p.id):
            result = RefineRunResult()
            for thread_id in range(threads):
                key = f"thread-{problem.id}-{thread_id:03d}"
                if run_dir.has_stage(key):
                    thread, final_score, final_analyses = _dec_thread_shard(
                        run_dir.load_stage(key)
                    )
                else:
                    thread = sequential_refine(
                        problem, max_iters, backend, seed, thread_id, params
                    )
                    final = thread.final_step
                    if final is None:
                        final_score, final_analyses = None, ()
                    else:
                        final_score, final_analyses = verify_proof(
                            problem,
                            final.proof,
                            MajorityVoteConfig(v),
                            backend,
                            derive_seed(seed, "refine-final-verify", final.proof.id),
                            params,
                            max_in_flight,
                        )
                    run_dir.save_stage(
                        key, _enc_thread_shard(thread, final_score, final_analyses)
                    )
                result.threads.append(thread)
                if thread.final_step is not None:
                    result.final_scores[thread.final_step.proof.id] = final_score
                    result.final_analyses[thread.final_step.proof.id] = tuple(final_analyses)
            scored = {pid: s for pid, s in result.final_scores.items() if s is not None}
            usable = [t for t in result.threads if t.steps and t.steps[-1].proof.id in scored]
            if usable:
                result.metrics = pass_and_best_metrics(usable, scored)
            results[problem.id] = result

        thread_lines = []
        for problem_id in sorted(results):
            for thread in results[problem_id].threads:
                final = thread.final_step
                final_score = (
                    results[problem_id].final_scores.get(final.proof.id) if final else None
                )
                final_analyses = (
                    results[problem_id].final_analyses.get(final.proof.id, ()) if final else ()
                )
                thread_lines.append(_enc_thread_shard(thread, final_score, final_analyses))
        metrics = {
            problem_id: (
                None
                if results[problem_id].metrics is None
                else {
                    "pass_at_1": enc_fraction(results[problem_id].metrics.pass_at_1),
                    "best_at_n": _score_opt(results[problem_id].metrics.best_at_n),
                    "selected_thread_id": results[problem_id].metrics.selected_thread_id,
                }
            )
            for problem_id in sorted(results)
        }
        outputs = {
            "problems.jsonl": run_dir.write_records(
                "problems.jsonl", sorted(problems, key=lambda p: p.id)
            ),
            "threads.json": run_dir.write_json("threads.json", thread_lines),
            "metrics.json": run_dir.write_json("metrics.json", metrics),
        }
        manifest = _finalize(run_dir, outputs)
    except Exception:
        _mark_failed(run_dir)
        raise
    return results, manifest


# ---------------------------------------------------------------------------
# Search runs
# ---------------------------------------------------------------------------


@dataclass
class _SearchShard:
    record: SearchIterationRecord
    added: list[PoolEntry]
    next_index: int


def _enc_search_shard(
    state: SearchState, record: SearchIterationRecord
) -> dict:
    added_ids = set(record.added_proof_ids)
    added = [e for e in state.pool.entries if e.proof.id in added_ids]
    return {
        "record": _enc_iter_record(record),
        "added": [_enc_pool_entry(e) for e in added],
        "next_index": state.next_index,
    }


def _dec_search_shard(obj: dict) -> _SearchShard:
    return _SearchShard(
        record=_dec_iter_record(obj["record"]),
        added=[_dec_pool_entry(e) for e in obj["added"]],
        next_index=obj["next_index"],
    )


def run_search_dir(
    root: Union[str, Path],
    run_id: str,
    problems: Sequence[Problem],
    cfg: SearchConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[dict[str, SearchResult], RunManifest]:
    """Checkpointed search: one shard per (problem, iteration)."""
    config = {
        "init_proofs": cfg.init_proofs,
        "analyses_per_proof": cfg.analyses_per_proof,
        "top_select": cfg.top_select,
        "pairs_per_proof": cfg.pairs_per_proof,
        "max_iterations": cfg.max_iterations,
    }
    run_dir = start_run(root, run_id, RunKind.SEARCH, config, seed)
    results: dict[str, SearchResult] = {}
    try:
        for problem in sorted(problems, key=lambda p: p.id):
            results[problem.id] = _search_one(
                run_dir, problem, cfg, backend, seed, params, max_in_flight
            )
        outputs = {
            "problems.jsonl": run_dir.write_records(
                "problems.jsonl", sorted(problems, key=lambda p: p.id)
            ),
            "pool.json": run_dir.write_json(
                "pool.json",
                {
                    problem_id: [_enc_pool_entry(e) for e in results[problem_id].pool.entries]
                    for problem_id in sorted(results)
                },
            ),
            "transcript.json": run_dir.write_json(
                "transcript.json",
                {
                    problem_id: [_enc_iter_record(r) for r in results[problem_id].records]
                    for problem_id in sorted(results)
                },
            ),
            "result.json": run_dir.write_json(
                "result.json",
                {
                    problem_id: {
                        "certificate": results[problem_id].certificate.value,
                        "best_proof": encode_record(results[problem_id].best_proof),
                        "iterations": results[problem_id].pool.iteration,
                        "pool_size": len(results[problem_id].pool.entries),
                    }
                    for problem_id in sorted(results)
                },
            ),
        }
        manifest = _finalize(run_dir, outputs)
    except Exception:
        _mark_failed(run_dir)
        raise
    return results, manifest


def _search_one(
    run_dir: RunDirectory,
    problem: Problem,
    cfg: SearchConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams,
    max_in_flight: int,
) -> SearchResult:
    state = SearchState(problem=problem, cfg=cfg, seed=seed, pool=CandidatePool(problem.id))
    iteration = 0
    init_key = f"search-{problem.id}-iter-000"
    if run_dir.has_stage(init_key):
        shard = _dec_search_shard(run_dir.load_stage(init_key))
        for entry in shard.added:
            state.pool.add(entry)
        state.next_index = shard.next_index
        state.records.append(shard.record)
    else:
        state = start_search(problem, cfg, backend, seed, params, max_in_flight)
        run_dir.save_stage(init_key, _enc_search_shard(state, state.records[-1]))
    if state.passing_entries():
        return finish_search(state, SearchCertificate.PASSED_ALL)
    for iteration in range(1, cfg.max_iterations + 1):
        key = f"search-{problem.id}-iter-{iteration:03d}"
        if run_dir.has_stage(key):
            shard = _dec_search_shard(run_dir.load_stage(key))
            for entry in shard.added:
                state.pool.add(entry)
            state.next_index = shard.next_index
            state.pool.iteration = iteration
            state.records.append(shard.record)
        else:
            record = search_step(state, backend, params, max_in_flight)
            run_dir.save_stage(key, _enc_search_shard(state, record))
        if state.passing_entries():
            return finish_search(state, SearchCertificate.PASSED_ALL)
    return finish_search(state, SearchCertificate.BUDGET_EXHAUSTED)
