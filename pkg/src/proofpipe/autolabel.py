"""Automated proof labeling.

Each proof gets n independent verification analyses. Every analysis that
reports an issue (score < 1) is checked by m meta-assessments; it is valid
if a strict majority confirm it. A proof is labeled 1 only when no issue
report anywhere survived validation; it is labeled with the minimum
parseable score L < 1 when at least k valid analyses carry exactly L;
anything else is undecided and follows the configured policy.

Record ids are derived from the proof id and call indices (not a global
counter), so re-running one proof's pipeline — e.g. when resuming a
checkpointed run — reproduces byte-identical records.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from proofpipe.backends import (
    Backend,
    BackendError,
    CompletionResult,
    Role,
    SamplingParams,
)
from proofpipe.core import (
    LabelSource,
    MetaAssessment,
    MetaExample,
    Problem,
    Proof,
    ProofAnalysis,
    ProofLabel,
    Score,
    derive_seed,
)
from proofpipe.prompts import render_meta, render_verification
from proofpipe.rewards import parse_meta_response, parse_verifier_response
from proofpipe.strategies import majority_vote

logger = logging.getLogger(__name__)


class UndecidedPolicy(enum.Enum):
    ROUTE_TO_HUMAN = "route_to_human"
    DISCARD = "discard"


class Decision(enum.Enum):
    LABELED = "labeled"
    ROUTED_TO_HUMAN = "routed_to_human"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class AutoLabelConfig:
    n: int = 8  # verification analyses per proof
    m: int = 5  # meta-assessments per issue-reporting analysis
    k: int = 2  # valid lowest-score analyses required to label below 1
    undecided_policy: UndecidedPolicy = UndecidedPolicy.ROUTE_TO_HUMAN

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ValueError("n, m, and k must all be positive")
        if self.k > self.n:
            raise ValueError(f"k={self.k} cannot exceed n={self.n}")


def strict_majority(confirmations: int, m: int) -> bool:
    """True when confirmations form a strict majority of m assessments."""
    return 2 * confirmations > m


@dataclass(frozen=True)
class ValidationResult:
    """Meta-verdict on one issue-reporting analysis."""

    analysis_id: str
    confirmations: int
    valid: bool
    assessments: tuple[MetaAssessment, ...] = ()
    failures: int = 0  # meta calls that errored out (count as non-confirmation)


@dataclass(frozen=True)
class AutoLabelOutcome:
    proof_id: str
    decision: Decision
    score: Optional[Score]
    analyses: tuple[ProofAnalysis, ...]
    validations: tuple[ValidationResult, ...]
    label: Optional[ProofLabel] = None
    meta_examples: tuple[MetaExample, ...] = ()

    def __post_init__(self) -> None:
        if (self.decision is Decision.LABELED) != (self.score is not None):
            raise ValueError("labeled outcomes carry a score; undecided ones do not")
        if (self.decision is Decision.LABELED) != (self.label is not None):
            raise ValueError("labeled outcomes carry exactly the emitted label")


def decide_label(
    extracted_scores: Sequence[Optional[Score]],
    valid_indices: Sequence[int],
    cfg: AutoLabelConfig,
) -> tuple[Decision, Optional[Score]]:
    """Label decision from per-analysis scores and validated indices.

    extracted_scores has one entry per analysis (None = unparseable);
    valid_indices are the positions whose issue report won its
    meta-majority. Returns the decision and, when LABELED, the score.
    """
    undecided = (
        Decision.ROUTED_TO_HUMAN
        if cfg.undecided_policy is UndecidedPolicy.ROUTE_TO_HUMAN
        else Decision.DISCARDED,
        None,
    )
    parseable = [s for s in extracted_scores if s is not None]
    if not parseable:
        return undecided
    validated = [
        extracted_scores[i]
        for i in valid_indices
        if extracted_scores[i] is not None and extracted_scores[i] < Score.ONE
    ]
    if not validated:
        return Decision.LABELED, Score.ONE
    lowest = min(parseable)
    if sum(1 for s in validated if s == lowest) >= cfg.k:
        return Decision.LABELED, lowest
    return undecided


def validate_analysis(
    problem: Problem,
    proof: Proof,
    analysis: ProofAnalysis,
    m: int,
    backend: Backend,
    base_seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> ValidationResult:
    """Run m meta-assessments of one issue-reporting analysis.

    A confirmation is a parseable meta-response with quality >= 0.5; the
    analysis is valid when confirmations form a strict majority of m.
    Backend failures and unparseable responses count as non-confirmations.
    """
    if not analysis.reports_issues():
        raise ValueError(f"analysis {analysis.id!r} reports no issues; nothing to validate")
    prompt = render_meta(problem, proof, analysis)
    items = backend.batch_complete(
        Role.META_VERIFIER, [prompt] * m, params.with_seed(base_seed), max_in_flight
    )
    assessments = []
    confirmations = 0
    failures = 0
    for j, item in enumerate(items):
        if isinstance(item, BackendError):
            failures += 1
            logger.warning("meta call %d for analysis %s failed: %s", j, analysis.id, item)
            continue
        parsed = parse_meta_response(item.text)
        format_ok = parsed.format_ok and item.finished
        quality = parsed.quality_score if format_ok else None
        assessments.append(
            MetaAssessment(
                id=f"{analysis.id}/m{j:02d}",
                analysis_id=analysis.id,
                meta_text=item.text,
                quality_score=quality,
                format_ok=format_ok,
            )
        )
        if quality is not None and quality >= Score.HALF:
            confirmations += 1
    return ValidationResult(
        analysis_id=analysis.id,
        confirmations=confirmations,
        valid=strict_majority(confirmations, m),
        assessments=tuple(assessments),
        failures=failures,
    )


def _analysis_from_completion(
    item: CompletionResult | BackendError, analysis_id: str, proof_id: str, created_at: int
) -> Optional[ProofAnalysis]:
    if isinstance(item, BackendError):
        return None
    parsed = parse_verifier_response(item.text)
    format_ok = parsed.format_ok and item.finished
    return ProofAnalysis(
        id=analysis_id,
        proof_id=proof_id,
        analysis_text=item.text,
        extracted_score=parsed.score if format_ok else None,
        format_ok=format_ok,
        created_at=created_at,
    )


def autolabel_proof(
    problem: Problem,
    proof: Proof,
    cfg: AutoLabelConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> AutoLabelOutcome:
    """Label one proof: n analyses, meta-validation, decision."""
    prompt = render_verification(problem, proof)
    items = backend.batch_complete(
        Role.VERIFIER,
        [prompt] * cfg.n,
        params.with_seed(derive_seed(seed, "autolabel-verify", proof.id)),
        max_in_flight,
    )
    analyses: list[ProofAnalysis] = []
    scores: list[Optional[Score]] = []
    for i, item in enumerate(items):
        analysis = _analysis_from_completion(item, f"{proof.id}/a{i:02d}", proof.id, i)
        if analysis is None:
            logger.warning("verification call %d for proof %s failed: %s", i, proof.id, item)
        analyses.append(analysis)
        scores.append(analysis.extracted_score if analysis else None)

    validations: list[ValidationResult] = []
    valid_indices: list[int] = []
    for i, analysis in enumerate(analyses):
        if analysis is None or not analysis.reports_issues():
            continue
        validation = validate_analysis(
            problem,
            proof,
            analysis,
            cfg.m,
            backend,
            derive_seed(seed, "autolabel-meta", proof.id, i),
            params,
            max_in_flight,
        )
        validations.append(validation)
        if validation.valid:
            valid_indices.append(i)

    decision, score = decide_label(scores, valid_indices, cfg)

    kept_analyses = tuple(a for a in analyses if a is not None)
    label = None
    meta_examples = []
    if decision is Decision.LABELED:
        evidence = tuple(
            analyses[i].id for i in valid_indices if analyses[i].extracted_score == score
        )
        label = ProofLabel(
            proof_id=proof.id,
            score=score,
            source=LabelSource.AUTO,
            evidence_analysis_ids=evidence,
        )
    for validation in validations:
        if not validation.valid:
            continue
        meta_scores = [
            a.quality_score for a in validation.assessments if a.quality_score is not None
        ]
        meta_examples.append(
            MetaExample(
                problem_id=problem.id,
                proof_id=proof.id,
                analysis_id=validation.analysis_id,
                quality_score=majority_vote(meta_scores),
                source=LabelSource.AUTO,
            )
        )
    return AutoLabelOutcome(
        proof_id=proof.id,
        decision=decision,
        score=score,
        analyses=kept_analyses,
        validations=tuple(validations),
        label=label,
        meta_examples=tuple(meta_examples),
    )


@dataclass
class AutoLabelRunResult:
    outcomes: list[AutoLabelOutcome] = field(default_factory=list)
    labels: list[ProofLabel] = field(default_factory=list)
    meta_examples: list[MetaExample] = field(default_factory=list)
    routed: list[str] = field(default_factory=list)
    discarded: list[str] = field(default_factory=list)

    def add(self, outcome: AutoLabelOutcome) -> None:
        self.outcomes.append(outcome)
        if outcome.label is not None:
            self.labels.append(outcome.label)
        self.meta_examples.extend(outcome.meta_examples)
        if outcome.decision is Decision.ROUTED_TO_HUMAN:
            self.routed.append(outcome.proof_id)
        elif outcome.decision is Decision.DISCARDED:
            self.discarded.append(outcome.proof_id)


def run_autolabel(
    problems: Sequence[Problem],
    proofs: Sequence[Proof],
    cfg: AutoLabelConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> AutoLabelRunResult:
    """Label every proof; output lists are ordered by proof id.

    One proof's backend failure does not abort the run: a proof whose
    pipeline cannot complete follows the undecided policy.
    """
    by_id = {p.id: p for p in problems}
    missing = [proof.id for proof in proofs if proof.problem_id not in by_id]
    if missing:
        raise ValueError(f"proofs reference unknown problems: {missing}")
    result = AutoLabelRunResult()
    for proof in sorted(proofs, key=lambda p: p.id):
        try:
            outcome = autolabel_proof(
                by_id[proof.problem_id], proof, cfg, backend, seed, params, max_in_flight
            )
        except BackendError as exc:
            logger.error("proof %s pipeline failed: %s", proof.id, exc)
            decision = (
                Decision.ROUTED_TO_HUMAN
                if cfg.undecided_policy is UndecidedPolicy.ROUTE_TO_HUMAN
                else Decision.DISCARDED
            )
            outcome = AutoLabelOutcome(proof.id, decision, None, (), ())
        result.add(outcome)
    return result
