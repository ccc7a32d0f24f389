"""Inference-time compute strategies.

Three protocols over the same backend interface:

- one-shot evaluation: sample g proofs per problem, score each by majority
  vote over v verification analyses, report per-problem and per-category
  means;
- sequential refinement: re-prompt the generator with its own previous
  proof and self-analysis until it assigns itself a perfect score or the
  iteration budget runs out;
- high-compute search: maintain an insert-only pool of candidate proofs
  with verification analyses, repeatedly refine the top-ranked proofs
  against their own analyses until one passes every verification attempt.

All record ids are derived from stable coordinates (problem id, thread,
iteration, call index), so replaying any stage with the same seed yields
byte-identical records.
"""

from __future__ import annotations

import enum
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from proofpipe.backends import (
    Backend,
    BackendError,
    BackendUnavailable,
    CompletionResult,
    Role,
    SamplingParams,
)
from proofpipe.core import (
    AnalysisRole,
    Category,
    Lineage,
    Problem,
    Proof,
    ProofAnalysis,
    ProofPipeError,
    Score,
    derive_seed,
)
from proofpipe.prompts import render_generation, render_refinement, render_verification
from proofpipe.rewards import parse_generator_response, parse_verifier_response

logger = logging.getLogger(__name__)


class NoParseableScores(ProofPipeError):
    """Majority vote asked for over a list with no parseable scores."""


def majority_vote(scores: Sequence[Optional[Score]]) -> Score:
    """Plurality score among parseable entries; ties break toward the lowest.

    The low tie-break is deliberate: the pipeline's failure mode of record
    is calling flawed proofs valid, so ambiguity counts against the proof.
    """
    counts = Counter(s for s in scores if s is not None)
    if not counts:
        raise NoParseableScores("no parseable scores to vote over")
    top = max(counts.values())
    return min(s for s, c in counts.items() if c == top)


@dataclass(frozen=True)
class MajorityVoteConfig:
    v: int = 8  # verification analyses per proof

    def __post_init__(self) -> None:
        if self.v < 1:
            raise ValueError("v must be >= 1")


# ---------------------------------------------------------------------------
# Shared sampling helpers
# ---------------------------------------------------------------------------


def _proof_from_completion(
    item: CompletionResult | BackendError,
    proof_id: str,
    problem_id: str,
    lineage: Lineage,
    sampling_seed: int,
    created_at: int,
) -> Optional[Proof]:
    """Build a Proof from a generator completion; None on backend failure.

    Unparseable or truncated output still yields a proof — the raw text,
    with no self-analysis — because downstream verification does not
    require the generator to have followed its format.
    """
    if isinstance(item, BackendError):
        return None
    parsed = parse_generator_response(item.text)
    if parsed.format_ok and item.finished:
        return Proof(
            id=proof_id,
            problem_id=problem_id,
            solution_text=parsed.solution_text,
            self_analysis_text=parsed.self_analysis_text,
            self_score=parsed.self_score,
            lineage=lineage,
            sampling_seed=sampling_seed,
            created_at=created_at,
        )
    return Proof(
        id=proof_id,
        problem_id=problem_id,
        solution_text=item.text.strip(),
        lineage=lineage,
        sampling_seed=sampling_seed,
        created_at=created_at,
    )


def analyze_proof(
    problem: Problem,
    proof: Proof,
    v: int,
    backend: Backend,
    base_seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[tuple[ProofAnalysis, ...], int]:
    """Sample v verification analyses of one proof.

    Returns the parsed analysis records plus the number of attempts
    (failed calls produce no record but still count as attempts).
    """
    prompt = render_verification(problem, proof)
    items = backend.batch_complete(
        Role.VERIFIER, [prompt] * v, params.with_seed(base_seed), max_in_flight
    )
    analyses = []
    for i, item in enumerate(items):
        if isinstance(item, BackendError):
            logger.warning("verification %d of proof %s failed: %s", i, proof.id, item)
            continue
        parsed = parse_verifier_response(item.text)
        format_ok = parsed.format_ok and item.finished
        analyses.append(
            ProofAnalysis(
                id=f"{proof.id}/v{i:02d}",
                proof_id=proof.id,
                analysis_text=item.text,
                extracted_score=parsed.score if format_ok else None,
                format_ok=format_ok,
                created_at=i,
            )
        )
    return tuple(analyses), len(items)


def verify_proof(
    problem: Problem,
    proof: Proof,
    cfg: MajorityVoteConfig,
    backend: Backend,
    base_seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> tuple[Optional[Score], tuple[ProofAnalysis, ...]]:
    """Majority-vote score over cfg.v analyses; None when nothing parsed."""
    analyses, _ = analyze_proof(problem, proof, cfg.v, backend, base_seed, params, max_in_flight)
    scores = [a.extracted_score for a in analyses]
    try:
        return majority_vote(scores), analyses
    except NoParseableScores:
        return None, analyses


# ---------------------------------------------------------------------------
# One-shot evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemEval:
    problem_id: str
    category: Category
    proofs: tuple[Proof, ...]
    proof_scores: tuple[Optional[Score], ...]  # aligned with proofs
    analyses: tuple[tuple[ProofAnalysis, ...], ...]  # aligned with proofs
    value: Optional[Fraction]  # mean proof score; None = nothing scored

    def __post_init__(self) -> None:
        if not len(self.proofs) == len(self.proof_scores) == len(self.analyses):
            raise ValueError("proofs, scores, and analyses must align")


@dataclass
class OneShotEvalResult:
    problems: list[ProblemEval] = field(default_factory=list)

    def category_means(self) -> dict[Category, Fraction]:
        sums: dict[Category, Fraction] = {}
        counts: dict[Category, int] = {}
        for pe in self.problems:
            if pe.value is None:
                continue
            sums[pe.category] = sums.get(pe.category, Fraction(0)) + pe.value
            counts[pe.category] = counts.get(pe.category, 0) + 1
        return {cat: sums[cat] / counts[cat] for cat in sums}

    def missing_problem_ids(self) -> list[str]:
        return [pe.problem_id for pe in self.problems if pe.value is None]


def eval_problem(
    problem: Problem,
    g: int,
    v: int,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> ProblemEval:
    """Sample g proofs, majority-score each over v analyses, average.

    Proofs that produce no parseable analysis get no score and drop out of
    the mean; a problem where every sample failed outright is reported as
    missing (value None), never as zero.
    """
    if g < 1 or v < 1:
        raise ValueError("g and v must be >= 1")
    gen_prompt = render_generation(problem)
    gen_items = backend.batch_complete(
        Role.GENERATOR,
        [gen_prompt] * g,
        params.with_seed(derive_seed(seed, "eval-gen", problem.id)),
        max_in_flight,
    )
    proofs: list[Proof] = []
    for j, item in enumerate(gen_items):
        proof = _proof_from_completion(
            item, f"{problem.id}/g{j:02d}", problem.id, Lineage.one_shot(), j, j
        )
        if proof is None:
            logger.warning("proof sample %d for %s failed: %s", j, problem.id, item)
        else:
            proofs.append(proof)

    scores: list[Optional[Score]] = []
    analyses: list[tuple[ProofAnalysis, ...]] = []
    vote_cfg = MajorityVoteConfig(v)
    for proof in proofs:
        score, proof_analyses = verify_proof(
            problem,
            proof,
            vote_cfg,
            backend,
            derive_seed(seed, "eval-verify", proof.id),
            params,
            max_in_flight,
        )
        scores.append(score)
        analyses.append(proof_analyses)

    scored = [s.fraction for s in scores if s is not None]
    value = sum(scored, Fraction(0)) / len(scored) if scored else None
    return ProblemEval(
        problem_id=problem.id,
        category=problem.category,
        proofs=tuple(proofs),
        proof_scores=tuple(scores),
        analyses=tuple(analyses),
        value=value,
    )


def one_shot_eval(
    problems: Sequence[Problem],
    g: int,
    v: int,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> OneShotEvalResult:
    """Evaluate every problem; results ordered by problem id."""
    result = OneShotEvalResult()
    for problem in sorted(problems, key=lambda p: p.id):
        result.problems.append(
            eval_problem(problem, g, v, backend, seed, params, max_in_flight)
        )
    return result


# ---------------------------------------------------------------------------
# Sequential refinement
# ---------------------------------------------------------------------------


class StopReason(enum.Enum):
    SELF_PERFECT = "self_perfect"
    MAX_ITERS = "max_iters"
    BACKEND_FAILURE = "backend_failure"


@dataclass(frozen=True)
class RefinementStep:
    proof: Proof
    self_score: Optional[Score]
    raw_text: str = ""  # full completion text; the refinement context


@dataclass(frozen=True)
class RefinementThread:
    thread_id: int
    problem_id: str
    steps: tuple[RefinementStep, ...]
    stopped_reason: StopReason

    def __post_init__(self) -> None:
        if not self.steps and self.stopped_reason is not StopReason.BACKEND_FAILURE:
            raise ValueError("only backend failure can leave a thread with no steps")
        if self.stopped_reason is StopReason.SELF_PERFECT:
            if not self.steps or self.steps[-1].self_score is not Score.ONE:
                raise ValueError("self_perfect requires a final self score of 1")

    @property
    def final_step(self) -> Optional[RefinementStep]:
        return self.steps[-1] if self.steps else None


def _self_analysis_record(proof: Proof) -> ProofAnalysis:
    """The proof's own evaluation, packaged for the refinement prompt.

    When the generator produced no parseable self-evaluation, the slot
    carries an explicit placeholder rather than silently dropping the
    refinement round.
    """
    if proof.self_analysis_text is not None:
        return ProofAnalysis(
            id=f"{proof.id}/self",
            proof_id=proof.id,
            analysis_text=proof.self_analysis_text,
            extracted_score=proof.self_score,
            format_ok=proof.self_score is not None,
            role=AnalysisRole.SELF,
            created_at=proof.created_at,
        )
    return ProofAnalysis(
        id=f"{proof.id}/self",
        proof_id=proof.id,
        analysis_text="No self evaluation was provided for this candidate solution.",
        format_ok=False,
        role=AnalysisRole.SELF,
        created_at=proof.created_at,
    )


def sequential_refine(
    problem: Problem,
    max_iters: int,
    backend: Backend,
    seed: int,
    thread_id: int = 0,
    params: SamplingParams = SamplingParams(),
) -> RefinementThread:
    """One refinement thread: generate, then iteratively self-refine.

    Stops as soon as the generator assigns itself a perfect score, at
    max_iters, or on a backend failure (recording the steps so far).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    steps: list[RefinementStep] = []
    prev: Optional[Proof] = None
    for step_no in range(1, max_iters + 1):
        if prev is None:
            prompt = render_generation(problem)
        else:
            prompt = render_refinement(problem, prev, [_self_analysis_record(prev)])
        step_seed = derive_seed(seed, "refine", problem.id, thread_id, step_no)
        try:
            item = backend.complete(Role.GENERATOR, prompt, params.with_seed(step_seed))
        except BackendError as exc:
            logger.warning(
                "thread %d step %d for %s failed: %s", thread_id, step_no, problem.id, exc
            )
            return RefinementThread(
                thread_id, problem.id, tuple(steps), StopReason.BACKEND_FAILURE
            )
        lineage = (
            Lineage.one_shot()
            if prev is None
            else Lineage.refined(prev.id, (f"{prev.id}/self",))
        )
        proof = _proof_from_completion(
            item,
            f"{problem.id}/t{thread_id:03d}/s{step_no:02d}",
            problem.id,
            lineage,
            step_seed,
            step_no,
        )
        assert proof is not None  # complete() raised rather than returning an error
        steps.append(RefinementStep(proof=proof, self_score=proof.self_score, raw_text=item.text))
        if proof.self_score is Score.ONE:
            return RefinementThread(thread_id, problem.id, tuple(steps), StopReason.SELF_PERFECT)
        prev = proof
    return RefinementThread(thread_id, problem.id, tuple(steps), StopReason.MAX_ITERS)


@dataclass(frozen=True)
class RefineMetrics:
    pass_at_1: Fraction
    best_at_n: Score
    selected_thread_id: int


def pass_and_best_metrics(
    threads: Sequence[RefinementThread],
    verifier_scores: Mapping[str, Score],
) -> RefineMetrics:
    """Pass@1 and Best@N over finished threads.

    pass_at_1 is the mean verifier score of final proofs; best_at_n is the
    verifier score of the final proof with the highest self-assigned score
    (absent self-scores rank lowest; ties go to the lowest thread_id).
    """
    finished = [t for t in threads if t.steps]
    if not finished:
        raise ValueError("no thread produced any proof")
    finals = [(t.thread_id, t.steps[-1]) for t in finished]
    total = sum(
        (verifier_scores[step.proof.id].fraction for _, step in finals), Fraction(0)
    )
    best_id, best_step = min(
        finals,
        key=lambda pair: (
            -(pair[1].self_score.fraction if pair[1].self_score is not None else Fraction(-1)),
            pair[0],
        ),
    )
    return RefineMetrics(
        pass_at_1=total / len(finals),
        best_at_n=verifier_scores[best_step.proof.id],
        selected_thread_id=best_id,
    )


@dataclass
class RefineRunResult:
    threads: list[RefinementThread] = field(default_factory=list)
    final_scores: dict[str, Optional[Score]] = field(default_factory=dict)
    final_analyses: dict[str, tuple[ProofAnalysis, ...]] = field(default_factory=dict)
    metrics: Optional[RefineMetrics] = None


def run_refinement(
    problem: Problem,
    threads: int,
    max_iters: int,
    v: int,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> RefineRunResult:
    """Run independent refinement threads and score their final proofs.

    Threads whose final proof earns no verifier score (or that never
    produced a proof) are excluded from the metrics.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    result = RefineRunResult()
    for thread_id in range(threads):
        result.threads.append(
            sequential_refine(problem, max_iters, backend, seed, thread_id, params)
        )
    for thread in result.threads:
        final = thread.final_step
        if final is None:
            continue
        score, analyses = verify_proof(
            problem,
            final.proof,
            MajorityVoteConfig(v),
            backend,
            derive_seed(seed, "refine-final-verify", final.proof.id),
            params,
            max_in_flight,
        )
        result.final_scores[final.proof.id] = score
        result.final_analyses[final.proof.id] = analyses
    scored = {pid: s for pid, s in result.final_scores.items() if s is not None}
    usable = [
        t for t in result.threads if t.steps and t.steps[-1].proof.id in scored
    ]
    if usable:
        result.metrics = pass_and_best_metrics(usable, scored)
    return result


# ---------------------------------------------------------------------------
# High-compute search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    init_proofs: int = 64
    analyses_per_proof: int = 64
    top_select: int = 64
    pairs_per_proof: int = 8
    max_iterations: int = 16

    def __post_init__(self) -> None:
        for name in (
            "init_proofs",
            "analyses_per_proof",
            "top_select",
            "pairs_per_proof",
            "max_iterations",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


class SearchCertificate(enum.Enum):
    PASSED_ALL = "passed_all"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class PoolEntry:
    proof: Proof
    analyses: tuple[ProofAnalysis, ...]
    attempts: int  # analyses requested, including failed calls
    iteration_added: int

    def __post_init__(self) -> None:
        if self.attempts < len(self.analyses):
            raise ValueError("attempts cannot be fewer than recorded analyses")

    @property
    def mean_score(self) -> Fraction:
        """Mean over all attempts; unparseable or failed analyses count 0."""
        total = sum(
            (a.extracted_score.fraction for a in self.analyses if a.extracted_score is not None),
            Fraction(0),
        )
        return total / self.attempts

    def passed_all(self, required: int) -> bool:
        """Every one of `required` verification attempts parsed to score 1."""
        return (
            self.attempts == required
            and len(self.analyses) == required
            and all(a.extracted_score is Score.ONE for a in self.analyses)
        )


@dataclass
class CandidatePool:
    """Insert-only candidate set; ranking is (mean desc, created asc, id)."""

    problem_id: str
    entries: list[PoolEntry] = field(default_factory=list)
    iteration: int = 0

    def add(self, entry: PoolEntry) -> None:
        if entry.proof.problem_id != self.problem_id:
            raise ValueError(
                f"entry proof {entry.proof.id} belongs to {entry.proof.problem_id}, "
                f"not {self.problem_id}"
            )
        self.entries.append(entry)

    def ranked(self) -> list[PoolEntry]:
        return sorted(
            self.entries,
            key=lambda e: (-e.mean_score, e.proof.created_at, e.proof.id),
        )

    def max_mean_score(self) -> Fraction:
        return max(e.mean_score for e in self.entries)


@dataclass(frozen=True)
class SearchIterationRecord:
    """What one search iteration did; iteration 0 is pool initialization."""

    iteration: int
    selected_proof_ids: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...]  # (proof_id, analysis_id) in prompt order
    added_proof_ids: tuple[str, ...]
    pool_size: int
    max_mean_score: Fraction


@dataclass
class SearchState:
    problem: Problem
    cfg: SearchConfig
    seed: int
    pool: CandidatePool
    next_index: int = 0
    records: list[SearchIterationRecord] = field(default_factory=list)

    def passing_entries(self) -> list[PoolEntry]:
        return [e for e in self.pool.entries if e.passed_all(self.cfg.analyses_per_proof)]


@dataclass(frozen=True)
class SearchResult:
    problem_id: str
    best_proof: Proof
    certificate: SearchCertificate
    pool: CandidatePool
    records: tuple[SearchIterationRecord, ...]


def _new_entry(
    state: SearchState,
    item: CompletionResult | BackendError,
    lineage: Lineage,
    sampling_seed: int,
    iteration: int,
    backend: Backend,
    params: SamplingParams,
    max_in_flight: int,
) -> Optional[PoolEntry]:
    index = state.next_index
    proof = _proof_from_completion(
        item,
        f"{state.problem.id}/c{index:05d}",
        state.problem.id,
        lineage,
        sampling_seed,
        index,
    )
    if proof is None:
        return None
    state.next_index = index + 1
    analyses, attempts = analyze_proof(
        state.problem,
        proof,
        state.cfg.analyses_per_proof,
        backend,
        derive_seed(state.seed, "search-verify", proof.id),
        params,
        max_in_flight,
    )
    return PoolEntry(proof=proof, analyses=analyses, attempts=attempts, iteration_added=iteration)


def start_search(
    problem: Problem,
    cfg: SearchConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> SearchState:
    """Initialize the pool: init_proofs samples, each fully analyzed."""
    state = SearchState(problem=problem, cfg=cfg, seed=seed, pool=CandidatePool(problem.id))
    prompt = render_generation(problem)
    base_seed = derive_seed(seed, "search-gen", 0)
    items = backend.batch_complete(
        Role.GENERATOR, [prompt] * cfg.init_proofs, params.with_seed(base_seed), max_in_flight
    )
    added = []
    for i, item in enumerate(items):
        entry = _new_entry(
            state, item, Lineage.one_shot(), base_seed + i, 0, backend, params, max_in_flight
        )
        if entry is None:
            logger.warning("initial proof %d for %s failed: %s", i, problem.id, item)
            continue
        state.pool.add(entry)
        added.append(entry.proof.id)
    if not state.pool.entries:
        raise BackendUnavailable(f"no initial proofs survived for problem {problem.id}")
    state.records.append(
        SearchIterationRecord(
            iteration=0,
            selected_proof_ids=(),
            pairs=(),
            added_proof_ids=tuple(added),
            pool_size=len(state.pool.entries),
            max_mean_score=state.pool.max_mean_score(),
        )
    )
    return state


def _select_pairs(
    entry: PoolEntry, pairs_per_proof: int, rng: random.Random
) -> list[ProofAnalysis]:
    """Draw analyses for refinement, issue-reporting ones first.

    Both groups are shuffled, then issue-reporting analyses are taken
    before clean ones; unparseable analyses carry no usable finding and
    are never paired. Selection is without replacement.
    """
    issues = [a for a in entry.analyses if a.reports_issues()]
    clean = [a for a in entry.analyses if a.format_ok and not a.reports_issues()]
    rng.shuffle(issues)
    rng.shuffle(clean)
    return (issues + clean)[:pairs_per_proof]


def search_step(
    state: SearchState,
    backend: Backend,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> SearchIterationRecord:
    """One search iteration: select, pair, refine, analyze, insert."""
    iteration = state.pool.iteration + 1
    selected = state.pool.ranked()[: state.cfg.top_select]
    pairs: list[tuple[PoolEntry, ProofAnalysis]] = []
    for entry in selected:
        rng = random.Random(
            derive_seed(state.seed, "search-pairs", iteration, entry.proof.id)
        )
        for analysis in _select_pairs(entry, state.cfg.pairs_per_proof, rng):
            pairs.append((entry, analysis))

    prompts = [
        render_refinement(state.problem, entry.proof, [analysis])
        for entry, analysis in pairs
    ]
    added = []
    if prompts:
        base_seed = derive_seed(state.seed, "search-gen", iteration)
        items = backend.batch_complete(
            Role.GENERATOR, prompts, params.with_seed(base_seed), max_in_flight
        )
        for i, ((entry, analysis), item) in enumerate(zip(pairs, items)):
            new = _new_entry(
                state,
                item,
                Lineage.refined(entry.proof.id, (analysis.id,)),
                base_seed + i,
                iteration,
                backend,
                params,
                max_in_flight,
            )
            if new is None:
                logger.warning(
                    "refinement of %s via %s failed: %s", entry.proof.id, analysis.id, item
                )
                continue
            state.pool.add(new)
            added.append(new.proof.id)
    state.pool.iteration = iteration
    record = SearchIterationRecord(
        iteration=iteration,
        selected_proof_ids=tuple(e.proof.id for e in selected),
        pairs=tuple((e.proof.id, a.id) for e, a in pairs),
        added_proof_ids=tuple(added),
        pool_size=len(state.pool.entries),
        max_mean_score=state.pool.max_mean_score(),
    )
    state.records.append(record)
    return record


def finish_search(state: SearchState, certificate: SearchCertificate) -> SearchResult:
    if certificate is SearchCertificate.PASSED_ALL:
        passing = state.passing_entries()
        best = min(
            passing, key=lambda e: (-e.mean_score, e.proof.created_at, e.proof.id)
        )
    else:
        best = state.pool.ranked()[0]
    return SearchResult(
        problem_id=state.problem.id,
        best_proof=best.proof,
        certificate=certificate,
        pool=state.pool,
        records=tuple(state.records),
    )


def high_compute_search(
    problem: Problem,
    cfg: SearchConfig,
    backend: Backend,
    seed: int,
    params: SamplingParams = SamplingParams(),
    max_in_flight: int = 8,
) -> SearchResult:
    """Search until a proof passes all its verification attempts.

    The pool starts from cfg.init_proofs one-shot samples; every iteration
    refines the top-ranked proofs against their own analyses and inserts
    the refined proofs with fresh analyses. Terminates with PASSED_ALL as
    soon as any entry's analyses are unanimously score 1, or with
    BUDGET_EXHAUSTED after cfg.max_iterations.
    """
    state = start_search(problem, cfg, backend, seed, params, max_in_flight)
    if state.passing_entries():
        return finish_search(state, SearchCertificate.PASSED_ALL)
    for _ in range(cfg.max_iterations):
        search_step(state, backend, params, max_in_flight)
        if state.passing_entries():
            return finish_search(state, SearchCertificate.PASSED_ALL)
    return finish_search(state, SearchCertificate.BUDGET_EXHAUSTED)
