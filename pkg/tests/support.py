"""Shared builders and golden corpora for the test suite.

The golden response corpora double as the format contract: every entry is a
synthesized model response annotated with the expected parse outcome. The
acceptance suite reuses them, so keep each kind at twenty-plus entries
covering well-formed responses, missing anchors, out-of-domain scores,
truncations, and duplicate boxed tokens.
"""

from __future__ import annotations

import itertools
import random
import string
from fractions import Fraction
from math import comb
from typing import Optional

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
    Score,
    format_score,
)
from proofpipe.rewards import (
    META_EVAL_ANCHOR,
    META_SCORE_ANCHOR,
    SELF_EVAL_HEADING,
    SOLUTION_HEADING,
    VERIFIER_EVAL_ANCHOR,
    VERIFIER_SCORE_ANCHOR,
)

# ---------------------------------------------------------------------------
# Canonical response synthesis (the round-trip partners of the parsers)
# ---------------------------------------------------------------------------


def synth_verifier(score: Score, body: str = "The argument is checked step by step.") -> str:
    return (
        f"{VERIFIER_EVAL_ANCHOR}\n\n{body}\n\n"
        f"{VERIFIER_SCORE_ANCHOR} \\boxed{{{format_score(score)}}}"
    )


def synth_meta(score: Score, body: str = "Each claimed issue was checked against the proof.") -> str:
    return (
        f"{META_EVAL_ANCHOR}\n\n{body}\n\n"
        f"{META_SCORE_ANCHOR} \\boxed{{{format_score(score)}}}"
    )


def synth_generator(solution: str, self_analysis: str) -> str:
    return f"{SOLUTION_HEADING}\n\n{solution}\n\n{SELF_EVAL_HEADING}\n\n{self_analysis}"


# ---------------------------------------------------------------------------
# Record builders
# ---------------------------------------------------------------------------


def make_problem(idx: int = 0, category: Category = Category.OTHER) -> Problem:
    return Problem(
        id=f"prob-{idx:03d}",
        statement=f"Prove that statement number {idx} holds for all natural numbers.",
        category=category,
        source="unit-test",
    )


def make_flawed_proof(problem: Problem, idx: int, quality: str = "0") -> Proof:
    """A proof the stochastic mock treats as having latent quality < 1."""
    return Proof(
        id=f"{problem.id}/flawed-{idx:04d}",
        problem_id=problem.id,
        solution_text=(
            f"Step 1 asserts the key bound. QLATENT:{quality} FLAW:g{idx:08x}\n"
            "Step 2 concludes by induction."
        ),
        created_at=idx,
    )


def make_clean_proof(problem: Problem, idx: int) -> Proof:
    """A proof the stochastic mock treats as fully correct."""
    return Proof(
        id=f"{problem.id}/clean-{idx:04d}",
        problem_id=problem.id,
        solution_text=f"QLATENT:1\nA complete argument, numbered {idx}, with every case handled.",
        created_at=idx,
    )


def make_analysis(proof: Proof, idx: int, score: Optional[Score]) -> ProofAnalysis:
    """A structured analysis record; score None means format failure."""
    if score is None:
        return ProofAnalysis(
            id=f"{proof.id}/a{idx:02d}",
            proof_id=proof.id,
            analysis_text="garbled output with no anchors",
            extracted_score=None,
            format_ok=False,
            created_at=idx,
        )
    return ProofAnalysis(
        id=f"{proof.id}/a{idx:02d}",
        proof_id=proof.id,
        analysis_text=synth_verifier(score),
        extracted_score=score,
        format_ok=True,
        created_at=idx,
    )


# ---------------------------------------------------------------------------
# Golden corpora: (name, text, expected_format_ok, expected_score)
# ---------------------------------------------------------------------------

_SOLID_BODY = (
    "Step 1 is a correct application of the triangle inequality.\n"
    "Step 2 follows by induction on n; the base case is checked explicitly.\n"
    "I found no justification gaps."
)
_ISSUE_BODY = (
    "Paragraph 2 divides by (x - 1) without excluding x = 1; the conclusion\n"
    "still holds after patching, so this is a justification gap."
)


def _v(body_lines: str, score_token: str, *, prefix: str = "", suffix: str = "") -> str:
    return (
        f"{prefix}{VERIFIER_EVAL_ANCHOR}\n\n{body_lines}\n\n"
        f"{VERIFIER_SCORE_ANCHOR} \\boxed{{{score_token}}}{suffix}"
    )


GOLDEN_VERIFIER: list[tuple[str, str, bool, Optional[Score]]] = [
    ("minimal-one", synth_verifier(Score.ONE), True, Score.ONE),
    ("minimal-half", synth_verifier(Score.HALF, _ISSUE_BODY), True, Score.HALF),
    ("minimal-zero", synth_verifier(Score.ZERO, "The main lemma is false as stated."), True, Score.ZERO),
    ("spelled-1.0", _v(_SOLID_BODY, "1.0"), True, Score.ONE),
    ("spelled-0.0", _v(_ISSUE_BODY, "0.0"), True, Score.ZERO),
    ("spelled-dot5", _v(_ISSUE_BODY, ".5"), True, Score.HALF),
    ("padded-token", _v(_ISSUE_BODY, " 0.5 "), True, Score.HALF),
    ("preamble-before-anchor", _v(_SOLID_BODY, "1", prefix="Let me think about this carefully.\n\n"), True, Score.ONE),
    ("trailing-text-after-box", _v(_ISSUE_BODY, "0.5", suffix="\n\nThat concludes my evaluation."), True, Score.HALF),
    (
        "duplicate-boxed-last-wins",
        _v(_ISSUE_BODY, "0") + " Reconsidering the gap, the score should be \\boxed{0.5}.",
        True,
        Score.HALF,
    ),
    (
        "invalid-then-valid-boxed",
        _v(_ISSUE_BODY, "0.7") + " On the rubric that means \\boxed{0.5}.",
        True,
        Score.HALF,
    ),
    (
        "boxed-before-anchor-ignored",
        f"{VERIFIER_EVAL_ANCHOR}\n\nEarly guess: \\boxed{{1}} but see below.\n\n"
        f"{VERIFIER_SCORE_ANCHOR} \\boxed{{0}}",
        True,
        Score.ZERO,
    ),
    (
        "latex-boxed-in-body-skipped",
        f"{VERIFIER_EVAL_ANCHOR}\n\nThe final display is $\\boxed{{x+1}}$ which is wrong.\n\n"
        f"{VERIFIER_SCORE_ANCHOR} the rubric gives \\boxed{{x+1}} no wait, \\boxed{{0.5}}",
        True,
        Score.HALF,
    ),
    (
        "score-anchor-repeated",
        _v(_ISSUE_BODY, "0.5") + f"\n\n{VERIFIER_SCORE_ANCHOR} \\boxed{{0.5}}",
        True,
        Score.HALF,
    ),
    ("empty-text", "", False, None),
    ("plain-prose", "This proof looks fine to me. Score: 1", False, None),
    (
        "missing-eval-anchor",
        f"{VERIFIER_SCORE_ANCHOR} \\boxed{{1}}",
        False,
        None,
    ),
    (
        "missing-score-anchor",
        f"{VERIFIER_EVAL_ANCHOR}\n\n{_SOLID_BODY}\n\nOverall I give it \\boxed{{1}}.",
        False,
        None,
    ),
    (
        "boxed-only-before-anchor",
        f"{VERIFIER_EVAL_ANCHOR}\n\n\\boxed{{1}}\n\n{VERIFIER_SCORE_ANCHOR} pending.",
        False,
        None,
    ),
    ("out-of-domain-score", _v(_ISSUE_BODY, "0.7"), False, None),
    ("out-of-domain-two", _v(_SOLID_BODY, "2"), False, None),
    ("nonstandard-spelling", _v(_ISSUE_BODY, "0.50"), False, None),
    ("empty-boxed", _v(_ISSUE_BODY, ""), False, None),
    (
        "nested-braces-boxed",
        f"{VERIFIER_EVAL_ANCHOR}\n\n{_ISSUE_BODY}\n\n{VERIFIER_SCORE_ANCHOR} \\boxed{{\\frac{{1}}{{2}}}}",
        False,
        None,
    ),
    (
        "anchor-case-mismatch",
        "here is my evaluation of the solution:\n\nFine.\n\n"
        "based on my evaluation, the final overall score should be: \\boxed{1}",
        False,
        None,
    ),
    (
        "truncated-mid-anchor",
        f"{VERIFIER_EVAL_ANCHOR}\n\n{_ISSUE_BODY}\n\nBased on my evaluation, the final",
        False,
        None,
    ),
    (
        "meta-anchors-not-accepted",
        f"{META_EVAL_ANCHOR}\n\nLooks right.\n\n{META_SCORE_ANCHOR} \\boxed{{1}}",
        False,
        None,
    ),
]


def _m(body_lines: str, score_token: str, *, prefix: str = "", suffix: str = "") -> str:
    return (
        f"{prefix}{META_EVAL_ANCHOR}\n\n{body_lines}\n\n"
        f"{META_SCORE_ANCHOR} \\boxed{{{score_token}}}{suffix}"
    )


_META_GOOD = "The quoted sentence exists in paragraph 2 and indeed divides by zero."
_META_BAD = "The evaluation claims a gap in step 3, but step 3 is fully justified."

GOLDEN_META: list[tuple[str, str, bool, Optional[Score]]] = [
    ("minimal-one", synth_meta(Score.ONE), True, Score.ONE),
    ("minimal-zero", synth_meta(Score.ZERO, _META_BAD), True, Score.ZERO),
    ("minimal-half", synth_meta(Score.HALF, "Partially supported claims."), True, Score.HALF),
    ("spelled-1.0", _m(_META_GOOD, "1.0"), True, Score.ONE),
    ("spelled-0.0", _m(_META_BAD, "0.0"), True, Score.ZERO),
    ("spelled-dot5", _m(_META_BAD, ".5"), True, Score.HALF),
    ("padded-token", _m(_META_GOOD, " 1 "), True, Score.ONE),
    ("preamble", _m(_META_GOOD, "1", prefix="Checking each claimed issue in turn.\n\n"), True, Score.ONE),
    ("trailing-text", _m(_META_BAD, "0", suffix="\n\nHence the rating."), True, Score.ZERO),
    (
        "duplicate-boxed-last-wins",
        _m(_META_BAD, "1") + " Actually the citation is wrong: \\boxed{0}.",
        True,
        Score.ZERO,
    ),
    (
        "invalid-then-valid",
        _m(_META_GOOD, "yes") + " On the rubric: \\boxed{1}",
        True,
        Score.ONE,
    ),
    (
        "boxed-before-anchor-ignored",
        f"{META_EVAL_ANCHOR}\n\nTentatively \\boxed{{0}}.\n\n{META_SCORE_ANCHOR} \\boxed{{1}}",
        True,
        Score.ONE,
    ),
    ("empty-text", "", False, None),
    ("plain-prose", "The evaluation seems accurate. Rating: 1", False, None),
    ("missing-eval-anchor", f"{META_SCORE_ANCHOR} \\boxed{{1}}", False, None),
    (
        "missing-score-anchor",
        f"{META_EVAL_ANCHOR}\n\n{_META_GOOD}\n\nI rate it \\boxed{{1}}.",
        False,
        None,
    ),
    (
        "boxed-only-before-anchor",
        f"{META_EVAL_ANCHOR}\n\n\\boxed{{1}}\n\n{META_SCORE_ANCHOR} to be decided.",
        False,
        None,
    ),
    ("out-of-domain-score", _m(_META_GOOD, "0.9"), False, None),
    ("empty-boxed", _m(_META_BAD, ""), False, None),
    (
        "verifier-anchors-not-accepted",
        f"{VERIFIER_EVAL_ANCHOR}\n\nFine.\n\n{VERIFIER_SCORE_ANCHOR} \\boxed{{1}}",
        False,
        None,
    ),
    (
        "truncated-mid-anchor",
        f'{META_EVAL_ANCHOR}\n\n{_META_GOOD}\n\nBased on my analysis, I will rate the "solution',
        False,
        None,
    ),
    ("nonstandard-spelling", _m(_META_GOOD, "1.00"), False, None),
]


_SOLUTION_BODY = (
    "Let n = 2k. Then n^2 = 4k^2 = 2(2k^2), which is even.\n\n"
    "Therefore the square of an even integer is even. $\\blacksquare$"
)

# (name, text, format_ok, solution_text, self_score)
GOLDEN_GENERATOR: list[tuple[str, str, bool, str, Optional[Score]]] = [
    (
        "canonical",
        synth_generator(_SOLUTION_BODY, synth_verifier(Score.ONE)),
        True,
        _SOLUTION_BODY,
        Score.ONE,
    ),
    (
        "self-reported-half",
        synth_generator("A sketch relying on an unproven lemma.", synth_verifier(Score.HALF, _ISSUE_BODY)),
        True,
        "A sketch relying on an unproven lemma.",
        Score.HALF,
    ),
    (
        "self-reported-zero",
        synth_generator("An attempt with a fatal gap.", synth_verifier(Score.ZERO)),
        True,
        "An attempt with a fatal gap.",
        Score.ZERO,
    ),
    (
        "preamble-before-solution",
        "I will first outline the approach.\n\n"
        + synth_generator(_SOLUTION_BODY, synth_verifier(Score.ONE)),
        True,
        _SOLUTION_BODY,
        Score.ONE,
    ),
    (
        "boxed-inside-solution-harmless",
        synth_generator("The answer is $\\boxed{42}$, proven by direct computation.", synth_verifier(Score.ONE)),
        True,
        "The answer is $\\boxed{42}$, proven by direct computation.",
        Score.ONE,
    ),
    (
        "heading-with-trailing-text",
        "## Solution (revised)\n\nBody of the revision.\n\n"
        + f"{SELF_EVAL_HEADING}\n\n{synth_verifier(Score.HALF)}",
        True,
        "(revised)\n\nBody of the revision.",
        Score.HALF,
    ),
    (
        "duplicate-boxed-in-self-eval",
        synth_generator(_SOLUTION_BODY, synth_verifier(Score.ZERO) + " Final answer \\boxed{0.5}"),
        True,
        _SOLUTION_BODY,
        Score.HALF,
    ),
    (
        "extra-sections-inside-solution",
        synth_generator("### Lemma 1\n\nHolds.\n\n### Lemma 2\n\nAlso holds.", synth_verifier(Score.ONE)),
        True,
        "### Lemma 1\n\nHolds.\n\n### Lemma 2\n\nAlso holds.",
        Score.ONE,
    ),
    (
        "empty-solution-span",
        synth_generator("", synth_verifier(Score.ZERO)),
        True,
        "",
        Score.ZERO,
    ),
    (
        "spelled-scores-in-tail",
        synth_generator(_SOLUTION_BODY, _v(_ISSUE_BODY, ".5")),
        True,
        _SOLUTION_BODY,
        Score.HALF,
    ),
    (
        "cr-only-line-ending-rejected",
        "intro\r## Solution\nbody\n" + f"{SELF_EVAL_HEADING}\n{synth_verifier(Score.ONE)}",
        False,
        "",
        None,
    ),
    ("empty-text", "", False, "", None),
    (
        "missing-solution-heading",
        f"A proof.\n\n{SELF_EVAL_HEADING}\n\n{synth_verifier(Score.ONE)}",
        False,
        "",
        None,
    ),
    (
        "missing-self-eval-heading",
        f"{SOLUTION_HEADING}\n\n{_SOLUTION_BODY}\n\n{synth_verifier(Score.ONE)}",
        False,
        "",
        None,
    ),
    (
        "self-eval-before-solution",
        f"{SELF_EVAL_HEADING}\n\n{synth_verifier(Score.ONE)}\n\n{SOLUTION_HEADING}\n\n{_SOLUTION_BODY}",
        False,
        "",
        None,
    ),
    (
        "heading-not-at-line-start",
        f"see ## Solution\n\n{_SOLUTION_BODY}\n\n{SELF_EVAL_HEADING}\n\n{synth_verifier(Score.ONE)}",
        False,
        "",
        None,
    ),
    (
        "lowercase-headings",
        f"## solution\n\n{_SOLUTION_BODY}\n\n## self evaluation\n\n{synth_verifier(Score.ONE)}",
        False,
        "",
        None,
    ),
    (
        "tail-missing-eval-anchor",
        synth_generator(_SOLUTION_BODY, f"{VERIFIER_SCORE_ANCHOR} \\boxed{{1}}"),
        False,
        "",
        None,
    ),
    (
        "tail-missing-score-anchor",
        synth_generator(_SOLUTION_BODY, f"{VERIFIER_EVAL_ANCHOR}\n\nAll good. \\boxed{{1}}"),
        False,
        "",
        None,
    ),
    (
        "tail-out-of-domain-score",
        synth_generator(_SOLUTION_BODY, _v(_SOLID_BODY, "0.8")),
        False,
        "",
        None,
    ),
    (
        "tail-truncated-after-heading",
        f"{SOLUTION_HEADING}\n\n{_SOLUTION_BODY}\n\n{SELF_EVAL_HEADING}",
        False,
        "",
        None,
    ),
    (
        "tail-boxed-before-anchor-only",
        synth_generator(
            _SOLUTION_BODY,
            f"{VERIFIER_EVAL_ANCHOR}\n\n\\boxed{{1}}\n\n{VERIFIER_SCORE_ANCHOR} later.",
        ),
        False,
        "",
        None,
    ),
]


# ---------------------------------------------------------------------------
# Analytic labeling oracle (independent closed forms over math.comb)
# ---------------------------------------------------------------------------


def binomial_pmf(n: int, p: "Fraction", j: int) -> "Fraction":
    return comb(n, j) * p**j * (1 - p) ** (n - j)


def binomial_tail_ge(n: int, p: "Fraction", k: int) -> "Fraction":
    return sum(binomial_pmf(n, p, j) for j in range(k, n + 1))


def majority_confirm_prob(m: int, confirm_p: "Fraction") -> "Fraction":
    """P(strict majority of m Bernoulli(confirm_p) assessments confirm)."""
    return sum(binomial_pmf(m, confirm_p, c) for c in range(m + 1) if 2 * c > m)


def analytic_distribution(n, m, k, issue_p, confirm_p, issue_score):
    """Decision distribution when each analysis independently reports the
    proof's one latent issue with probability issue_p and each report is
    confirmed per-assessment with probability confirm_p."""
    from proofpipe.autolabel import Decision

    r = issue_p * majority_confirm_prob(m, confirm_p)
    labeled_one = (1 - r) ** n
    labeled_issue = binomial_tail_ge(n, r, k)
    out = {
        (Decision.LABELED, Score.ONE): labeled_one,
        (Decision.LABELED, issue_score): labeled_issue,
        (Decision.ROUTED_TO_HUMAN, None): 1 - labeled_one - labeled_issue,
    }
    return {key: prob for key, prob in out.items() if prob != 0}


def enumerate_distribution(n, m, k, issue_p, confirm_p, issue_score):
    """Walk every detect/confirm combination through the real decision rule,
    weighting each by its exact Fraction probability."""
    from proofpipe.autolabel import AutoLabelConfig, UndecidedPolicy, decide_label

    cfg = AutoLabelConfig(n=n, m=m, k=k, undecided_policy=UndecidedPolicy.ROUTE_TO_HUMAN)
    dist = {}
    for detects in itertools.product([False, True], repeat=n):
        p_detect = Fraction(1)
        for d in detects:
            p_detect *= issue_p if d else 1 - issue_p
        if p_detect == 0:
            continue
        detected = [i for i, d in enumerate(detects) if d]
        scores = [issue_score if d else Score.ONE for d in detects]
        for confirms in itertools.product(range(m + 1), repeat=len(detected)):
            p_confirm = Fraction(1)
            for c in confirms:
                p_confirm *= binomial_pmf(m, confirm_p, c)
            if p_confirm == 0:
                continue
            valid = [i for i, c in zip(detected, confirms) if 2 * c > m]
            outcome = decide_label(scores, valid, cfg)
            dist[outcome] = dist.get(outcome, Fraction(0)) + p_detect * p_confirm
    return dist


# ---------------------------------------------------------------------------
# Randomized record generators (valid by construction)
# ---------------------------------------------------------------------------

TEXT_ALPHABET = (
    string.ascii_letters + string.digits + " \n\t\"'\\{}$€∀∃≥" + "\\boxed{1}"
)
RUBRIC_SCORES = [Score.ZERO, Score.HALF, Score.ONE]


def rand_text(rng: random.Random, max_len: int = 40) -> str:
    return "".join(rng.choice(TEXT_ALPHABET) for _ in range(rng.randrange(max_len)))


def rand_id(rng: random.Random) -> str:
    return "id-" + "".join(rng.choice(string.ascii_lowercase) for _ in range(8))


def rand_problem(rng: random.Random) -> Problem:
    return Problem(
        id=rand_id(rng),
        statement="Prove: " + rand_text(rng),
        category=rng.choice(list(Category)),
        source=rand_text(rng, 10),
    )


def rand_lineage(rng: random.Random) -> Lineage:
    if rng.random() < 0.5:
        return Lineage.one_shot()
    return Lineage(
        kind=LineageKind.REFINED,
        parent_proof_id=rand_id(rng),
        analysis_ids=tuple(rand_id(rng) for _ in range(rng.randrange(3))),
    )


def rand_proof(rng: random.Random) -> Proof:
    scored = rng.random() < 0.7
    return Proof(
        id=rand_id(rng),
        problem_id=rand_id(rng),
        solution_text=rand_text(rng, 120),
        self_analysis_text=rand_text(rng) if scored else None,
        self_score=rng.choice(RUBRIC_SCORES) if scored else None,
        lineage=rand_lineage(rng),
        sampling_seed=rng.choice([None, rng.randrange(2**63)]),
        created_at=rng.randrange(1000),
    )


def rand_analysis(rng: random.Random) -> ProofAnalysis:
    ok = rng.random() < 0.7
    return ProofAnalysis(
        id=rand_id(rng),
        proof_id=rand_id(rng),
        analysis_text=rand_text(rng, 120),
        extracted_score=rng.choice(RUBRIC_SCORES) if ok else None,
        format_ok=ok,
        role=rng.choice(list(AnalysisRole)),
        created_at=rng.randrange(1000),
    )


def rand_assessment(rng: random.Random) -> MetaAssessment:
    ok = rng.random() < 0.7
    return MetaAssessment(
        id=rand_id(rng),
        analysis_id=rand_id(rng),
        meta_text=rand_text(rng, 120),
        quality_score=rng.choice(RUBRIC_SCORES) if ok else None,
        format_ok=ok,
    )


def rand_label(rng: random.Random) -> ProofLabel:
    source = rng.choice(list(LabelSource))
    return ProofLabel(
        proof_id=rand_id(rng),
        score=rng.choice(RUBRIC_SCORES),
        source=source,
        evidence_analysis_ids=tuple(rand_id(rng) for _ in range(rng.randrange(1, 4))),
        annotator_id=rand_id(rng) if source is LabelSource.HUMAN else None,
    )


def rand_meta_example(rng: random.Random) -> MetaExample:
    return MetaExample(
        problem_id=rand_id(rng),
        proof_id=rand_id(rng),
        analysis_id=rand_id(rng),
        quality_score=rng.choice(RUBRIC_SCORES),
        source=rng.choice(list(LabelSource)),
    )


def rand_task(rng: random.Random) -> "AnnotationTask":
    from proofpipe.service.models import AnnotationTask, TaskKind, TaskStatus

    submitted = rng.random() < 0.5
    return AnnotationTask(
        task_id=rand_id(rng),
        kind=rng.choice(list(TaskKind)),
        problem_id=rand_id(rng),
        proof_id=rand_id(rng),
        analysis_ids=tuple(rand_id(rng) for _ in range(rng.randrange(3))),
        status=TaskStatus.SUBMITTED if submitted else TaskStatus.PENDING,
        submitted_label=rng.choice(RUBRIC_SCORES) if submitted else None,
        annotator_id=rand_id(rng) if submitted else None,
        created_at=rng.randrange(1000),
    )


def rand_event(rng: random.Random) -> "AnnotationEvent":
    from proofpipe.service.models import AnnotationEvent

    return AnnotationEvent(
        seq=rng.randrange(1, 10_000),
        task_id=rand_id(rng),
        score=rng.choice(RUBRIC_SCORES),
        annotator_id=rand_id(rng),
    )


def rand_manifest(rng: random.Random) -> "RunManifest":
    from proofpipe.service.models import RunKind, RunManifest, RunStatus

    status = rng.choice(list(RunStatus))
    outputs = {
        f"{rand_id(rng)}.jsonl": "%064x" % rng.randrange(2**256)
        for _ in range(rng.randrange(1, 4))
    }
    return RunManifest(
        run_id=rand_id(rng),
        kind=rng.choice(list(RunKind)),
        config={"n": rng.randrange(1, 9), "note": rand_text(rng, 20)},
        seed=rng.randrange(2**31),
        status=status,
        outputs=outputs if status is not RunStatus.RUNNING else {},
    )


def record_makers():
    """(record class, generator) pairs covering every persisted type."""
    from proofpipe.service.models import AnnotationEvent, AnnotationTask, RunManifest

    return [
        (Problem, rand_problem),
        (Proof, rand_proof),
        (ProofAnalysis, rand_analysis),
        (MetaAssessment, rand_assessment),
        (ProofLabel, rand_label),
        (MetaExample, rand_meta_example),
        (AnnotationTask, rand_task),
        (AnnotationEvent, rand_event),
        (RunManifest, rand_manifest),
    ]
