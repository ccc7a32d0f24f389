"""Response parsing and reward computation.

Parsers are total functions: no input text raises, malformed responses come
back with ``format_ok=False``. Anchor matching is exact substring match on
the canonical phrases from the prompt templates; the format reward is an
indicator, so there is no fuzzy matching.

All reward arithmetic is exact rational arithmetic (`fractions.Fraction`).
Scores are multiples of 1/2 and the generator mixing weights are short
decimals, so every reward value in the system has an exact representation;
tests can assert equality instead of tolerances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from proofpipe.core import (
    ProofPipeError,
    Score,
    exact,
    score_distance,
    try_score_from_text,
)

# Canonical anchor phrases; these byte-match the stored templates.
VERIFIER_EVAL_ANCHOR = "Here is my evaluation of the solution:"
VERIFIER_SCORE_ANCHOR = "Based on my evaluation, the final overall score should be:"
META_EVAL_ANCHOR = 'Here is my analysis of the "solution evaluation":'
META_SCORE_ANCHOR = 'Based on my analysis, I will rate the "solution evaluation" as:'
SOLUTION_HEADING = "## Solution"
SELF_EVAL_HEADING = "## Self Evaluation"

_BOXED_RE = re.compile(r"\\boxed\{([^{}]*)\}")


class MissingSelfAssessment(ProofPipeError):
    """Generator reward asked for with format_ok but no self-assessment parts."""


def _last_valid_boxed_score(text: str) -> Optional[Score]:
    """Last \\boxed{...} token in ``text`` whose content is a rubric score."""
    score = None
    for match in _BOXED_RE.finditer(text):
        candidate = try_score_from_text(match.group(1))
        if candidate is not None:
            score = candidate
    return score


def _parse_scored_response(
    text: str, eval_anchor: str, score_anchor: str
) -> tuple[bool, Optional[Score]]:
    if eval_anchor not in text:
        return False, None
    anchor_at = text.find(score_anchor)
    if anchor_at < 0:
        return False, None
    score = _last_valid_boxed_score(text[anchor_at + len(score_anchor) :])
    if score is None:
        return False, None
    return True, score


@dataclass(frozen=True)
class ParsedVerifierResponse:
    format_ok: bool
    score: Optional[Score] = None


@dataclass(frozen=True)
class ParsedMetaResponse:
    format_ok: bool
    quality_score: Optional[Score] = None


@dataclass(frozen=True)
class ParsedGeneratorResponse:
    format_ok: bool
    solution_text: str = ""
    self_analysis_text: Optional[str] = None
    self_score: Optional[Score] = None


def parse_verifier_response(text: str) -> ParsedVerifierResponse:
    """Extract the rubric score from a verification analysis.

    format_ok requires the evaluation anchor phrase and, after the score
    anchor, at least one boxed token canonicalizing to a score; the last
    such token wins when the model restates.
    """
    ok, score = _parse_scored_response(text, VERIFIER_EVAL_ANCHOR, VERIFIER_SCORE_ANCHOR)
    return ParsedVerifierResponse(ok, score)


def parse_meta_response(text: str) -> ParsedMetaResponse:
    """Extract the quality rating from a meta-verification assessment."""
    ok, score = _parse_scored_response(text, META_EVAL_ANCHOR, META_SCORE_ANCHOR)
    return ParsedMetaResponse(ok, score)


def _find_heading(text: str, heading: str, start: int = 0) -> int:
    """Index of ``heading`` at a line start, or -1."""
    pos = text.find(heading, start)
    while pos > 0 and text[pos - 1] != "\n":
        pos = text.find(heading, pos + 1)
    return pos


def parse_generator_response(text: str) -> ParsedGeneratorResponse:
    """Split a generator response into solution and self-analysis.

    format_ok requires a "## Solution" heading followed by a
    "## Self Evaluation" heading whose tail carries a verifier-format
    self-analysis (anchor phrases plus a valid boxed score). Spans are
    whitespace-stripped so a synthesized response round-trips exactly.
    """
    sol_at = _find_heading(text, SOLUTION_HEADING)
    if sol_at < 0:
        return ParsedGeneratorResponse(False)
    eval_at = _find_heading(text, SELF_EVAL_HEADING, sol_at + len(SOLUTION_HEADING))
    if eval_at < 0:
        return ParsedGeneratorResponse(False)
    tail = text[eval_at + len(SELF_EVAL_HEADING) :]
    ok, score = _parse_scored_response(tail, VERIFIER_EVAL_ANCHOR, VERIFIER_SCORE_ANCHOR)
    if not ok:
        return ParsedGeneratorResponse(False)
    solution = text[sol_at + len(SOLUTION_HEADING) : eval_at].strip()
    return ParsedGeneratorResponse(True, solution, tail.strip(), score)


# ---------------------------------------------------------------------------
# Rewards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewardBreakdown:
    """Factorized reward. A format failure zeroes everything.

    For verifier rewards, r_score is the proximity of predicted to annotated
    score and r_meta the analysis quality; r_y/r_z stay None. For generator
    rewards, r_y is the verifier-assigned proof score, r_score the
    self-assessment accuracy, r_meta the self-analysis quality, and r_z
    their product.
    """

    r_format: int
    r_score: Fraction
    r_meta: Optional[Fraction] = None
    r_y: Optional[Fraction] = None
    r_z: Optional[Fraction] = None
    total: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.r_format not in (0, 1):
            raise ValueError("r_format is an indicator")
        if not 0 <= self.total <= 1:
            raise ValueError(f"total {self.total} outside [0, 1]")
        if self.r_format == 0 and self.total != 0:
            raise ValueError("format failure must zero the total")


@dataclass(frozen=True)
class GeneratorRewardConfig:
    """Mixing weights for proof quality vs. self-assessment quality."""

    alpha: Fraction = Fraction(19, 25)  # 0.76
    beta: Fraction = Fraction(6, 25)  # 0.24

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", exact(self.alpha))
        object.__setattr__(self, "beta", exact(self.beta))
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.alpha + self.beta != 1:
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")


def r_score(predicted: Score, annotated: Score) -> Fraction:
    """Proximity reward: 1 - |predicted - annotated|."""
    return 1 - score_distance(predicted, annotated)


def verifier_reward(
    parsed: ParsedVerifierResponse,
    annotated: Score,
    meta_quality: Optional[Score] = None,
) -> RewardBreakdown:
    """Reward for one verification analysis.

    Without ``meta_quality`` this is the format-times-proximity reward; with
    it, the analysis-quality factor multiplies in as well.
    """
    meta = meta_quality.fraction if meta_quality is not None else None
    if not parsed.format_ok or parsed.score is None:
        return RewardBreakdown(r_format=0, r_score=Fraction(0), r_meta=meta)
    proximity = r_score(parsed.score, annotated)
    total = proximity if meta is None else proximity * meta
    return RewardBreakdown(r_format=1, r_score=proximity, r_meta=meta, total=total)


def generator_reward(
    format_ok: bool,
    r_y: Score,
    self_score: Optional[Score],
    r_meta_z: Optional[Score],
    cfg: Union[GeneratorRewardConfig, None] = None,
) -> RewardBreakdown:
    """Reward for a proof plus self-analysis.

    ``r_y`` is the verifier-assigned proof score; the self-analysis earns
    its accuracy against that same score times its meta-assessed quality.
    """
    cfg = cfg or GeneratorRewardConfig()
    if not format_ok:
        return RewardBreakdown(r_format=0, r_score=Fraction(0))
    if self_score is None or r_meta_z is None:
        raise MissingSelfAssessment(
            "format_ok generator output must carry a self score and its meta quality"
        )
    accuracy = r_score(self_score, r_y)
    r_z = accuracy * r_meta_z.fraction
    total = cfg.alpha * r_y.fraction + cfg.beta * r_z
    return RewardBreakdown(
        r_format=1,
        r_score=accuracy,
        r_meta=r_meta_z.fraction,
        r_y=r_y.fraction,
        r_z=r_z,
        total=total,
    )
