"""Domain types shared by every pipeline stage.

Everything here is an immutable value object: once constructed, records are
safe to share across threads and to hand to concurrent tasks. Rubric scores
are a closed three-level enum so that out-of-domain values are
unrepresentable; all numeric conversion happens at the boundary
(`score_from_numeric` / `score_from_text`).

Serialization for these records lives in `proofpipe.service.store`.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


class ProofPipeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidScoreValue(ProofPipeError):
    """A numeric or textual value outside the {0, 0.5, 1} rubric domain."""


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------


@functools.total_ordering
class Score(enum.Enum):
    """Three-level rubric grade: 1 complete, 0.5 minor issues, 0 fatal."""

    ZERO = Fraction(0)
    HALF = Fraction(1, 2)
    ONE = Fraction(1)

    @property
    def fraction(self) -> Fraction:
        return self.value

    @property
    def numeric(self) -> float:
        # 0.0, 0.5, 1.0 are all exact binary floats
        return float(self.value)

    def __lt__(self, other: object) -> bool:
        if isinstance(other, Score):
            return self.value < other.value
        if isinstance(other, (int, float, Fraction)):
            return self.value < other
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Score):
            return self is other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.value)

    def __repr__(self) -> str:
        return f"Score({format_score(self)})"


_NUMERIC_SCORES = {
    Fraction(0): Score.ZERO,
    Fraction(1, 2): Score.HALF,
    Fraction(1): Score.ONE,
}

# The only decimal spellings the prompts allow ("0, 0.5, or 1, and nothing else").
_TEXT_SCORES = {
    "0": Score.ZERO,
    "0.0": Score.ZERO,
    ".5": Score.HALF,
    "0.5": Score.HALF,
    "1": Score.ONE,
    "1.0": Score.ONE,
}


def score_from_numeric(x: Union[int, float, Fraction]) -> Score:
    """Return the Score whose value equals ``x`` exactly.

    Raises InvalidScoreValue for anything outside {0, 0.5, 1}.
    """
    try:
        key = Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InvalidScoreValue(f"not a number: {x!r}") from exc
    score = _NUMERIC_SCORES.get(key)
    if score is None:
        raise InvalidScoreValue(f"score value {x!r} is not one of 0, 0.5, 1")
    return score


def score_from_text(text: str) -> Score:
    """Canonicalize a decimal spelling (0, 0.0, .5, 0.5, 1, 1.0) into a Score."""
    score = _TEXT_SCORES.get(text.strip())
    if score is None:
        raise InvalidScoreValue(f"score spelling {text!r} is not one of 0, 0.5, 1")
    return score


def try_score_from_text(text: str) -> Optional[Score]:
    return _TEXT_SCORES.get(text.strip())


def score_distance(a: Score, b: Score) -> Fraction:
    """|a - b| over the rubric domain; exact rational arithmetic."""
    return abs(a.value - b.value)


def format_score(score: Score) -> str:
    """Canonical spelling used in rendered text and serialized records."""
    return {Score.ZERO: "0", Score.HALF: "0.5", Score.ONE: "1"}[score]


def exact(x: Union[int, float, str, Fraction]) -> Fraction:
    """Convert a config-level number to an exact rational.

    Floats go through their shortest decimal repr so 0.76 means 76/100,
    not the nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


class Category(enum.Enum):
    ALGEBRA = "algebra"
    GEOMETRY = "geometry"
    NUMBER_THEORY = "number_theory"
    COMBINATORICS = "combinatorics"
    INEQUALITY = "inequality"
    OTHER = "other"


class AnalysisRole(enum.Enum):
    EXTERNAL_VERIFIER = "external_verifier"
    SELF = "self"


class LabelSource(enum.Enum):
    HUMAN = "human"
    AUTO = "auto"


class LineageKind(enum.Enum):
    ONE_SHOT = "one_shot"
    REFINED = "refined"


@dataclass(frozen=True)
class Lineage:
    kind: LineageKind
    parent_proof_id: Optional[str] = None
    analysis_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is LineageKind.REFINED:
            if not self.parent_proof_id:
                raise ValueError("refined lineage requires a parent proof id")
        elif self.parent_proof_id is not None or self.analysis_ids:
            raise ValueError("one_shot lineage carries no parent or analyses")

    @classmethod
    def one_shot(cls) -> "Lineage":
        return cls(LineageKind.ONE_SHOT)

    @classmethod
    def refined(cls, parent_proof_id: str, analysis_ids: tuple[str, ...] = ()) -> "Lineage":
        return cls(LineageKind.REFINED, parent_proof_id, tuple(analysis_ids))


@dataclass(frozen=True)
class Problem:
    """A theorem-proving task statement."""

    id: str
    statement: str
    category: Category = Category.OTHER
    source: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.statement.strip():
            raise ValueError(f"problem {self.id!r} has an empty statement")


@dataclass(frozen=True)
class Proof:
    """A candidate solution, optionally carrying its own self-analysis."""

    id: str
    problem_id: str
    solution_text: str
    self_analysis_text: Optional[str] = None
    self_score: Optional[Score] = None
    lineage: Lineage = field(default_factory=Lineage.one_shot)
    sampling_seed: int = 0
    created_at: int = 0

    def __post_init__(self) -> None:
        if not self.id or not self.problem_id:
            raise ValueError("proof id and problem_id must be non-empty")
        if self.self_score is not None and self.self_analysis_text is None:
            raise ValueError(
                f"proof {self.id!r} has a self score without a self analysis"
            )


@dataclass(frozen=True)
class ProofAnalysis:
    """A verifier's issue summary plus the score extracted from it."""

    id: str
    proof_id: str
    analysis_text: str
    extracted_score: Optional[Score] = None
    format_ok: bool = False
    role: AnalysisRole = AnalysisRole.EXTERNAL_VERIFIER
    created_at: int = 0

    def __post_init__(self) -> None:
        if self.format_ok != (self.extracted_score is not None):
            raise ValueError(
                f"analysis {self.id!r}: extracted_score must be present iff format_ok"
            )

    def reports_issues(self) -> bool:
        return self.extracted_score in (Score.ZERO, Score.HALF)


@dataclass(frozen=True)
class MetaAssessment:
    """A judgment of whether a proof analysis's findings are sound."""

    id: str
    analysis_id: str
    meta_text: str
    quality_score: Optional[Score] = None
    format_ok: bool = False

    def __post_init__(self) -> None:
        if self.format_ok != (self.quality_score is not None):
            raise ValueError(
                f"meta assessment {self.id!r}: quality_score must be present iff format_ok"
            )


@dataclass(frozen=True)
class ProofLabel:
    """A correctness score attached to a proof, with provenance."""

    proof_id: str
    score: Score
    source: LabelSource
    evidence_analysis_ids: tuple[str, ...] = ()
    annotator_id: Optional[str] = None

    def __post_init__(self) -> None:
        if (
            self.source is LabelSource.AUTO
            and self.score < Score.ONE
            and not self.evidence_analysis_ids
        ):
            raise ValueError(
                f"auto label for {self.proof_id!r} with score < 1 needs evidence analyses"
            )


@dataclass(frozen=True)
class MetaExample:
    """One meta-verification training record: an analysis and its quality."""

    problem_id: str
    proof_id: str
    analysis_id: str
    quality_score: Score
    source: LabelSource


# ---------------------------------------------------------------------------
# Identifier and sequence allocation
# ---------------------------------------------------------------------------


class IdFactory:
    """Per-run id and sequence allocator.

    created_at values are monotonic sequence numbers, never wall-clock time,
    so tie-breaking is deterministic across reruns. Thread-safe.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: dict[str, itertools.count] = {}
        self._seq = itertools.count(1)

    def next_id(self, kind: str) -> str:
        with self._lock:
            counter = self._counters.setdefault(kind, itertools.count(1))
            return f"{kind}-{next(counter):06d}"

    def next_seq(self) -> int:
        with self._lock:
            return next(self._seq)


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed derived from arbitrary parts.

    Unlike hash(), this does not depend on PYTHONHASHSEED, so derived
    seeds are identical across processes and runs.
    """
    digest = hashlib.sha256("\x1f".join(repr(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
