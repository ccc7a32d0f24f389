"""proofpipe: test-time-compute orchestration for natural-language theorem proving.

Model-agnostic pipelines over three model roles — proof generator,
verifier, and meta-verifier — covering rubric-based reward computation,
automated proof labeling with meta-validated evidence, one-shot
evaluation, sequential self-refinement, and high-compute pool search,
plus JSONL persistence, a human-annotation HTTP service, and a CLI.
"""

from proofpipe.core import (
    Category,
    IdFactory,
    InvalidScoreValue,
    Lineage,
    MetaAssessment,
    MetaExample,
    Problem,
    Proof,
    ProofAnalysis,
    ProofLabel,
    ProofPipeError,
    Score,
    derive_seed,
    exact,
    format_score,
    score_from_numeric,
    score_from_text,
)

__version__ = "0.1.0"

__all__ = [
    "Category",
    "IdFactory",
    "InvalidScoreValue",
    "Lineage",
    "MetaAssessment",
    "MetaExample",
    "Problem",
    "Proof",
    "ProofAnalysis",
    "ProofLabel",
    "ProofPipeError",
    "Score",
    "derive_seed",
    "exact",
    "format_score",
    "score_from_numeric",
    "score_from_text",
    "__version__",
]
