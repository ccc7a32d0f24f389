"""Prompt template rendering.

The four templates (proof generation, proof verification, meta-verification,
proof refinement) live as UTF-8 resource files with ``{placeholder}``
markers. Their content hashes are pinned: byte-exactness of the rendered
text is part of the parsing contract downstream, so a drifted template is a
hard startup error, not a warning.

Substitution is a single pass over pre-split segments; substituted values
are never re-scanned, so a proof containing a literal ``{question}`` cannot
corrupt rendering. Rendering is pure: identical inputs yield byte-identical
outputs.
"""

from __future__ import annotations

import enum
import hashlib
import re
from importlib import resources
from typing import Iterable, Mapping

from proofpipe.core import Problem, Proof, ProofAnalysis, ProofPipeError


class TemplateIntegrityError(ProofPipeError):
    """A template resource no longer matches its pinned content hash."""


class ReferenceMismatch(ProofPipeError):
    """A record passed to a renderer does not reference its companion."""


class ProblemProofMismatch(ReferenceMismatch):
    """The proof does not belong to the given problem."""


class EmptyAnalyses(ProofPipeError):
    """Refinement rendering needs at least one analysis."""


class TemplateKind(enum.Enum):
    GENERATION = "generation"
    VERIFICATION = "verification"
    META_VERIFICATION = "meta_verification"
    REFINEMENT = "refinement"


_PLACEHOLDERS: dict[TemplateKind, frozenset[str]] = {
    TemplateKind.GENERATION: frozenset({"question"}),
    TemplateKind.VERIFICATION: frozenset({"question", "proof"}),
    TemplateKind.META_VERIFICATION: frozenset({"question", "proof", "proof analysis"}),
    TemplateKind.REFINEMENT: frozenset(
        {"proof_generation_prompt", "question", "proof", "proof analyses"}
    ),
}

_PINNED_SHA256: dict[TemplateKind, str] = {
    TemplateKind.GENERATION: "e16e10b63aef0f1d0d2afbc2f645f63cf38f9b61e8f4332ddc8ba3b0367306bc",
    TemplateKind.VERIFICATION: "2481e5e322759d45851098a58d5d81697ac43fb97d5fb84e273032658c29c515",
    TemplateKind.META_VERIFICATION: "6b9e4d64b53476b6f5dc8538af5a3ea57c59359ff7abe626720e7b31bf9acfbb",
    TemplateKind.REFINEMENT: "8631625dc01621f11bcaf5e8ee94a8863b22a89f815ceb4f220d2bf3bfea2e19",
}

# The generation template's task-input trailer; everything before it is the
# instruction body that the refinement template embeds.
_TASK_INPUT_TRAILER = "\n\n---\n\nHere is your task input:\n\n## Problem\n{question}"

_PLACEHOLDER_RE = re.compile(
    r"\{(proof_generation_prompt|proof analyses|proof analysis|question|proof)\}"
)


class PromptTemplate:
    """One template, pre-split at its placeholder sites."""

    def __init__(self, kind: TemplateKind, body: str):
        self.kind = kind
        self.body = body
        # segments: literal text; slots[i] sits between segments[i] and segments[i+1]
        self.segments: list[str] = []
        self.slots: list[str] = []
        pos = 0
        for match in _PLACEHOLDER_RE.finditer(body):
            self.segments.append(body[pos : match.start()])
            self.slots.append(match.group(1))
            pos = match.end()
        self.segments.append(body[pos:])

        expected = _PLACEHOLDERS[kind]
        if set(self.slots) != expected or len(self.slots) != len(expected):
            raise TemplateIntegrityError(
                f"{kind.value} template must contain each of {sorted(expected)} exactly once; "
                f"found {self.slots}"
            )

    def render(self, values: Mapping[str, str]) -> str:
        parts = [self.segments[0]]
        for slot, segment in zip(self.slots, self.segments[1:]):
            parts.append(values[slot])
            parts.append(segment)
        return "".join(parts)


def _load(kind: TemplateKind) -> PromptTemplate:
    data = (
        resources.files("proofpipe.prompts")
        .joinpath(f"templates/{kind.value}.txt")
        .read_bytes()
    )
    digest = hashlib.sha256(data).hexdigest()
    if digest != _PINNED_SHA256[kind]:
        raise TemplateIntegrityError(
            f"{kind.value} template hash {digest} does not match pinned "
            f"{_PINNED_SHA256[kind]}; refusing to render from a modified template"
        )
    return PromptTemplate(kind, data.decode("utf-8"))


_TEMPLATES: dict[TemplateKind, PromptTemplate] = {}


def template(kind: TemplateKind) -> PromptTemplate:
    if kind not in _TEMPLATES:
        _TEMPLATES[kind] = _load(kind)
    return _TEMPLATES[kind]


def generation_instruction_body() -> str:
    """The generation template minus its task-input trailer.

    This is what the refinement template embeds, so the problem statement
    appears exactly once in a rendered refinement prompt.
    """
    body = template(TemplateKind.GENERATION).body
    if not body.endswith(_TASK_INPUT_TRAILER):
        raise TemplateIntegrityError(
            "generation template does not end with the expected task-input trailer"
        )
    return body[: -len(_TASK_INPUT_TRAILER)]


def render_generation(problem: Problem) -> str:
    if not problem.statement.strip():
        raise ValueError("problem statement must be non-empty")
    return template(TemplateKind.GENERATION).render({"question": problem.statement})


def render_verification(problem: Problem, proof: Proof) -> str:
    if proof.problem_id != problem.id:
        raise ProblemProofMismatch(
            f"proof {proof.id} belongs to problem {proof.problem_id}, not {problem.id}"
        )
    return template(TemplateKind.VERIFICATION).render(
        {"question": problem.statement, "proof": proof.solution_text}
    )


def render_meta(problem: Problem, proof: Proof, analysis: ProofAnalysis) -> str:
    if proof.problem_id != problem.id:
        raise ProblemProofMismatch(
            f"proof {proof.id} belongs to problem {proof.problem_id}, not {problem.id}"
        )
    if analysis.proof_id != proof.id:
        raise ReferenceMismatch(
            f"analysis {analysis.id} refers to proof {analysis.proof_id}, not {proof.id}"
        )
    return template(TemplateKind.META_VERIFICATION).render(
        {
            "question": problem.statement,
            "proof": proof.solution_text,
            "proof analysis": analysis.analysis_text,
        }
    )


def render_refinement(
    problem: Problem, proof: Proof, analyses: Iterable[ProofAnalysis]
) -> str:
    analyses = list(analyses)
    if not analyses:
        raise EmptyAnalyses(f"refinement of proof {proof.id} needs at least one analysis")
    if proof.problem_id != problem.id:
        raise ProblemProofMismatch(
            f"proof {proof.id} belongs to problem {proof.problem_id}, not {problem.id}"
        )
    for analysis in analyses:
        if analysis.proof_id != proof.id:
            raise ReferenceMismatch(
                f"analysis {analysis.id} refers to proof {analysis.proof_id}, not {proof.id}"
            )
    joined = "\n\n".join(
        a.analysis_text for a in sorted(analyses, key=lambda a: (a.created_at, a.id))
    )
    return template(TemplateKind.REFINEMENT).render(
        {
            "proof_generation_prompt": generation_instruction_body(),
            "question": problem.statement,
            "proof": proof.solution_text,
            "proof analyses": joined,
        }
    )
