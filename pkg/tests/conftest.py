"""Shared fixtures for the proofpipe test suite."""

from __future__ import annotations

import random

import pytest

from proofpipe.backends import (
    Backend,
    CompletionResult,
    Role,
    SamplingParams,
    StochasticMockBackend,
    StochasticProfile,
)
from proofpipe.core import Problem, Proof

from support import make_clean_proof, make_flawed_proof, make_problem


@pytest.fixture
def problem() -> Problem:
    return make_problem(0)


@pytest.fixture
def flawed_proof(problem: Problem) -> Proof:
    return make_flawed_proof(problem, 0)


@pytest.fixture
def clean_proof(problem: Problem) -> Proof:
    return make_clean_proof(problem, 0)


@pytest.fixture
def mock_backend() -> StochasticMockBackend:
    return StochasticMockBackend()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)


class CountingBackend(Backend):
    """Delegates to another backend while counting completions."""

    concurrency_safe = False

    def __init__(self, inner: Backend) -> None:
        self.inner = inner
        self.calls = 0

    def complete(self, role: Role, prompt: str, params: SamplingParams) -> CompletionResult:
        self.calls += 1
        return self.inner.complete(role, prompt, params)


@pytest.fixture
def counting_mock() -> CountingBackend:
    return CountingBackend(StochasticMockBackend())


def deterministic_profile(**overrides: object) -> StochasticProfile:
    """A profile with no randomness left: quality pinned, rolls at 0 or 1."""
    base = dict(
        q_star=0.0,
        detection_prob=1.0,
        hallucination_prob=0.0,
        meta_accuracy=1.0,
        refine_improve_prob=1.0,
    )
    base.update(overrides)
    return StochasticProfile(**base)  # type: ignore[arg-type]
