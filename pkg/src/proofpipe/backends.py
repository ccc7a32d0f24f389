"""Completion backends.

One interface covers the real HTTP model service and the two test doubles
(scripted and stochastic). Pipelines only ever see ``complete`` and
``batch_complete``; which backend sits behind them is configuration.

Both mock backends are pure functions of (role, prompt, seed): they hold no
queues or call counters, so replaying a pipeline with the same seed replays
the exact same responses regardless of call order or threading.
"""

from __future__ import annotations

import abc
import enum
import logging
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Union

from proofpipe.core import ProofPipeError, Score, derive_seed, format_score, score_from_numeric
from proofpipe.rewards import (
    META_EVAL_ANCHOR,
    META_SCORE_ANCHOR,
    VERIFIER_EVAL_ANCHOR,
    VERIFIER_SCORE_ANCHOR,
)

logger = logging.getLogger(__name__)


class Role(enum.Enum):
    GENERATOR = "generator"
    VERIFIER = "verifier"
    META_VERIFIER = "meta_verifier"


class BackendError(ProofPipeError):
    """Base class for completion failures surfaced per request."""


class BackendUnavailable(BackendError):
    """The backend could not produce a completion (retries exhausted)."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 1.0
    max_tokens: int = 8192
    seed: int = 0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def with_seed(self, seed: int) -> "SamplingParams":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finished: bool = True  # False means the completion was truncated.
    request_index: int = 0
    usage: TokenUsage = field(default_factory=TokenUsage)


BatchItem = Union[CompletionResult, BackendError]


class Backend(abc.ABC):
    """Completion interface shared by the HTTP client and the test doubles."""

    #: Whether complete() may be called from multiple threads at once.
    concurrency_safe = False

    @abc.abstractmethod
    def complete(self, role: Role, prompt: str, params: SamplingParams) -> CompletionResult:
        """Produce one completion; raises BackendError subclasses on failure."""

    def batch_complete(
        self,
        role: Role,
        prompts: list[str],
        params: SamplingParams,
        max_in_flight: int = 8,
    ) -> list[BatchItem]:
        """Complete a batch, seeds params.seed + i, results in submission order.

        Per-item failures come back as error entries in the result list; a
        batch never aborts on the first failure.
        """
        if not prompts:
            raise ValueError("batch_complete requires at least one prompt")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

        def one(index_prompt: tuple[int, str]) -> BatchItem:
            index, prompt = index_prompt
            try:
                result = self.complete(role, prompt, params.with_seed(params.seed + index))
            except BackendError as exc:
                return exc
            return replace(result, request_index=index)

        jobs = list(enumerate(prompts))
        if self.concurrency_safe and max_in_flight > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=min(max_in_flight, len(jobs))) as pool:
                return list(pool.map(one, jobs))
        return [one(job) for job in jobs]


def _approx_usage(prompt: str, text: str) -> TokenUsage:
    # Rough 4-chars-per-token accounting for the mock backends.
    return TokenUsage(prompt_tokens=len(prompt) // 4, completion_tokens=len(text) // 4)


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class HttpBackendConfig:
    base_url: str
    model: str
    role_models: dict[str, str] = field(default_factory=dict)
    api_token: Optional[str] = None
    timeout: float = 120.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 30.0

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url must be non-empty")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def model_for(self, role: Role) -> str:
        return self.role_models.get(role.value, self.model)


class HttpBackend(Backend):
    """Chat-completions client with bounded retries.

    Retries cover transport failures and retryable HTTP statuses (429/5xx)
    with exponential backoff plus jitter; a well-formed response is never
    re-requested, however unhelpful its content.
    """

    concurrency_safe = True

    def __init__(self, config: HttpBackendConfig, transport=None) -> None:
        import httpx  # deferred so mock-only usage needs no HTTP stack

        self._httpx = httpx
        self.config = config
        headers = {}
        if config.api_token:
            headers["Authorization"] = f"Bearer {config.api_token}"
        self._client = httpx.Client(
            base_url=config.base_url,
            headers=headers,
            timeout=config.timeout,
            transport=transport,
        )
        self._jitter = random.Random()

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpBackend":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _sleep_before_retry(self, attempt: int) -> None:
        backoff = min(self.config.backoff_cap, self.config.backoff_base * (2 ** (attempt - 1)))
        time.sleep(backoff * (0.5 + self._jitter.random()))

    def complete(self, role: Role, prompt: str, params: SamplingParams) -> CompletionResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {
            "model": self.config.model_for(role),
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "seed": params.seed,
        }
        last_error = "no attempts made"
        for attempt in range(1, self.config.max_attempts + 1):
            try:
                response = self._client.post("/chat/completions", json=payload)
            except self._httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                logger.warning("completion attempt %d failed: %s", attempt, last_error)
            else:
                if response.status_code == 200:
                    return self._parse_response(prompt, response)
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                if response.status_code not in RETRYABLE_STATUS:
                    raise BackendUnavailable(last_error)
                logger.warning("completion attempt %d failed: %s", attempt, last_error)
            if attempt < self.config.max_attempts:
                self._sleep_before_retry(attempt)
        raise BackendUnavailable(
            f"{self.config.max_attempts} attempts exhausted; last error: {last_error}"
        )

    def _parse_response(self, prompt: str, response) -> CompletionResult:
        try:
            body = response.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
            finished = choice.get("finish_reason") != "length"
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}")
        usage = body.get("usage") or {}
        return CompletionResult(
            text=text,
            finished=finished,
            usage=TokenUsage(
                prompt_tokens=int(usage.get("prompt_tokens", len(prompt) // 4)),
                completion_tokens=int(usage.get("completion_tokens", len(text) // 4)),
            ),
        )


# ---------------------------------------------------------------------------
# Scripted backend
# ---------------------------------------------------------------------------


class ScriptedBackend(Backend):
    """Canned responses keyed by (role, prompt) or (role, prompt, seed).

    A seed-specific entry wins over a role+prompt entry. Unmatched requests
    raise BackendUnavailable, which keeps tests honest about exactly which
    prompts a pipeline renders.
    """

    concurrency_safe = True  # lookups are read-only after scripting

    def __init__(self) -> None:
        self._by_seed: dict[tuple[str, str, int], CompletionResult] = {}
        self._by_prompt: dict[tuple[str, str], CompletionResult] = {}

    def script(
        self,
        role: Role,
        prompt: str,
        text: str,
        seed: Optional[int] = None,
        finished: bool = True,
    ) -> None:
        result = CompletionResult(text=text, finished=finished, usage=_approx_usage(prompt, text))
        if seed is None:
            self._by_prompt[(role.value, prompt)] = result
        else:
            self._by_seed[(role.value, prompt, seed)] = result

    def complete(self, role: Role, prompt: str, params: SamplingParams) -> CompletionResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        result = self._by_seed.get((role.value, prompt, params.seed))
        if result is None:
            result = self._by_prompt.get((role.value, prompt))
        if result is None:
            raise BackendUnavailable(
                f"no scripted response for role={role.value} seed={params.seed} "
                f"prompt starting {prompt[:80]!r}"
            )
        return result


# ---------------------------------------------------------------------------
# Stochastic mock backend
# ---------------------------------------------------------------------------

# Markers the stochastic mock plants in proof text so that verifier and
# meta-verifier behavior can be computed statelessly from the prompt alone.
# QLATENT records the proof's latent quality; FLAW tags a citable defect.
_LATENT_RE = re.compile(r"QLATENT:(0\.5|0|1)")
_FLAW_RE = re.compile(r"FLAW:[a-z0-9]+")
_REFINEMENT_MARKER = "## Candidate Solution(s) to Refine"

_QUALITY_LADDER = (Score.ZERO, Score.HALF, Score.ONE)


@dataclass(frozen=True)
class StochasticProfile:
    """Knobs for the stochastic mock's generative behavior.

    q_star pins every fresh proof's latent quality; when None, quality is
    drawn from quality_weights (P(q=0), P(q=0.5), P(q=1)). detection_prob
    is the chance a verifier reports the real flaw in an imperfect proof;
    hallucination_prob the chance it invents a flaw in a perfect one;
    meta_accuracy the chance a meta-assessment matches ground truth;
    refine_improve_prob the chance one refinement step raises quality.
    """

    q_star: Optional[float] = None
    quality_weights: tuple[float, float, float] = (0.2, 0.3, 0.5)
    detection_prob: float = 0.8
    hallucination_prob: float = 0.1
    meta_accuracy: float = 0.9
    refine_improve_prob: float = 0.5

    def __post_init__(self) -> None:
        for name in ("detection_prob", "hallucination_prob", "meta_accuracy", "refine_improve_prob"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.q_star is not None:
            score_from_numeric(self.q_star)  # raises unless in {0, 0.5, 1}
        if len(self.quality_weights) != 3 or min(self.quality_weights) < 0:
            raise ValueError("quality_weights must be three non-negative weights")
        if sum(self.quality_weights) <= 0:
            raise ValueError("quality_weights must have positive mass")


class StochasticMockBackend(Backend):
    """Deterministic simulation of generator, verifier, and meta-verifier.

    Every response is a pure function of (role, prompt, seed): the RNG is
    seeded from a digest of the three, so batch order and threading cannot
    change outcomes. Synthesized responses always parse under the rewards
    module's parsers.

    Proof texts embed QLATENT/FLAW markers carrying ground truth. A
    verifier that "detects" quotes the proof's real FLAW tag; a
    hallucinated issue quotes a tag absent from the proof. The analysis
    text alone does not reveal which is which — only checking the tag
    against the proof does, which is exactly the meta-verification task.
    """

    concurrency_safe = True

    def __init__(self, profile: StochasticProfile = StochasticProfile()) -> None:
        self.profile = profile

    def complete(self, role: Role, prompt: str, params: SamplingParams) -> CompletionResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        rng = random.Random(derive_seed("stochastic-mock", role.value, prompt, params.seed))
        if role is Role.GENERATOR:
            if _REFINEMENT_MARKER in prompt:
                text = self._refine(prompt, rng)
            else:
                text = self._generate(rng)
        elif role is Role.VERIFIER:
            text = self._verify(prompt, rng)
        elif role is Role.META_VERIFIER:
            text = self._meta_verify(prompt, rng)
        else:  # pragma: no cover - Role is closed
            raise ValueError(f"unknown role {role!r}")
        return CompletionResult(text=text, usage=_approx_usage(prompt, text))

    # -- generator ---------------------------------------------------------

    def _draw_quality(self, rng: random.Random) -> Score:
        if self.profile.q_star is not None:
            return score_from_numeric(self.profile.q_star)
        return rng.choices(_QUALITY_LADDER, weights=self.profile.quality_weights, k=1)[0]

    def _proof_body(self, quality: Score, rng: random.Random) -> str:
        lines = [
            f"We argue by induction on the structure of the statement. QLATENT:{format_score(quality)}",
            "The base case follows from the definitions.",
        ]
        if quality is Score.ONE:
            lines.append("Every inductive step is fully justified, so the claim holds.")
        else:
            flaw = f"FLAW:g{rng.randrange(16 ** 8):08x}"
            if quality is Score.HALF:
                lines.append(
                    f"The inductive step asserts the bound without proof ({flaw}), "
                    "but the overall approach is sound."
                )
            else:
                lines.append(
                    f"The key lemma is applied outside its hypotheses ({flaw}), "
                    "and the conclusion depends on it."
                )
        return "\n".join(lines)

    def _self_analysis(self, quality: Score, proof_body: str) -> str:
        flaws = _FLAW_RE.findall(proof_body)
        if flaws:
            finding = f"My argument leans on the unjustified step tagged {flaws[0]}."
        else:
            finding = "I rechecked each step and found no gaps."
        return (
            f"{VERIFIER_EVAL_ANCHOR}\n{finding}\n\n"
            f"{VERIFIER_SCORE_ANCHOR} \\boxed{{{format_score(quality)}}}"
        )

    def _generation_response(self, quality: Score, rng: random.Random) -> str:
        body = self._proof_body(quality, rng)
        return (
            f"## Solution\n{body}\n\n"
            f"## Self Evaluation\n{self._self_analysis(quality, body)}"
        )

    def _generate(self, rng: random.Random) -> str:
        return self._generation_response(self._draw_quality(rng), rng)

    def _refine(self, prompt: str, rng: random.Random) -> str:
        latents = [score_from_numeric(Fraction(m)) for m in _LATENT_RE.findall(prompt)]
        if not latents:
            return self._generate(rng)
        base = max(latents)
        quality = base
        if base < Score.ONE and rng.random() < self.profile.refine_improve_prob:
            quality = _QUALITY_LADDER[_QUALITY_LADDER.index(base) + 1]
        return self._generation_response(quality, rng)

    # -- verifier ----------------------------------------------------------

    def _issue_analysis(self, flaw: str, score: Score) -> str:
        severity = "a fatal gap" if score is Score.ZERO else "a significant but non-fatal gap"
        return (
            f"{VERIFIER_EVAL_ANCHOR}\n"
            f"The step tagged {flaw} is asserted without justification; this is {severity}.\n\n"
            f"{VERIFIER_SCORE_ANCHOR} \\boxed{{{format_score(score)}}}"
        )

    def _clean_analysis(self) -> str:
        return (
            f"{VERIFIER_EVAL_ANCHOR}\n"
            "I verified each step against the rubric and found no issues.\n\n"
            f"{VERIFIER_SCORE_ANCHOR} \\boxed{{1}}"
        )

    def _verify(self, prompt: str, rng: random.Random) -> str:
        detect_roll = rng.random()  # always the first draw: P(issue) is exact
        latent = _LATENT_RE.search(prompt)
        quality = score_from_numeric(Fraction(latent.group(1))) if latent else Score.ONE
        if quality is Score.ONE:
            if detect_roll < self.profile.hallucination_prob:
                fake = f"FLAW:h{rng.randrange(16 ** 8):08x}"
                return self._issue_analysis(fake, Score.HALF)
            return self._clean_analysis()
        if detect_roll < self.profile.detection_prob:
            flaws = _FLAW_RE.findall(prompt)
            return self._issue_analysis(flaws[0], quality)
        return self._clean_analysis()

    # -- meta-verifier -----------------------------------------------------

    def _meta_verify(self, prompt: str, rng: random.Random) -> str:
        accurate = rng.random() < self.profile.meta_accuracy
        split = prompt.find(VERIFIER_EVAL_ANCHOR)
        if split < 0:
            proof_part, analysis_part = prompt, ""
        else:
            proof_part, analysis_part = prompt[:split], prompt[split:]
        claimed = set(_FLAW_RE.findall(analysis_part))
        present = set(_FLAW_RE.findall(proof_part))
        if claimed:
            genuine = claimed <= present
            basis = (
                "the quoted step exists in the solution and the objection stands"
                if genuine
                else "the quoted step does not appear in the solution"
            )
        else:
            genuine = not present
            basis = (
                "the evaluation's clean bill matches the solution"
                if genuine
                else "the evaluation overlooks a defective step in the solution"
            )
        verdict = genuine if accurate else not genuine
        rating = Score.ONE if verdict else Score.ZERO
        return (
            f"{META_EVAL_ANCHOR}\nI checked every claimed issue: {basis}.\n\n"
            f"{META_SCORE_ANCHOR} \\boxed{{{format_score(rating)}}}"
        )
