"""Configuration file and environment handling.

Everything lives in one JSON file; the only environment variables are the
backend endpoint and auth token, which override the file so credentials
stay out of checked-in configs.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Optional, Union

from proofpipe.backends import (
    Backend,
    HttpBackend,
    HttpBackendConfig,
    SamplingParams,
    StochasticMockBackend,
    StochasticProfile,
)
from proofpipe.core import ProofPipeError

ENV_ENDPOINT = "PROOFPIPE_ENDPOINT"
ENV_API_TOKEN = "PROOFPIPE_API_TOKEN"


class ConfigError(ProofPipeError):
    pass


def load_config(path: Optional[Union[str, Path]]) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        config = json.load(handle)
    if not isinstance(config, dict):
        raise ConfigError("configuration file must hold a JSON object")
    return config


def build_profile(config: dict[str, Any]) -> StochasticProfile:
    raw = dict(config.get("profile", {}))
    if "quality_weights" in raw:
        raw["quality_weights"] = tuple(raw["quality_weights"])
    try:
        return StochasticProfile(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad profile section: {exc}")


def build_backend(config: dict[str, Any]) -> Backend:
    """Backend per config; defaults to the stochastic mock."""
    section = config.get("backend", {})
    kind = section.get("kind", "mock")
    if kind == "mock":
        return StochasticMockBackend(build_profile(config))
    if kind == "http":
        endpoint = os.environ.get(ENV_ENDPOINT) or section.get("endpoint")
        if not endpoint:
            raise ConfigError(
                f"http backend needs an endpoint ({ENV_ENDPOINT} or backend.endpoint)"
            )
        model = section.get("model")
        if not model:
            raise ConfigError("http backend needs backend.model")
        return HttpBackend(
            HttpBackendConfig(
                base_url=endpoint,
                model=model,
                role_models=dict(section.get("role_models", {})),
                api_token=os.environ.get(ENV_API_TOKEN) or section.get("api_token"),
                timeout=float(section.get("timeout", 120.0)),
                max_attempts=int(section.get("max_attempts", 3)),
            )
        )
    raise ConfigError(f"unknown backend kind {kind!r} (expected 'mock' or 'http')")


def build_sampling(config: dict[str, Any]) -> SamplingParams:
    section = config.get("sampling", {})
    return SamplingParams(
        temperature=float(section.get("temperature", 1.0)),
        max_tokens=int(section.get("max_tokens", 8192)),
    )


def max_in_flight(config: dict[str, Any]) -> int:
    return int(config.get("max_in_flight", 8))
