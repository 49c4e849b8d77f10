"""Per-run context shared by the pipeline, the rectification guard and the backtracker."""

from __future__ import annotations

import random
from typing import Any

from .config import RunConfig
from .prompts import TemplateCatalog, default_catalog
from .provider import ChatProvider, ChatRequest
from .rectification import WeightBook
from .trace import RunTrace, text_hash


class Session:
    """One run's provider, configuration, seeded RNG, weights and trace.

    The session is the single writer for weight updates and trace events.
    """

    def __init__(
        self,
        provider: ChatProvider,
        config: RunConfig | None = None,
        *,
        trace: RunTrace | None = None,
        catalog: TemplateCatalog | None = None,
    ):
        self.provider = provider
        self.config = config or RunConfig()
        self.trace = trace if trace is not None else RunTrace()
        self.catalog = catalog or default_catalog()
        self.rng = random.Random(self.config.seed)
        self.weights = WeightBook.from_config(self.config)

    @property
    def model(self) -> str:
        return self.config.model or getattr(self.provider, "model", "unknown")

    def render(self, template_id, **bindings: str) -> str:
        return self.catalog.render(template_id, bindings)

    def ask(self, prompt: str) -> tuple[str, dict[str, Any]]:
        """Send one user prompt; return the answer and its trace metadata."""
        request = ChatRequest.single(
            self.model, prompt, self.config.temperature, self.config.max_tokens
        )
        response = self.provider.complete(request)
        return response.content, call_metadata(prompt, response)


def call_metadata(prompt: str, response) -> dict[str, Any]:
    return {
        "llm_call": True,
        "prompt_hash": text_hash(prompt),
        "response_hash": text_hash(response.content),
        "prompt_tokens": response.usage.prompt_tokens,
        "completion_tokens": response.usage.completion_tokens,
        "retries": response.retries,
    }
