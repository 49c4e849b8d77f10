"""Run configuration with the published defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ValidationError
from .models import LANGUAGES, Dimension

# per-dimension feedback impact score and weight floor
DEFAULT_IMPACT = {"strategic": 1.0, "tactical": 2.0, "operational": 3.0}
DEFAULT_W_MIN = {"strategic": 0.8, "tactical": 0.6, "operational": 0.5}


def _per_dimension(value: Any, name: str) -> dict[str, float]:
    if isinstance(value, (int, float)):
        return {d.value: float(value) for d in Dimension}
    if not isinstance(value, Mapping):
        raise ValidationError(f"{name} must be a number or a per-dimension mapping")
    out = {}
    for d in Dimension:
        if d.value not in value:
            raise ValidationError(f"{name} is missing dimension {d.value!r}")
        out[d.value] = float(value[d.value])
    return out


@dataclass(frozen=True)
class RunConfig:
    provider: str = "mock"
    model: str | None = None
    temperature: float = 0.3
    max_tokens: int | None = None
    parallelism: int = 1
    seed: int = 0
    language: str = "python"

    backtracking: bool = True
    rectification: bool = True
    attenuation: bool = True
    llm_conflict_detection: bool = False

    max_rectify_retries: int = 3
    pass_threshold: float = 0.8
    max_backtrack_iterations: int = 3

    alpha: float = 0.1
    beta: float = 1.2
    w_initial: float = 1.0
    impact: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_IMPACT))
    w_min: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_W_MIN))

    def __post_init__(self):
        object.__setattr__(self, "impact", _per_dimension(self.impact, "impact"))
        object.__setattr__(self, "w_min", _per_dimension(self.w_min, "w_min"))
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.parallelism < 1:
            raise ValidationError("parallelism must be >= 1")
        if self.max_rectify_retries < 0:
            raise ValidationError("max_rectify_retries must be >= 0")
        if self.max_backtrack_iterations < 1:
            raise ValidationError("max_backtrack_iterations must be >= 1")
        if not 0.0 <= self.pass_threshold <= 1.0:
            raise ValidationError("pass_threshold must lie in [0, 1]")
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError("alpha must lie in [0, 1)")
        if self.beta <= 0:
            raise ValidationError("beta must be > 0")
        if not 0.0 <= self.w_initial <= 1.0:
            raise ValidationError("w_initial must lie in [0, 1]")
        if any(v < 0 for v in self.impact.values()):
            raise ValidationError("impact scores must be >= 0")
        if any(not 0.0 <= v <= 1.0 for v in self.w_min.values()):
            raise ValidationError("w_min values must lie in [0, 1]")
        if self.language.lower() not in LANGUAGES:
            raise ValidationError(f"unsupported language {self.language!r}")

    @property
    def extension(self) -> str:
        return LANGUAGES[self.language.lower()][0]

    @property
    def comment_prefix(self) -> str:
        return LANGUAGES[self.language.lower()][1]

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["impact"] = dict(self.impact)
        data["w_min"] = dict(self.w_min)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**dict(data))

    def updated(self, **changes: Any) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_config_file(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return data
