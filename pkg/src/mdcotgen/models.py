"""Domain types shared across the pipeline.

All types are frozen dataclasses; "mutation" means building a new value with
:func:`dataclasses.replace`. Every type converts to and from plain JSON-ready
dicts whose keys are exactly the field names.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    DuplicateId,
    EmptyKeyFeatures,
    EmptyTaskDefinition,
    ValidationError,
)

__all__ = [
    "Category",
    "Dimension",
    "ConflictScope",
    "ConflictKind",
    "TaskPrompt",
    "ModuleRationale",
    "FunctionRationale",
    "GeneratedFunction",
    "ModuleNode",
    "ProjectTree",
    "ConflictReport",
    "DimensionWeightState",
    "VerificationResult",
    "LANGUAGES",
    "derive_file_name",
    "sanitize_dir_name",
    "validate_task_prompt",
    "validate_dataset",
]


class Category(str, enum.Enum):
    GAME = "Game"
    WEB = "Web"
    AI_ML = "AI_ML"
    DATABASE = "Database"
    MOBILE = "Mobile"
    TOOL = "Tool"


class Dimension(str, enum.Enum):
    """Reasoning tier, ordered from most abstract to most concrete."""

    STRATEGIC = "strategic"
    TACTICAL = "tactical"
    OPERATIONAL = "operational"

    @property
    def rank(self) -> int:
        return _DIMENSION_ORDER.index(self)

    def __lt__(self, other):
        if not isinstance(other, Dimension):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other):
        if not isinstance(other, Dimension):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other):
        if not isinstance(other, Dimension):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other):
        if not isinstance(other, Dimension):
            return NotImplemented
        return self.rank >= other.rank


_DIMENSION_ORDER = (Dimension.STRATEGIC, Dimension.TACTICAL, Dimension.OPERATIONAL)


class ConflictScope(str, enum.Enum):
    MODULE = "ModuleLevel"
    PROJECT = "ProjectLevel"


class ConflictKind(str, enum.Enum):
    DEPENDENCY_MISMATCH = "DependencyMismatch"
    LOGICAL_INCONSISTENCY = "LogicalInconsistency"
    RETURN_TYPE_DISCREPANCY = "ReturnTypeDiscrepancy"
    DUPLICATE_DEFINITION = "DuplicateDefinition"
    UNRESOLVED_REFERENCE = "UnresolvedReference"


# language -> (file extension, line comment prefix)
LANGUAGES: dict[str, tuple[str, str]] = {
    "python": (".py", "#"),
    "javascript": (".js", "//"),
    "typescript": (".ts", "//"),
    "java": (".java", "//"),
    "go": (".go", "//"),
    "rust": (".rs", "//"),
    "c": (".c", "//"),
    "cpp": (".cpp", "//"),
    "csharp": (".cs", "//"),
    "kotlin": (".kt", "//"),
    "swift": (".swift", "//"),
    "ruby": (".rb", "#"),
    "php": (".php", "//"),
    "shell": (".sh", "#"),
}

_UNSAFE_PATH = re.compile(r'[\\/:*?"<>|\x00-\x1f]')


def sanitize_dir_name(name: str) -> str:
    """Directory name for a module; spaces are kept, separators are not."""
    cleaned = _UNSAFE_PATH.sub("_", name).strip()
    if cleaned in ("", ".", ".."):
        cleaned = cleaned.replace(".", "_") or "_"
    return cleaned


def derive_file_name(function_name: str, language: str = "python") -> str:
    stem = re.sub(r"\s+", "_", _UNSAFE_PATH.sub("_", function_name.strip()))
    if stem in ("", ".", ".."):
        stem = stem.replace(".", "_") or "_"
    try:
        ext = LANGUAGES[language.lower()][0]
    except KeyError:
        raise ValidationError(f"unsupported target language {language!r}") from None
    return stem + ext


def _enum_value(value: Any) -> Any:
    return value.value if isinstance(value, enum.Enum) else value


def _require_text(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise ValidationError(f"{what} must be a non-empty string")
    return value


@dataclass(frozen=True)
class TaskPrompt:
    """The single user input: what to build, its features, and constraints."""

    id: str
    category: Category
    task_definition: str
    key_features: tuple[str, ...]
    technical_specifications: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "key_features", tuple(self.key_features))
        object.__setattr__(
            self, "technical_specifications", tuple(self.technical_specifications)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "category": self.category.value,
            "task_definition": self.task_definition,
            "key_features": list(self.key_features),
            "technical_specifications": list(self.technical_specifications),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TaskPrompt":
        missing = [
            k for k in ("id", "category", "task_definition", "key_features") if k not in data
        ]
        if missing:
            raise ValidationError(f"task prompt is missing field(s): {', '.join(missing)}")
        try:
            category = Category(data["category"])
        except ValueError:
            raise ValidationError(f"unknown category {data['category']!r}") from None
        features = data["key_features"]
        specs = data.get("technical_specifications", [])
        if isinstance(features, str) or isinstance(specs, str):
            raise ValidationError("key_features and technical_specifications must be lists")
        return cls(
            id=str(data["id"]),
            category=category,
            task_definition=data["task_definition"],
            key_features=tuple(features),
            technical_specifications=tuple(specs),
        )


def validate_task_prompt(raw: TaskPrompt) -> TaskPrompt:
    if not isinstance(raw.task_definition, str) or not raw.task_definition.strip():
        raise EmptyTaskDefinition(f"task {raw.id!r} has an empty task definition")
    features = [f for f in raw.key_features if isinstance(f, str) and f.strip()]
    if not features:
        raise EmptyKeyFeatures(f"task {raw.id!r} lists no key features")
    return raw


def validate_dataset(prompts: Iterable[TaskPrompt]) -> list[TaskPrompt]:
    seen: set[str] = set()
    out = []
    for prompt in prompts:
        validate_task_prompt(prompt)
        if prompt.id in seen:
            raise DuplicateId(prompt.id)
        seen.add(prompt.id)
        out.append(prompt)
    return out


@dataclass(frozen=True)
class ModuleRationale:
    module_name: str
    responsibility: str
    index: int = 0

    def __post_init__(self):
        _require_text(self.module_name, "module_name")
        _require_text(self.responsibility, "responsibility")
        if self.index < 0:
            raise ValidationError("index must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "module_name": self.module_name,
            "responsibility": self.responsibility,
            "index": self.index,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModuleRationale":
        return cls(data["module_name"], data["responsibility"], int(data.get("index", 0)))


@dataclass(frozen=True)
class FunctionRationale:
    function_name: str
    responsibility: str
    parent_module: str

    def __post_init__(self):
        _require_text(self.function_name, "function_name")
        _require_text(self.responsibility, "responsibility")
        _require_text(self.parent_module, "parent_module")

    @property
    def unit_id(self) -> str:
        return f"{self.parent_module}/{self.function_name}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "function_name": self.function_name,
            "responsibility": self.responsibility,
            "parent_module": self.parent_module,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FunctionRationale":
        return cls(data["function_name"], data["responsibility"], data["parent_module"])


@dataclass(frozen=True)
class GeneratedFunction:
    rationale: FunctionRationale
    source: str
    file_name: str
    revision: int = 0

    def __post_init__(self):
        if not isinstance(self.source, str) or not self.source.strip():
            raise ValidationError(f"{self.rationale.unit_id}: source must be non-empty")
        if self.revision < 0:
            raise ValidationError("revision must be >= 0")

    @property
    def unit_id(self) -> str:
        return self.rationale.unit_id

    @property
    def parent_module(self) -> str:
        return self.rationale.parent_module

    def revised(self, source: str) -> "GeneratedFunction":
        return replace(self, source=source, revision=self.revision + 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rationale": self.rationale.to_dict(),
            "source": self.source,
            "file_name": self.file_name,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratedFunction":
        return cls(
            FunctionRationale.from_dict(data["rationale"]),
            data["source"],
            data["file_name"],
            int(data.get("revision", 0)),
        )


@dataclass(frozen=True)
class ModuleNode:
    name: str
    functions: tuple[GeneratedFunction, ...] = ()
    merged_source: str | None = None
    rationale: ModuleRationale | None = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        _require_text(self.name, "module name")
        files = set()
        for fn in self.functions:
            if fn.parent_module != self.name:
                raise ValidationError(
                    f"function {fn.unit_id!r} does not belong to module {self.name!r}"
                )
            if fn.file_name in files:
                raise ValidationError(f"duplicate file name {fn.file_name!r} in {self.name!r}")
            files.add(fn.file_name)

    def function(self, function_name: str) -> GeneratedFunction:
        for fn in self.functions:
            if fn.rationale.function_name == function_name:
                return fn
        raise KeyError(function_name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "functions": [fn.to_dict() for fn in self.functions],
            "merged_source": self.merged_source,
            "rationale": None if self.rationale is None else self.rationale.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModuleNode":
        rationale = data.get("rationale")
        return cls(
            data["name"],
            tuple(GeneratedFunction.from_dict(f) for f in data.get("functions", ())),
            data.get("merged_source"),
            None if rationale is None else ModuleRationale.from_dict(rationale),
        )


@dataclass(frozen=True)
class ProjectTree:
    modules: tuple[ModuleNode, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))
        names = [m.name for m in self.modules]
        if len(set(names)) != len(names):
            raise ValidationError("module names must be unique within a project")

    def __len__(self) -> int:
        return len(self.modules)

    def module(self, name: str) -> ModuleNode:
        for node in self.modules:
            if node.name == name:
                return node
        raise KeyError(name)

    def functions(self) -> list[GeneratedFunction]:
        return [fn for node in self.modules for fn in node.functions]

    def function(self, unit_id: str) -> GeneratedFunction:
        module, _, name = unit_id.partition("/")
        return self.module(module).function(name)

    def unit_ids(self) -> set[str]:
        ids = {node.name for node in self.modules}
        ids.update(fn.unit_id for fn in self.functions())
        return ids

    def with_module(self, node: ModuleNode) -> "ProjectTree":
        modules = [node if m.name == node.name else m for m in self.modules]
        if node.name not in {m.name for m in self.modules}:
            modules.append(node)
        return ProjectTree(tuple(modules))

    def with_function(self, fn: GeneratedFunction) -> "ProjectTree":
        node = self.module(fn.parent_module)
        functions = tuple(
            fn if f.rationale.function_name == fn.rationale.function_name else f
            for f in node.functions
        )
        return self.with_module(replace(node, functions=functions))

    def to_dict(self) -> dict[str, Any]:
        return {"modules": [m.to_dict() for m in self.modules]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProjectTree":
        return cls(tuple(ModuleNode.from_dict(m) for m in data.get("modules", ())))


@dataclass(frozen=True)
class ConflictReport:
    scope: ConflictScope
    conflict_set: tuple[str, ...]
    affected_set: tuple[str, ...]
    kinds: tuple[ConflictKind, ...] = ()
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scope", ConflictScope(self.scope))
        object.__setattr__(self, "conflict_set", tuple(self.conflict_set))
        object.__setattr__(self, "affected_set", tuple(self.affected_set))
        object.__setattr__(self, "kinds", tuple(ConflictKind(k) for k in self.kinds))
        if not self.conflict_set:
            raise ValidationError("a conflict report needs a non-empty conflict set")

    def unresolved_ids(self, project: ProjectTree) -> list[str]:
        known = project.unit_ids()
        return [u for u in (*self.conflict_set, *self.affected_set) if u not in known]

    def to_dict(self) -> dict[str, Any]:
        return {
            "scope": self.scope.value,
            "conflict_set": list(self.conflict_set),
            "affected_set": list(self.affected_set),
            "kinds": [k.value for k in self.kinds],
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ConflictReport":
        return cls(
            ConflictScope(data["scope"]),
            tuple(data["conflict_set"]),
            tuple(data.get("affected_set", ())),
            tuple(ConflictKind(k) for k in data.get("kinds", ())),
            data.get("description", ""),
        )


@dataclass(frozen=True)
class DimensionWeightState:
    """Rectification weight bookkeeping for one dimension.

    ``w_current`` is the probability that a step in this dimension is sent to
    verification; ``freq`` counts rectifications performed so far in the run.
    """

    dimension: Dimension
    w_current: float = 1.0
    w_min: float = 0.0
    impact: float = 1.0
    freq: int = 0
    alpha: float = 0.1
    beta: float = 1.2

    def __post_init__(self):
        object.__setattr__(self, "dimension", Dimension(self.dimension))
        if not 0.0 <= self.w_current <= 1.0:
            raise ValidationError(f"w_current={self.w_current} outside [0, 1]")
        if not 0.0 <= self.w_min <= 1.0:
            raise ValidationError(f"w_min={self.w_min} outside [0, 1]")
        if self.impact < 0:
            raise ValidationError("impact must be >= 0")
        if self.freq < 0 or int(self.freq) != self.freq:
            raise ValidationError("freq must be a non-negative integer")
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError(f"alpha={self.alpha} outside [0, 1)")
        if not self.beta > 0:
            raise ValidationError("beta must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension.value,
            "w_current": self.w_current,
            "w_min": self.w_min,
            "impact": self.impact,
            "freq": self.freq,
            "alpha": self.alpha,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DimensionWeightState":
        return cls(
            Dimension(data["dimension"]),
            float(data["w_current"]),
            float(data["w_min"]),
            float(data["impact"]),
            int(data["freq"]),
            float(data["alpha"]),
            float(data["beta"]),
        )


@dataclass(frozen=True)
class VerificationResult:
    score: float | None
    passed: bool
    raw_response: str = ""

    @classmethod
    def judge(cls, score: float | None, threshold: float, raw: str = "") -> "VerificationResult":
        return cls(score, score is not None and score >= threshold, raw)

    def to_dict(self) -> dict[str, Any]:
        return {"score": self.score, "passed": self.passed, "raw_response": self.raw_response}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "VerificationResult":
        return cls(data["score"], bool(data["passed"]), data.get("raw_response", ""))


def dedupe_names(names: Sequence[str]) -> list[str]:
    """Suffix repeated names with " 2", " 3", ... keeping the first occurrence."""
    seen: dict[str, int] = {}
    taken = set(names)
    out = []
    for name in names:
        if name not in seen:
            seen[name] = 1
            out.append(name)
            continue
        n = seen[name]
        while True:
            n += 1
            candidate = f"{name} {n}"
            if candidate not in taken:
                break
        seen[name] = n
        taken.add(candidate)
        out.append(candidate)
    return out


def plain(value: Any) -> Any:
    """Recursively convert domain values into JSON-ready structures."""
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, Mapping):
        return {str(_enum_value(k)): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return _enum_value(value)

