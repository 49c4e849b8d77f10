"""Prompt catalog rendering and tolerant parsing of LLM outputs."""

from __future__ import annotations

import enum
import json
import re
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    EmptyList,
    EmptySource,
    ModuleNotInOutput,
    NoJsonFound,
    NoScoreFound,
    OutOfRange,
    SchemaMismatch,
    UnboundPlaceholder,
)
from .models import Dimension, FunctionRationale, ModuleRationale, TaskPrompt

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"

_PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")

METRICS = ("completeness", "correctness", "usability", "robustness")


class TemplateId(str, enum.Enum):
    STRATEGIC = "strategic"
    TACTICAL = "tactical"
    OPERATIONAL = "operational"
    VERIFY_STRATEGIC = "verify_strategic"
    VERIFY_TACTICAL = "verify_tactical"
    VERIFY_OPERATIONAL = "verify_operational"
    RECTIFY = "rectify"
    CONFLICT_DETECT = "conflict_detect"
    CONFLICT_RESOLVE = "conflict_resolve"
    JUDGE_COMPLETENESS = "judge_completeness"
    JUDGE_CORRECTNESS = "judge_correctness"
    JUDGE_USABILITY = "judge_usability"
    JUDGE_ROBUSTNESS = "judge_robustness"

    @classmethod
    def generation(cls, dimension: Dimension) -> "TemplateId":
        return cls(Dimension(dimension).value)

    @classmethod
    def verification(cls, dimension: Dimension) -> "TemplateId":
        return cls("verify_" + Dimension(dimension).value)

    @classmethod
    def judge(cls, metric: str) -> "TemplateId":
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
        return cls("judge_" + metric)


class TemplateCatalog:
    """Template bodies loaded from ``<directory>/<template id>.txt``.

    Any file missing from an override directory falls back to the bundled one.
    """

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else TEMPLATE_DIR
        self._bodies: dict[TemplateId, str] = {}
        for tid in TemplateId:
            path = self.directory / f"{tid.value}.txt"
            if not path.is_file():
                path = TEMPLATE_DIR / f"{tid.value}.txt"
            self._bodies[tid] = path.read_text(encoding="utf-8")

    def body(self, template_id: TemplateId | str) -> str:
        return self._bodies[TemplateId(template_id)]

    def placeholders(self, template_id: TemplateId | str) -> list[str]:
        seen = []
        for name in _PLACEHOLDER.findall(self.body(template_id)):
            if name not in seen:
                seen.append(name)
        return seen

    def render(self, template_id: TemplateId | str, bindings: Mapping[str, str]) -> str:
        body = self.body(template_id)
        for name in _PLACEHOLDER.findall(body):
            if name not in bindings:
                raise UnboundPlaceholder(name)
        # single pass: bound values are never re-scanned for markers
        return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), body)


@lru_cache(maxsize=1)
def default_catalog() -> TemplateCatalog:
    return TemplateCatalog()


def render(template_id: TemplateId | str, bindings: Mapping[str, str],
           catalog: TemplateCatalog | None = None) -> str:
    return (catalog or default_catalog()).render(template_id, bindings)


def format_task_prompt(task: TaskPrompt) -> str:
    """Lay out a task the way the dataset presents it to the strategic step."""
    lines = [task.task_definition.strip(), "", "Key Features:", ""]
    lines.extend(f.strip() for f in task.key_features)
    if task.technical_specifications:
        lines += ["", "Technical Specifications:", ""]
        lines.extend(
            f"({i}) {spec.strip()}" for i, spec in enumerate(task.technical_specifications, 1)
        )
    return "\n".join(lines)


def format_module_rationale(module: ModuleRationale) -> str:
    return json.dumps(
        [{"Module": module.module_name, "Responsibility": module.responsibility}],
        indent=4,
        ensure_ascii=False,
    )


def format_function_rationale(fr: FunctionRationale) -> str:
    return json.dumps(
        {
            "Module": fr.parent_module,
            "Function": fr.function_name,
            "Responsibility": fr.responsibility,
        },
        indent=4,
        ensure_ascii=False,
    )


# -- parsers ------------------------------------------------------------------

_DECODER = json.JSONDecoder()


def _json_values(text: str, opener: str):
    """Yield every JSON value that starts at an ``opener`` character, in order."""
    pos = text.find(opener)
    while pos != -1:
        try:
            value, end = _DECODER.raw_decode(text, pos)
        except json.JSONDecodeError:
            pos = text.find(opener, pos + 1)
            continue
        yield value
        pos = text.find(opener, end)


def _first_json(text: str, kind: type, predicate=None):
    opener = "[" if kind is list else "{"
    found_any = False
    for value in _json_values(text, opener):
        if not isinstance(value, kind):
            continue
        found_any = True
        if predicate is None or predicate(value):
            return value
    if not found_any:
        raise NoJsonFound(f"no JSON {'array' if kind is list else 'object'} in output")
    return None


def _text_field(obj: Any, key: str) -> str | None:
    if not isinstance(obj, dict):
        return None
    value = obj.get(key)
    if isinstance(value, str) and value.strip():
        return value.strip()
    return None


def parse_module_rationales(text: str) -> list[ModuleRationale]:
    """First JSON array of ``{"Module", "Responsibility"}`` objects in ``text``."""
    items = _first_json(text, list)
    if not items:
        raise EmptyList("the decomposition lists no modules")
    out = []
    for i, item in enumerate(items):
        name = _text_field(item, "Module")
        resp = _text_field(item, "Responsibility")
        if name is None or resp is None:
            raise SchemaMismatch(i, 'expected non-empty "Module" and "Responsibility"')
        out.append(ModuleRationale(name, resp, i))
    return out


def parse_function_rationales(text: str, parent: str) -> list[FunctionRationale]:
    """Sub-functions listed for ``parent`` in a ``{"Modules": [...]}`` object."""
    doc = _first_json(text, dict, lambda d: "Modules" in d)
    if doc is None:
        raise SchemaMismatch(None, 'no object with a "Modules" key')
    modules = doc["Modules"]
    if not isinstance(modules, list):
        raise SchemaMismatch(None, '"Modules" must be a list')
    for i, mod in enumerate(modules):
        if _text_field(mod, "Module") is None or not isinstance(mod.get("SubFunctions"), list):
            raise SchemaMismatch(i, 'expected "Module" and a "SubFunctions" list')

    chosen = next((m for m in modules if m["Module"].strip() == parent.strip()), None)
    if chosen is None:
        folded = parent.strip().casefold()
        chosen = next((m for m in modules if m["Module"].strip().casefold() == folded), None)
    if chosen is None:
        raise ModuleNotInOutput(parent)

    subs = chosen["SubFunctions"]
    if not subs:
        raise EmptyList(f"module {parent!r} has no sub-functions")
    out = []
    for i, sub in enumerate(subs):
        name = _text_field(sub, "Function")
        resp = _text_field(sub, "Responsibility")
        if name is None or resp is None:
            raise SchemaMismatch(i, 'expected non-empty "Function" and "Responsibility"')
        out.append(FunctionRationale(name, resp, parent))
    return out


_FENCE = "```"


def extract_code(text: str) -> str:
    """Source code from an LLM answer.

    Fenced blocks are concatenated in order (the language tag on the opening
    fence is dropped); an unterminated final block runs to the end of the
    text. Without fences the whole answer is returned trimmed.
    """
    lines = text.splitlines()
    blocks: list[list[str]] = []
    inside = False
    saw_fence = False
    for line in lines:
        if line.lstrip().startswith(_FENCE):
            saw_fence = True
            if inside:
                inside = False
            else:
                inside = True
                blocks.append([])
            continue
        if inside:
            blocks[-1].append(line)

    if saw_fence:
        parts = ["\n".join(b).strip("\n") for b in blocks]
        code = "\n\n".join(p for p in parts if p.strip())
    else:
        code = text.strip()
    code = code.replace(_FENCE, "")
    if not code.strip():
        raise EmptySource("the answer contains no code")
    return code.strip("\n") if saw_fence else code.strip()


_NUMBER = re.compile(r"(?<![\w.])[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")


def parse_score(text: str, upper: float = 1.0) -> float:
    """First numeric literal in ``text``; must lie in ``[0, upper]``."""
    match = _NUMBER.search(text)
    if match is None:
        raise NoScoreFound(f"no number in {text[:80]!r}")
    value = float(match.group(0))
    if not 0.0 <= value <= upper:
        raise OutOfRange(value)
    return value


def parse_judge_score(text: str) -> float:
    return parse_score(text, upper=100.0)


# -- conflict prompts ---------------------------------------------------------


def parse_conflict_json(text: str) -> dict | None:
    """The first object carrying a ``"conflicts"`` key, or None if there is none."""
    try:
        return _first_json(text, dict, lambda d: "conflicts" in d)
    except NoJsonFound:
        return None


_FILE_BLOCK = re.compile(
    r"^[ \t>#*]*File:[ \t]*`?(?P<name>[^\n`]+?)`?[ \t*]*\n(?:[ \t]*\n)*[ \t]*```[^\n]*\n(?P<body>.*?)^[ \t]*```",
    re.MULTILINE | re.DOTALL,
)


def parse_revised_sources(text: str) -> dict[str, str]:
    """``File: <key>`` lines each followed by a fenced block, as key -> source."""
    out = {}
    for m in _FILE_BLOCK.finditer(text):
        out[m.group("name").strip()] = m.group("body").strip("\n")
    return out
