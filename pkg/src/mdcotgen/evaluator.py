"""Project metrics: code length, LLM-judged completeness sub-scores, and the
aggregation arithmetic used to summarize them over a dataset.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from statistics import fmean
from typing import Any, Sequence

from .assembler import MANIFEST_NAME, TRACE_NAME
from .errors import (
    AllFilesUnscored,
    DatasetError,
    EmptySampleSet,
    OutputParseError,
    ProjectIOError,
    ValidationError,
)
from .models import TaskPrompt, validate_task_prompt
from .prompts import METRICS, TemplateCatalog, TemplateId, default_catalog, format_task_prompt, parse_judge_score
from .provider import ChatProvider, ChatRequest

logger = logging.getLogger(__name__)

EXCLUDED_FILES = frozenset({MANIFEST_NAME, TRACE_NAME})


def code_files(project_dir: str | os.PathLike) -> list[Path]:
    """Every file under ``project_dir`` except the manifest and trace, sorted by path."""
    root = Path(project_dir)
    if not root.is_dir():
        raise ProjectIOError(root, FileNotFoundError(f"{root} is not a directory"))
    return sorted(
        (p for p in root.rglob("*") if p.is_file() and p.name not in EXCLUDED_FILES),
        key=lambda p: p.relative_to(root).as_posix(),
    )


def code_length(project_dir: str | os.PathLike) -> int:
    """Total size in bytes of the project's code files."""
    try:
        return sum(p.stat().st_size for p in code_files(project_dir))
    except OSError as exc:
        raise ProjectIOError(project_dir, exc) from exc


def aggregate_lengths(samples: Sequence[int]) -> float:
    if not samples:
        raise EmptySampleSet("no code-length samples to average")
    return fmean(samples)


def weighted_sum(completeness: float, correctness: float, usability: float,
                 robustness: float) -> float:
    """Equal-weight mean of the four judged sub-scores."""
    scores = (completeness, correctness, usability, robustness)
    for s in scores:
        if not 0.0 <= s <= 100.0:
            raise ValidationError(f"sub-score {s} outside [0, 100]")
    return fmean(scores)


@dataclass(frozen=True)
class EvalScores:
    completeness: float
    correctness: float
    usability: float
    robustness: float

    @property
    def weighted_sum(self) -> float:
        return weighted_sum(self.completeness, self.correctness, self.usability, self.robustness)

    def to_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS} | {"weighted_sum": self.weighted_sum}


@dataclass(frozen=True)
class JudgeOutcome:
    score: float
    per_file: dict[str, float]
    warnings: tuple[str, ...] = ()


def judge(
    project_dir: str | os.PathLike,
    metric: str,
    provider: ChatProvider,
    *,
    task: TaskPrompt | None = None,
    catalog: TemplateCatalog | None = None,
    temperature: float = 0.0,
) -> JudgeOutcome:
    """Mean per-file 0-100 judge score for ``metric``.

    Files whose answer holds no usable score are skipped with a warning; if
    none can be scored, :class:`AllFilesUnscored` is raised.
    """
    catalog = catalog or default_catalog()
    tid = TemplateId.judge(metric)
    root = Path(project_dir)
    task_text = format_task_prompt(task) if task is not None else "(not provided)"
    per_file: dict[str, float] = {}
    warnings = []
    for path in code_files(root):
        rel = path.relative_to(root).as_posix()
        prompt = catalog.render(tid, {
            "task": task_text,
            "file_path": rel,
            "code": path.read_text(encoding="utf-8", errors="replace"),
        })
        answer = provider.complete(
            ChatRequest.single(getattr(provider, "model", "judge"), prompt, temperature)
        ).content
        try:
            per_file[rel] = parse_judge_score(answer)
        except OutputParseError as exc:
            msg = f"{metric}: {rel} unscored ({type(exc).__name__}: {exc})"
            logger.warning(msg)
            warnings.append(msg)
    if not per_file:
        raise AllFilesUnscored(f"no file of {root} received a {metric} score")
    return JudgeOutcome(fmean(per_file.values()), per_file, tuple(warnings))


def judge_all(project_dir, provider: ChatProvider, **kwargs) -> tuple[EvalScores, list[str]]:
    outcomes = {m: judge(project_dir, m, provider, **kwargs) for m in METRICS}
    warnings = [w for o in outcomes.values() for w in o.warnings]
    return EvalScores(**{m: o.score for m, o in outcomes.items()}), warnings


def evaluation_report(
    project_dir: str | os.PathLike,
    *,
    scores: EvalScores | None = None,
    judge_model: str | None = None,
    project_id: str | None = None,
    timestamp: str | None = None,
) -> dict[str, Any]:
    if project_id is None:
        manifest = Path(project_dir) / MANIFEST_NAME
        if manifest.is_file():
            project_id = json.loads(manifest.read_text(encoding="utf-8")).get("project_id")
    return {
        "project_id": project_id or Path(project_dir).name,
        "code_length": code_length(project_dir),
        "scores": None if scores is None else {m: getattr(scores, m) for m in METRICS},
        "weighted_sum": None if scores is None else scores.weighted_sum,
        "judge_model": judge_model,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def load_dataset(path: str | os.PathLike) -> list[TaskPrompt]:
    """Line-delimited JSON task records; errors carry the 1-based line number."""
    prompts = []
    seen: set[str] = set()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProjectIOError(path, exc) from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise DatasetError(lineno, "record must be a JSON object")
        if "key_features" not in record:
            raise DatasetError(lineno, "missing field 'key_features'")
        try:
            prompt = validate_task_prompt(TaskPrompt.from_dict(record))
        except ValidationError as exc:
            raise DatasetError(lineno, str(exc)) from exc
        if prompt.id in seen:
            raise DatasetError(lineno, f"duplicate task id {prompt.id!r}")
        seen.add(prompt.id)
        prompts.append(prompt)
    return prompts


def load_task(path: str | os.PathLike, task_id: str | None = None) -> TaskPrompt:
    """A single task from a JSON object file or a JSONL dataset."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProjectIOError(p, exc) from exc
    stripped = text.strip()
    if stripped.startswith("{") and "\n{" not in stripped:
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise DatasetError(exc.lineno, f"invalid JSON ({exc.msg})") from exc
        prompts = [validate_task_prompt(TaskPrompt.from_dict(record))]
    else:
        prompts = load_dataset(p)
    if task_id is not None:
        for prompt in prompts:
            if prompt.id == task_id:
                return prompt
        raise ValidationError(f"task id {task_id!r} not found in {p}")
    if len(prompts) != 1:
        raise ValidationError(f"{p} holds {len(prompts)} tasks; pick one with --task-id")
    return prompts[0]
