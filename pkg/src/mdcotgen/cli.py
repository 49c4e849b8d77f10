"""Command-line entry point: ``generate``, ``evaluate`` and ``sweep``.

Settings come from built-in defaults, then a JSON config file (``--config``,
or ``./srlcg.json`` when present), then command-line flags.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .assembler import TRACE_NAME, write_project
from .config import RunConfig, load_config_file
from .errors import GeneratorError, NonEmptyTarget, ValidationError
from .evaluator import evaluation_report, judge_all, load_task
from .models import Dimension
from .pipeline import run_pipeline
from .prompts import TemplateCatalog
from .provider import BUILTIN_PROFILES, ProviderProfile, build_provider, load_mock_script
from .trace import RunTrace, TraceWriter

logger = logging.getLogger("mdcotgen")

DEFAULT_CONFIG = "srlcg.json"
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}
# config-file keys that are not RunConfig fields
_CLI_KEYS = {
    "task", "task_id", "out", "mock_script", "force", "templates", "profiles",
    "project", "report", "judge_provider", "judge_mock_script",
}
# flag dest -> RunConfig field, where the names differ
_FLAG_TO_FIELD = {"max_iterations": "max_backtrack_iterations"}
SWEEP_PARAMS = ("alpha", "beta", "wmin", "impact")


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", help="task JSON object or JSONL dataset")
    p.add_argument("--task-id", help="task to pick from a multi-record dataset")
    p.add_argument("--provider", help="mock, a built-in profile, or a profile from the config file")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mock-script", help="JSONL script for the mock provider")
    p.add_argument("--language", help="target language (default python)")
    p.add_argument("--templates", help="directory overriding bundled prompt templates")
    p.add_argument("--no-backtracking", dest="backtracking", action="store_false", default=None)
    p.add_argument("--no-rectification", dest="rectification", action="store_false", default=None)
    p.add_argument("--no-attenuation", dest="attenuation", action="store_false", default=None)
    p.add_argument("--llm-conflict-detection", dest="llm_conflict_detection",
                   action="store_true", default=None)
    p.add_argument("--pass-threshold", type=float)
    p.add_argument("--max-rectify-retries", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--parallelism", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdcotgen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help=f"JSON config file (default ./{DEFAULT_CONFIG})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a project from a task prompt")
    _add_run_flags(gen)
    gen.add_argument("--out", help="output project directory")
    gen.add_argument("--force", action="store_true", default=None,
                     help="replace a non-empty output directory")

    ev = sub.add_parser("evaluate", help="measure a generated project")
    ev.add_argument("--project", help="project directory")
    ev.add_argument("--task", help="task the project was generated for (judge context)")
    ev.add_argument("--task-id")
    ev.add_argument("--judge-provider", help="mock or a provider profile; enables judge scores")
    ev.add_argument("--judge-mock-script")
    ev.add_argument("--templates")
    ev.add_argument("--report", help="write the JSON report here instead of stdout")

    sw = sub.add_parser("sweep", help="replay a scripted run over parameter values")
    _add_run_flags(sw)
    sw.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--dimension", choices=[d.value for d in Dimension],
                    help="restrict wmin/impact changes to one dimension")
    sw.add_argument("--out", help="CSV file (default stdout)")
    return parser


# -- settings resolution ------------------------------------------------------


def _file_settings(args: argparse.Namespace) -> dict[str, Any]:
    path = args.config
    if path is None:
        if not Path(DEFAULT_CONFIG).is_file():
            return {}
        path = DEFAULT_CONFIG
    try:
        data = load_config_file(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    unknown = set(data) - _CONFIG_FIELDS - _CLI_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return data


def resolve_settings(args: argparse.Namespace) -> tuple[RunConfig, dict[str, Any]]:
    """Merge defaults, config file and flags; returns (run config, other settings)."""
    data = _file_settings(args)
    run = {k: v for k, v in data.items() if k in _CONFIG_FIELDS}
    extra = {k: v for k, v in data.items() if k in _CLI_KEYS}
    for dest, value in vars(args).items():
        if value is None or dest in ("command", "config", "verbose"):
            continue
        key = _FLAG_TO_FIELD.get(dest, dest)
        if key in _CONFIG_FIELDS:
            run[key] = value
        else:
            extra[key] = value
    try:
        config = RunConfig.from_dict(run)
    except (ValidationError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    return config, extra


def _profiles(extra: dict[str, Any]) -> dict[str, ProviderProfile]:
    profiles = dict(BUILTIN_PROFILES)
    for name, spec in (extra.get("profiles") or {}).items():
        try:
            profiles[name] = ProviderProfile.from_dict(name, spec)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"profile {name!r}: {exc}") from exc
    return profiles


def make_provider(name: str, mock_script: str | None, extra: dict[str, Any],
                  model: str | None = None):
    if name == "mock":
        if not mock_script:
            raise UsageError("the mock provider needs --mock-script")
        try:
            return load_mock_script(mock_script)
        except OSError as exc:
            raise UsageError(f"cannot read mock script: {exc}") from exc
    profiles = _profiles(extra)
    if name not in profiles:
        raise UsageError(f"unknown provider {name!r}; known: mock, {', '.join(sorted(profiles))}")
    profile = profiles[name]
    if model:
        profile = replace(profile, model=model)
    return build_provider(profile)


def _catalog(extra: dict[str, Any]) -> TemplateCatalog | None:
    if not extra.get("templates"):
        return None
    directory = Path(extra["templates"])
    if not directory.is_dir():
        raise UsageError(f"template directory {directory} does not exist")
    return TemplateCatalog(directory)


def _stage(name: str, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except (GeneratorError, OSError) as exc:
        raise StageError(name, exc) from exc


# -- commands -----------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config, extra = resolve_settings(args)
    if not extra.get("task"):
        raise UsageError("generate needs --task")
    if not extra.get("out"):
        raise UsageError("generate needs --out")
    provider = make_provider(config.provider, extra.get("mock_script"), extra, config.model)
    catalog = _catalog(extra)
    task = _stage("validate", load_task, extra["task"], extra.get("task_id"))

    out = Path(extra["out"])
    if out.exists() and any(out.iterdir()):
        if not extra.get("force"):
            raise StageError("assemble", NonEmptyTarget(out))
        shutil.rmtree(out)

    with TraceWriter(out / TRACE_NAME) as writer:
        trace = RunTrace(writer)
        try:
            project, trace = run_pipeline(task, config, provider, trace=trace, catalog=catalog)
        except GeneratorError as exc:
            stage = trace.events[-1].payload.get("stage", "pipeline") if trace.events else "pipeline"
            raise StageError(stage, exc) from exc
        manifest = _stage("assemble", write_project, project, out, config=config,
                          trace=trace, project_id=task.id)

    counts = " ".join(f"{k}={v}" for k, v in manifest.call_counts.items())
    print(out / "manifest.json")
    print(
        f"modules={len(project.modules)} functions={len(project.functions())} "
        f"bytes={manifest.total_bytes} {counts}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    _, extra = resolve_settings(args)
    if not extra.get("project"):
        raise UsageError("evaluate needs --project")
    project = Path(extra["project"])
    if not project.is_dir():
        raise StageError("evaluate", GeneratorError(f"project directory {project} not found"))

    scores, judge_model = None, None
    if extra.get("judge_provider"):
        provider = make_provider(extra["judge_provider"], extra.get("judge_mock_script"), extra)
        task = _stage("validate", load_task, extra["task"], extra.get("task_id")) \
            if extra.get("task") else None
        scores, warnings = _stage("judge", judge_all, project, provider, task=task,
                                  catalog=_catalog(extra))
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        judge_model = getattr(provider, "model", extra["judge_provider"])

    report = _stage("evaluate", evaluation_report, project, scores=scores, judge_model=judge_model)
    text = json.dumps(report, indent=2) + "\n"
    if extra.get("report"):
        Path(extra["report"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_values(raw: str) -> list[float]:
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--values must be comma-separated numbers: {exc}") from exc
    if not values:
        raise UsageError("--values is empty")
    return values


def sweep_config(config: RunConfig, param: str, value: float,
                 dimension: str | None = None) -> RunConfig:
    if param in ("alpha", "beta"):
        return replace(config, **{param: value})
    field_name = "w_min" if param == "wmin" else "impact"
    current = dict(getattr(config, field_name))
    for d in ([dimension] if dimension else current):
        current[d] = value
    return replace(config, **{field_name: current})


def sweep_rows(task, config: RunConfig, param: str, values: Sequence[float], provider_factory,
               *, dimension: str | None = None, catalog=None) -> list[dict[str, Any]]:
    """Run the pipeline once per value with a fresh provider; one row per value."""
    rows = []
    for value in values:
        cfg = sweep_config(config, param, value, dimension)
        _, trace = run_pipeline(task, cfg, provider_factory(), catalog=catalog)
        counts = trace.call_counts()
        rows.append({
            "param_value": value,
            "verification_calls": counts["verification"],
            "rectification_calls": counts["rectification"],
            "total_calls": trace.llm_calls(),
            "proxy_cost": trace.token_cost(),
        })
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    config, extra = resolve_settings(args)
    if not extra.get("task"):
        raise UsageError("sweep needs --task")
    if not extra.get("mock_script"):
        raise UsageError("sweep needs --mock-script")
    values = _parse_values(extra["values"])
    try:
        for v in values:
            sweep_config(config, args.param, v, args.dimension)
    except (ValidationError, TypeError) as exc:
        raise UsageError(f"invalid sweep value: {exc}") from exc
    task = _stage("validate", load_task, extra["task"], extra.get("task_id"))
    rows = _stage(
        "sweep", sweep_rows, task, config, args.param, values,
        lambda: make_provider("mock", extra["mock_script"], extra),
        dimension=args.dimension, catalog=_catalog(extra),
    )

    header = ["param_value", "verification_calls", "rectification_calls", "total_calls",
              "proxy_cost"]
    if extra.get("out"):
        handle = open(extra["out"], "w", encoding="utf-8", newline="")
    else:
        handle = sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if handle is not sys.stdout:
            handle.close()
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"{parser.prog}: {args.command} failed at {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except GeneratorError as exc:
        print(f"{parser.prog}: {args.command} failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
