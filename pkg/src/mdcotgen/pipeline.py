"""Three-tier decomposition: task -> module rationales -> function rationales -> code.

Each tier issues one generation call per unit and runs it through the
self-rectification guard. ``run_pipeline`` chains the tiers and, unless
disabled, hands the assembled project to the backtracker.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

from .backtracker import integrate
from .config import RunConfig
from .errors import GeneratorError, ValidationError
from .models import (
    Dimension,
    FunctionRationale,
    GeneratedFunction,
    ModuleNode,
    ModuleRationale,
    ProjectTree,
    TaskPrompt,
    dedupe_names,
    derive_file_name,
    validate_task_prompt,
)
from .prompts import (
    TemplateCatalog,
    TemplateId,
    extract_code,
    format_function_rationale,
    format_module_rationale,
    format_task_prompt,
    parse_function_rationales,
    parse_module_rationales,
)
from .provider import BUILTIN_PROFILES, ChatProvider, build_provider
from .rectification import guard
from .session import Session
from .trace import RunTrace


def _producer(session: Session, dimension: Dimension, prompt: str, unit: str | None,
              prefetched: tuple[str, dict] | None = None):
    def produce() -> str:
        answer, meta = prefetched if prefetched is not None else session.ask(prompt)
        session.trace.record("Generate", dimension, unit, **meta)
        return answer

    return produce


def decompose_strategic(session: Session, task: TaskPrompt) -> list[ModuleRationale]:
    prompt = session.render(TemplateId.STRATEGIC, prompt=format_task_prompt(task))
    result = guard(
        session, Dimension.STRATEGIC, prompt,
        _producer(session, Dimension.STRATEGIC, prompt, task.id),
        parse_module_rationales, unit=task.id,
    )
    modules = result.value
    names = dedupe_names([m.module_name for m in modules])
    return [replace(m, module_name=n, index=i) for i, (m, n) in enumerate(zip(modules, names))]


def decompose_tactical(session: Session, module: ModuleRationale) -> list[FunctionRationale]:
    prompt = session.render(TemplateId.TACTICAL, module_rationale=format_module_rationale(module))
    result = guard(
        session, Dimension.TACTICAL, prompt,
        _producer(session, Dimension.TACTICAL, prompt, module.module_name),
        lambda text: parse_function_rationales(text, module.module_name),
        unit=module.module_name,
    )
    functions = result.value
    names = dedupe_names([f.function_name for f in functions])
    return [replace(f, function_name=n) for f, n in zip(functions, names)]


def _operational_prompt(session: Session, fr: FunctionRationale) -> str:
    return session.render(
        TemplateId.OPERATIONAL,
        function_rationale=format_function_rationale(fr),
        TaskName=fr.function_name,
        ModuleName=fr.parent_module,
    )


def generate_function(session: Session, fr: FunctionRationale, *,
                      prefetched: tuple[str, dict] | None = None) -> GeneratedFunction:
    prompt = _operational_prompt(session, fr)
    result = guard(
        session, Dimension.OPERATIONAL, prompt,
        _producer(session, Dimension.OPERATIONAL, prompt, fr.unit_id, prefetched),
        extract_code, unit=fr.unit_id,
    )
    return GeneratedFunction(fr, result.value, derive_file_name(fr.function_name,
                                                                session.config.language))


def _generate_module(session: Session, rationales: Sequence[FunctionRationale]) -> list[GeneratedFunction]:
    prefetched: list[tuple[str, dict] | None] = [None] * len(rationales)
    if session.config.parallelism > 1 and len(rationales) > 1:
        # only the first generation call of each unit runs concurrently; the
        # guards (gate draws, weight updates, trace) stay serial in list order
        prompts = [_operational_prompt(session, fr) for fr in rationales]
        with ThreadPoolExecutor(max_workers=session.config.parallelism) as pool:
            prefetched = list(pool.map(session.ask, prompts))
    return [generate_function(session, fr, prefetched=p) for fr, p in zip(rationales, prefetched)]


def default_provider(config: RunConfig) -> ChatProvider:
    if config.provider not in BUILTIN_PROFILES:
        raise ValidationError(
            f"provider {config.provider!r} needs an explicit client (mock runs need a script)"
        )
    profile = BUILTIN_PROFILES[config.provider]
    if config.model:
        profile = replace(profile, model=config.model)
    return build_provider(profile)


def run_pipeline(
    task: TaskPrompt,
    config: RunConfig | None = None,
    provider: ChatProvider | None = None,
    *,
    trace: RunTrace | None = None,
    catalog: TemplateCatalog | None = None,
) -> tuple[ProjectTree, RunTrace]:
    """Generate a whole project for ``task``.

    Any failure is recorded as a fatal ``Error`` event (flushed to the trace
    file when one is attached) and re-raised.
    """
    config = config or RunConfig()
    session = Session(provider or default_provider(config), config, trace=trace, catalog=catalog)
    stage = "validate"
    try:
        validate_task_prompt(task)
        stage = Dimension.STRATEGIC.value
        modules = decompose_strategic(session, task)

        stage = Dimension.TACTICAL.value
        plans = [(m, decompose_tactical(session, m)) for m in modules]

        stage = Dimension.OPERATIONAL.value
        nodes = []
        for module, rationales in plans:
            functions = _generate_module(session, rationales)
            nodes.append(ModuleNode(module.module_name, tuple(functions), None, module))
        project = ProjectTree(tuple(nodes))

        if config.backtracking:
            stage = "integrate"
            project = integrate(session, project).project
    except GeneratorError as exc:
        session.trace.record(
            "Error", None, None, error=type(exc).__name__, message=str(exc), stage=stage,
            fatal=True,
        )
        raise
    return project, session.trace
