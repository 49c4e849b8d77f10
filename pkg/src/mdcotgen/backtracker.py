"""Dynamic backtracking: merge modules, detect conflicts, have the LLM revise
the affected units, and repeat until a full pass is clean.

Conflict detection is two-tier. A deterministic identifier-level scan runs
first; when ``llm_conflict_detection`` is enabled and the scan is clean the
model is asked as well.
"""

from __future__ import annotations

import builtins
import keyword
import re
import textwrap
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import EmptySource, MissingRevision
from .models import (
    ConflictKind,
    ConflictReport,
    ConflictScope,
    GeneratedFunction,
    ModuleNode,
    ProjectTree,
    sanitize_dir_name,
)
from .prompts import (
    TemplateId,
    format_function_rationale,
    parse_conflict_json,
    parse_revised_sources,
)
from .trace import text_hash

if TYPE_CHECKING:
    from .session import Session


# -- identifier-level source analysis -----------------------------------------

_STRINGS = re.compile(
    r'''(?:\b[rRbBuUfF]{1,2})?(?:"""[\s\S]*?"""|\'\'\'[\s\S]*?\'\'\'|"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*'|`(?:\\.|[^`\\])*`)'''
)
_DEF = re.compile(
    r"^(?P<indent>[ \t]*)(?:@\w[^\n]*\n[ \t]*)*(?:(?:async|export|pub|public|private|static)[ \t]+)*"
    r"(?:def|class|function|func|fn)[ \t]+(?P<name>[A-Za-z_]\w*)",
    re.MULTILINE,
)
_DEF_HEAD = re.compile(r"\b(?:def|class|function|func|fn)[ \t]+[A-Za-z_]\w*")
_PARAMS = re.compile(r"\b(?:def|function|func|fn)[ \t]+\w+[ \t]*\((?P<params>[^)]*)\)")
_LAMBDA = re.compile(r"\blambda\b(?P<params>[^:]*):")
_ASSIGN = re.compile(r"(?<![\w.])(?P<names>[A-Za-z_]\w*(?:[ \t]*,[ \t]*[A-Za-z_]\w*)*)[ \t]*(?::[^=\n]+)?=(?!=)")
_FOR = re.compile(r"\bfor[ \t]+\(?(?P<names>[\w \t,]+?)\)?[ \t]+in\b")
_AS = re.compile(r"\bas[ \t]+(?P<name>[A-Za-z_]\w*)")
_DECLARE = re.compile(r"\b(?:global|nonlocal|let|var|const)[ \t]+(?P<names>[\w \t,]+)")
_IMPORT = re.compile(r"^[ \t]*import[ \t]+(?P<names>[^\n;]+)", re.MULTILINE)
_FROM_IMPORT = re.compile(
    r"^[ \t]*from[ \t]+\S+[ \t]+import[ \t]+(?P<names>\([^)]*\)|[^\n;]+)", re.MULTILINE
)
_CALL = re.compile(r"(?<![\w.])(?P<name>[A-Za-z_]\w*)[ \t]*\(")
_IDENT = re.compile(r"[A-Za-z_]\w*")

_ALWAYS_KNOWN = (
    set(dir(builtins))
    | set(keyword.kwlist)
    | {"self", "cls", "print", "super", "if", "elif", "while", "for", "return", "switch",
       "catch", "sizeof", "typeof", "new", "await", "yield", "not", "and", "or", "in", "is"}
)


def normalize_name(name: str) -> str:
    """Case- and separator-insensitive identity, so checkPermission == check_permission."""
    return re.sub(r"[^0-9a-z]", "", name.lower())


def _blank_strings_and_comments(source: str, comment_prefix: str = "#") -> str:
    def keep_lines(m: re.Match) -> str:
        return '""' + "\n" * m.group(0).count("\n")

    text = _STRINGS.sub(keep_lines, source)
    comment = re.compile(re.escape(comment_prefix) + r"[^\n]*")
    return comment.sub("", text)


@dataclass(frozen=True)
class SourceFacts:
    top_level: tuple[str, ...]
    defined: frozenset[str]
    imported: frozenset[str]
    local: frozenset[str]
    calls: tuple[str, ...]
    star_import: bool = False


def analyze_source(source: str, comment_prefix: str = "#") -> SourceFacts:
    """Definitions, imports, local bindings and call sites of one unit's source."""
    code = _blank_strings_and_comments(textwrap.dedent(source), comment_prefix)

    top_level, defined = [], set()
    for m in _DEF.finditer(code):
        defined.add(m.group("name"))
        if not m.group("indent") and m.group("name") not in top_level:
            top_level.append(m.group("name"))

    imported, star = set(), False
    for m in _IMPORT.finditer(code):
        for part in m.group("names").split(","):
            words = part.split()
            if not words:
                continue
            if len(words) >= 3 and words[1] == "as":
                imported.add(words[2])
            else:
                imported.add(words[0].split(".")[0])
    for m in _FROM_IMPORT.finditer(code):
        names = m.group("names").strip("() \t\n")
        for part in names.split(","):
            words = part.split()
            if not words:
                continue
            if words[0] == "*":
                star = True
            elif len(words) >= 3 and words[1] == "as":
                imported.add(words[2])
            else:
                imported.add(words[0])

    local = set()
    for pattern in (_PARAMS, _LAMBDA):
        for m in pattern.finditer(code):
            local.update(_IDENT.findall(m.group("params")))
    for pattern in (_ASSIGN, _FOR, _DECLARE):
        for m in pattern.finditer(code):
            local.update(_IDENT.findall(m.group("names")))
    local.update(m.group("name") for m in _AS.finditer(code))

    calls = []
    for m in _CALL.finditer(_DEF_HEAD.sub(" ", code)):
        name = m.group("name")
        if name not in calls:
            calls.append(name)

    return SourceFacts(
        tuple(top_level), frozenset(defined), frozenset(imported), frozenset(local),
        tuple(calls), star,
    )


def _unresolved(facts: SourceFacts, known: set[str]) -> list[str]:
    if facts.star_import:
        return []
    bound = known | facts.defined | facts.imported | facts.local | _ALWAYS_KNOWN
    return [c for c in facts.calls if c not in bound]


class _Findings:
    """Accumulates flags into a single report for one scope."""

    def __init__(self):
        self.conflicts: list[str] = []
        self.affected: list[str] = []
        self.kinds: list[ConflictKind] = []
        self.notes: list[str] = []

    def add(self, kind: ConflictKind, conflicts: Iterable[str], affected: Iterable[str],
            note: str) -> None:
        for u in conflicts:
            if u not in self.conflicts:
                self.conflicts.append(u)
        for u in affected:
            if u not in self.affected:
                self.affected.append(u)
        if kind not in self.kinds:
            self.kinds.append(kind)
        self.notes.append(note)

    def report(self, scope: ConflictScope) -> ConflictReport | None:
        if not self.conflicts:
            return None
        return ConflictReport(
            scope, tuple(self.conflicts), tuple(self.affected), tuple(self.kinds),
            "\n".join(self.notes),
        )


def _duplicate_flags(findings: _Findings, holders: dict[str, list[GeneratedFunction]],
                     where: str) -> None:
    for name, fns in holders.items():
        if len(fns) < 2:
            continue
        owners = [f for f in fns if normalize_name(f.rationale.function_name) == normalize_name(name)]
        keep = owners[0] if owners else fns[0]
        findings.add(
            ConflictKind.DUPLICATE_DEFINITION,
            [f.unit_id for f in fns],
            [f.unit_id for f in fns if f is not keep],
            f"{name!r} is defined {len(fns)} times {where}: "
            + ", ".join(f.unit_id for f in fns),
        )


def _module_flags(findings: _Findings, node: ModuleNode, known: set[str],
                  comment_prefix: str) -> None:
    facts = {fn.unit_id: analyze_source(fn.source, comment_prefix) for fn in node.functions}

    holders: dict[str, list[GeneratedFunction]] = defaultdict(list)
    for fn in node.functions:
        for name in facts[fn.unit_id].top_level:
            holders[name].append(fn)
    _duplicate_flags(findings, holders, f"in module {node.name!r}")

    for fn in node.functions:
        wanted = normalize_name(fn.rationale.function_name)
        if not any(normalize_name(n) == wanted for n in facts[fn.unit_id].top_level):
            findings.add(
                ConflictKind.DEPENDENCY_MISMATCH,
                [fn.unit_id],
                [fn.unit_id],
                f"{fn.unit_id} does not define {fn.rationale.function_name!r}",
            )

    for fn in node.functions:
        missing = _unresolved(facts[fn.unit_id], known)
        if missing:
            findings.add(
                ConflictKind.UNRESOLVED_REFERENCE,
                [fn.unit_id],
                [fn.unit_id],
                f"{fn.unit_id} calls undefined name(s): {', '.join(missing)}",
            )


def _project_definitions(project: ProjectTree, comment_prefix: str) -> set[str]:
    names = set()
    for fn in project.functions():
        names.update(analyze_source(fn.source, comment_prefix).defined)
    return names


def _cross_module_flags(findings: _Findings, project: ProjectTree, comment_prefix: str) -> None:
    holders: dict[str, list[GeneratedFunction]] = defaultdict(list)
    for node in project.modules:
        seen_here: set[str] = set()
        for fn in node.functions:
            for name in analyze_source(fn.source, comment_prefix).top_level:
                if name not in seen_here:
                    seen_here.add(name)
                    holders[name].append(fn)
    cross = {
        name: fns for name, fns in holders.items()
        if len({f.parent_module for f in fns}) > 1
    }
    _duplicate_flags(findings, cross, "across modules")


def detect_conflicts_static(scope: ModuleNode | ProjectTree, *,
                            context: ProjectTree | None = None,
                            comment_prefix: str = "#",
                            module_checks: bool = True) -> ConflictReport | None:
    """Identifier-level conflict scan.

    For a module: duplicate top-level definitions, units that do not define
    their rationale's function (DependencyMismatch), and call sites bound by
    nothing in ``context`` (defaults to the module alone), the unit's imports,
    its locals or the language builtins. For a project: the module checks for
    every module (unless ``module_checks`` is False) plus top-level names
    defined in more than one module.
    """
    findings = _Findings()
    if isinstance(scope, ModuleNode):
        known = _project_definitions(context or ProjectTree((scope,)), comment_prefix)
        _module_flags(findings, scope, known, comment_prefix)
        return findings.report(ConflictScope.MODULE)

    if module_checks:
        known = _project_definitions(scope, comment_prefix)
        for node in scope.modules:
            _module_flags(findings, node, known, comment_prefix)
    _cross_module_flags(findings, scope, comment_prefix)
    return findings.report(ConflictScope.PROJECT)


# -- LLM-assisted detection and resolution ------------------------------------


def file_key(fn: GeneratedFunction) -> str:
    return f"{sanitize_dir_name(fn.parent_module)}/{fn.file_name}"


def _units_in(scope: ModuleNode | ProjectTree) -> list[GeneratedFunction]:
    return list(scope.functions) if isinstance(scope, ModuleNode) else scope.functions()


def _source_block(fn: GeneratedFunction) -> str:
    return f"Unit: {fn.unit_id}\nFile: {file_key(fn)}\n```\n{fn.source.rstrip()}\n```"


def _scope_label(scope: ModuleNode | ProjectTree) -> str:
    if isinstance(scope, ModuleNode):
        return f"module {scope.name}"
    return "project"


def detect_conflicts_llm(session: "Session", scope: ModuleNode | ProjectTree,
                         context: Sequence | None = None, *,
                         project: ProjectTree | None = None,
                         step: int | None = None) -> ConflictReport | None:
    units = _units_in(scope)
    if context is None:
        context = [fn.rationale for fn in units]
    rationales = "\n\n".join(
        format_function_rationale(r) if hasattr(r, "function_name") else str(r) for r in context
    )
    sources = "\n\n".join(_source_block(fn) for fn in units)
    prompt = session.render(
        TemplateId.CONFLICT_DETECT, scope=_scope_label(scope), rationales=rationales,
        sources=sources,
    )
    answer, meta = session.ask(prompt)
    level = ConflictScope.MODULE if isinstance(scope, ModuleNode) else ConflictScope.PROJECT
    unit = scope.name if isinstance(scope, ModuleNode) else None
    base = dict(meta, method="llm", scope=level.value, step=step)

    doc = parse_conflict_json(answer)
    if doc is None:
        session.trace.record("ConflictDetect", None, unit, **base, found=False,
                             warning="NoJsonFound: answer treated as conflict-free")
        return None

    known = (project or (ProjectTree((scope,)) if isinstance(scope, ModuleNode) else scope)).unit_ids()
    warnings = []

    def ids(key: str) -> list[str]:
        raw = doc.get(key) or []
        if not isinstance(raw, list):
            raw = [raw]
        out = []
        for item in raw:
            item = str(item)
            if item in known:
                out.append(item)
            else:
                warnings.append(f"unknown unit id {item!r} in {key!r}")
        return out

    conflicts = ids("conflicts")
    affected = ids("affected") or list(conflicts)
    kinds = []
    for k in doc.get("kinds") or []:
        try:
            kinds.append(ConflictKind(k))
        except ValueError:
            warnings.append(f"unknown conflict kind {k!r}")
    report = None
    if conflicts:
        report = ConflictReport(level, tuple(conflicts), tuple(affected), tuple(kinds),
                                str(doc.get("description", "")))
    payload = dict(base, found=report is not None)
    if report is not None:
        payload.update(conflicts=list(report.conflict_set), affected=list(report.affected_set),
                       kinds=[k.value for k in report.kinds])
    if warnings:
        payload["warning"] = "; ".join(warnings)
    session.trace.record("ConflictDetect", None, unit, **payload)
    return report


def _expand(ids: Iterable[str], project: ProjectTree) -> list[GeneratedFunction]:
    out: list[GeneratedFunction] = []
    for uid in ids:
        if "/" in uid:
            try:
                fns = [project.function(uid)]
            except KeyError:
                continue
        else:
            try:
                fns = list(project.module(uid).functions)
            except KeyError:
                continue
        for fn in fns:
            if fn not in out:
                out.append(fn)
    return out


def _lookup_revision(revised: dict[str, str], fn: GeneratedFunction,
                     others: Sequence[GeneratedFunction]) -> str | None:
    for key in (file_key(fn), fn.unit_id):
        if key in revised:
            return revised[key]
    # bare file or function name, only when unambiguous among the affected units
    for key, alias in ((fn.file_name, lambda g: g.file_name),
                       (fn.rationale.function_name, lambda g: g.rationale.function_name)):
        if key in revised and sum(1 for g in others if alias(g) == key) == 1:
            return revised[key]
    return None


def resolve(session: "Session", conflict: ConflictReport | None,
            scope: ModuleNode | ProjectTree, *, project: ProjectTree | None = None,
            step: int | None = None) -> dict[str, GeneratedFunction]:
    """Ask the model to rewrite the affected units; returns unit id -> revised unit."""
    if conflict is None or not conflict.conflict_set:
        raise ValueError("resolve() needs a non-empty conflict report")
    project = project or (ProjectTree((scope,)) if isinstance(scope, ModuleNode) else scope)
    affected = _expand(conflict.affected_set or conflict.conflict_set, project)
    if not affected:
        raise ValueError("conflict report names no resolvable affected unit")
    in_conflict = _expand(conflict.conflict_set, project)

    prompt = session.render(
        TemplateId.CONFLICT_RESOLVE,
        scope=_scope_label(scope),
        description=conflict.description or ", ".join(k.value for k in conflict.kinds),
        conflict_sources="\n\n".join(_source_block(fn) for fn in in_conflict),
        affected_sources="\n\n".join(_source_block(fn) for fn in affected),
        file_names=", ".join(file_key(fn) for fn in affected),
    )
    answer, meta = session.ask(prompt)
    revised_text = parse_revised_sources(answer)

    out: dict[str, GeneratedFunction] = {}
    for fn in affected:
        new_source = _lookup_revision(revised_text, fn, affected)
        if new_source is None or not new_source.strip():
            session.trace.record(
                "Error", None, fn.unit_id, error="MissingRevision", fatal=True,
                file=file_key(fn),
            )
            raise MissingRevision(file_key(fn))
        out[fn.unit_id] = fn.revised(new_source)

    session.trace.record(
        "ConflictResolve",
        None,
        scope.name if isinstance(scope, ModuleNode) else None,
        **meta,
        scope=conflict.scope.value,
        step=step,
        revised={
            uid: {
                "before": text_hash(project.function(uid).source),
                "after": text_hash(fn.source),
                "revision": fn.revision,
            }
            for uid, fn in out.items()
        },
    )
    return out


# -- merge and integrate ------------------------------------------------------


def merge_module(node: ModuleNode, comment_prefix: str = "#") -> ModuleNode:
    """Concatenate unit sources in rationale order under a header comment."""
    if not node.functions:
        raise EmptySource(f"module {node.name!r} has no functions to merge")
    header = f"{comment_prefix} {node.name} (merged module)"
    bodies = [fn.source.strip("\n") for fn in node.functions]
    merged = "\n\n".join([header, *bodies]) + "\n"
    return replace(node, merged_source=merged)


@dataclass
class IntegrationState:
    max_iterations: int
    function_stack: list[ModuleNode] = field(default_factory=list)
    module_stack: list[list[ModuleNode]] = field(default_factory=list)
    step: int = 0


@dataclass(frozen=True)
class IntegrationResult:
    project: ProjectTree
    steps: int
    converged: bool
    resolutions: int
    state: IntegrationState


def _apply(project: ProjectTree, revised: dict[str, GeneratedFunction]) -> ProjectTree:
    for fn in revised.values():
        project = project.with_function(fn)
    return project


def _detect(session: "Session", scope, project: ProjectTree, step: int) -> ConflictReport | None:
    prefix = session.config.comment_prefix
    if isinstance(scope, ModuleNode):
        report = detect_conflicts_static(scope, context=project, comment_prefix=prefix)
        level, unit = ConflictScope.MODULE, scope.name
    else:
        report = detect_conflicts_static(scope, comment_prefix=prefix, module_checks=False)
        level, unit = ConflictScope.PROJECT, None
    payload = dict(method="static", scope=level.value, step=step, found=report is not None)
    if report is not None:
        payload.update(conflicts=list(report.conflict_set), affected=list(report.affected_set),
                       kinds=[k.value for k in report.kinds])
    session.trace.record("ConflictDetect", None, unit, **payload)
    if report is None and session.config.llm_conflict_detection:
        report = detect_conflicts_llm(session, scope, project=project, step=step)
    return report


def integrate(session: "Session", project: ProjectTree) -> IntegrationResult:
    """Iterate module-level then project-level detect/resolve passes.

    Stops after the first pass that finds no conflict, or after
    ``max_backtrack_iterations`` passes (recorded as a non-fatal
    NonConvergence error event).
    """
    if not project.modules:
        raise ValueError("cannot integrate an empty project")
    prefix = session.config.comment_prefix
    state = IntegrationState(session.config.max_backtrack_iterations)
    resolutions = 0
    converged = False

    while True:
        step = state.step + 1
        found = 0
        module_set: list[ModuleNode] = []
        for name in [m.name for m in project.modules]:
            node = merge_module(project.module(name), prefix)
            state.function_stack.append(node)
            project = project.with_module(node)
            report = _detect(session, node, project, step)
            if report is not None:
                found += 1
                project = _apply(project, resolve(session, report, node, project=project, step=step))
                resolutions += 1
                node = merge_module(project.module(name), prefix)
                project = project.with_module(node)
            module_set.append(node)
        state.module_stack.append(module_set)

        report = _detect(session, project, project, step)
        if report is not None:
            found += 1
            revised = resolve(session, report, project, project=project, step=step)
            resolutions += 1
            project = _apply(project, revised)
            for module in {fn.parent_module for fn in revised.values()}:
                project = project.with_module(merge_module(project.module(module), prefix))

        state.step = step
        # stacks only record the work of the pass that just finished
        state.function_stack.clear()
        state.module_stack.clear()
        if found == 0:
            converged = True
            break
        if state.step >= state.max_iterations:
            session.trace.record(
                "Error", None, None, error="NonConvergence", fatal=False, steps=state.step,
            )
            break

    return IntegrationResult(project, state.step, converged, resolutions, state)
