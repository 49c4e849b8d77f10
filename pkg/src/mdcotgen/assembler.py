"""Write a generated project to disk together with its manifest."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .config import RunConfig
from .errors import NonEmptyTarget, ProjectIOError
from .models import ProjectTree, sanitize_dir_name
from .trace import CALL_COUNT_KINDS, RunTrace

MANIFEST_NAME = "manifest.json"
TRACE_NAME = "trace.jsonl"
MERGED_STEM = "ModuleMerged"


@dataclass(frozen=True)
class Manifest:
    project_id: str
    created_at: str
    config: dict[str, Any]
    files: tuple[dict[str, Any], ...]
    call_counts: dict[str, int] = field(
        default_factory=lambda: {k: 0 for k in CALL_COUNT_KINDS}
    )

    @property
    def total_bytes(self) -> int:
        return sum(f["bytes"] for f in self.files)

    def to_dict(self) -> dict[str, Any]:
        return {
            "project_id": self.project_id,
            "created_at": self.created_at,
            "config": self.config,
            "files": [dict(f) for f in self.files],
            "call_counts": dict(self.call_counts),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Manifest":
        return cls(
            data["project_id"],
            data["created_at"],
            dict(data.get("config") or {}),
            tuple(dict(f) for f in data["files"]),
            {k: int(data.get("call_counts", {}).get(k, 0)) for k in CALL_COUNT_KINDS},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def read_manifest(project_dir: str | os.PathLike) -> Manifest:
    path = Path(project_dir) / MANIFEST_NAME
    try:
        return Manifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except OSError as exc:
        raise ProjectIOError(path, exc) from exc


def project_layout(tree: ProjectTree, extension: str = ".py") -> dict[str, str]:
    """Relative path -> file content for every source file of ``tree``."""
    files: dict[str, str] = {}
    for node in tree.modules:
        folder = sanitize_dir_name(node.name)
        for fn in node.functions:
            files[f"{folder}/{fn.file_name}"] = _with_newline(fn.source)
        if node.merged_source is not None:
            files[f"{folder}/{MERGED_STEM}{extension}"] = _with_newline(node.merged_source)
    return files


def _with_newline(text: str) -> str:
    return text if text.endswith("\n") else text + "\n"


def _build_time() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (datetime.fromtimestamp(int(epoch), timezone.utc) if epoch
              else datetime.now(timezone.utc))
    return moment.isoformat(timespec="seconds")


def _check_target(out: Path, force: bool) -> None:
    if not out.exists():
        return
    if not out.is_dir():
        raise NonEmptyTarget(out)
    # a trace written by the same run may already sit in the target
    leftovers = [p for p in out.iterdir() if p.name != TRACE_NAME]
    if leftovers and not force:
        raise NonEmptyTarget(out)


def write_project(
    tree: ProjectTree,
    out_dir: str | os.PathLike,
    *,
    config: RunConfig | None = None,
    trace: RunTrace | None = None,
    project_id: str | None = None,
    created_at: str | None = None,
    force: bool = False,
) -> Manifest:
    """Create one directory per module, one file per function, plus a merged
    file where the module has been merged, then write ``manifest.json``.

    ``created_at`` defaults to ``$SOURCE_DATE_EPOCH`` when set, else the
    current UTC time; fix either one when byte-identical manifests are needed
    across runs.
    """
    if not tree.modules or not tree.functions():
        raise ValueError("cannot write an empty project")
    config = config or RunConfig()
    out = Path(out_dir)
    _check_target(out, force)

    entries = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for rel, text in project_layout(tree, config.extension).items():
            data = text.encode("utf-8")
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            entries.append({
                "path": rel,
                "bytes": len(data),
                "sha256": hashlib.sha256(data).hexdigest(),
            })
    except OSError as exc:
        raise ProjectIOError(getattr(exc, "filename", None) or out, exc) from exc

    manifest = Manifest(
        project_id=project_id or out.name,
        created_at=created_at or _build_time(),
        config=config.to_dict(),
        files=tuple(entries),
        call_counts=trace.call_counts() if trace is not None else {k: 0 for k in CALL_COUNT_KINDS},
    )
    target = out / MANIFEST_NAME
    try:
        target.write_text(manifest.to_json(), encoding="utf-8")
    except OSError as exc:
        raise ProjectIOError(target, exc) from exc
    return manifest


def check_manifest(project_dir: str | os.PathLike, manifest: Manifest | None = None) -> list[str]:
    """Files whose on-disk size or digest disagrees with the manifest."""
    root = Path(project_dir)
    manifest = manifest or read_manifest(root)
    problems = []
    for entry in manifest.files:
        path = root / entry["path"]
        if not path.is_file():
            problems.append(f"{entry['path']}: missing")
            continue
        data = path.read_bytes()
        if len(data) != entry["bytes"] or hashlib.sha256(data).hexdigest() != entry["sha256"]:
            problems.append(f"{entry['path']}: content differs")
    return problems
