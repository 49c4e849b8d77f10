"""Paths to the bundled sample task and its mock-provider script."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _data(name: str) -> Path:
    return Path(str(resources.files("mdcotgen") / "data" / name))


def sample_task_path() -> Path:
    """A project-management CLI task in dataset record format."""
    return _data("project_manager_task.json")


def sample_script_path() -> Path:
    """Mock script answering every call of a run of the sample task
    (3 modules, 7 functions, one conflict resolution) with gates off."""
    return _data("project_manager_script.jsonl")


def sample_sweep_script_path() -> Path:
    """Mock script for the sample task with rectification live: every
    function's first review fails and its rectified version passes."""
    return _data("project_manager_sweep_script.jsonl")
