import json

import pytest

from mdcotgen.assembler import (
    MANIFEST_NAME,
    TRACE_NAME,
    Manifest,
    check_manifest,
    project_layout,
    read_manifest,
    write_project,
)
from mdcotgen.config import RunConfig
from mdcotgen.errors import NonEmptyTarget
from mdcotgen.models import ProjectTree, TaskPrompt
from mdcotgen.pipeline import run_pipeline
from mdcotgen.provider import MockProvider, parse_mock_script

from fixtures import CLI, TASK, sample_script_records, to_jsonl


@pytest.fixture(scope="module")
def sample_run():
    mock = MockProvider(parse_mock_script(to_jsonl(sample_script_records())))
    return run_pipeline(TaskPrompt.from_dict(TASK), RunConfig(w_initial=0.0, w_min=0.0), mock)


def test_layout_has_one_file_per_function_and_merged_files(sample_run):
    project, _ = sample_run
    layout = project_layout(project)
    assert f"{CLI}/handleInput.py" in layout
    assert f"{CLI}/ModuleMerged.py" in layout
    assert len(layout) == 7 + 3
    assert all(text.endswith("\n") for text in layout.values())


def test_write_project_manifest(tmp_path, sample_run):
    project, trace = sample_run
    manifest = write_project(project, tmp_path / "out", trace=trace, project_id="pm",
                             created_at="2026-01-01T00:00:00+00:00")
    assert manifest.call_counts["generation"] == 11
    on_disk = read_manifest(tmp_path / "out")
    assert on_disk == manifest
    assert on_disk.total_bytes == sum(
        p.stat().st_size for p in (tmp_path / "out").rglob("*.py"))
    assert check_manifest(tmp_path / "out") == []
    data = json.loads((tmp_path / "out" / MANIFEST_NAME).read_text(encoding="utf-8"))
    assert set(data) == {"project_id", "created_at", "config", "files", "call_counts"}


def test_manifest_bytes_identical_for_fixed_timestamp(tmp_path, sample_run):
    project, trace = sample_run
    stamp = "2026-01-01T00:00:00+00:00"
    write_project(project, tmp_path / "a", trace=trace, project_id="pm", created_at=stamp)
    write_project(project, tmp_path / "b", trace=trace, project_id="pm", created_at=stamp)
    assert (tmp_path / "a" / MANIFEST_NAME).read_bytes() == (tmp_path / "b" / MANIFEST_NAME).read_bytes()


def test_check_manifest_reports_edits(tmp_path, sample_run):
    project, trace = sample_run
    write_project(project, tmp_path, trace=trace)
    (tmp_path / CLI / "handleInput.py").write_text("changed\n", encoding="utf-8")
    (tmp_path / CLI / "executeCommand.py").unlink()
    assert sorted(check_manifest(tmp_path)) == [
        f"{CLI}/executeCommand.py: missing", f"{CLI}/handleInput.py: content differs"]


def test_non_empty_target(tmp_path, sample_run):
    project, _ = sample_run
    (tmp_path / "keep.txt").write_text("x", encoding="utf-8")
    with pytest.raises(NonEmptyTarget):
        write_project(project, tmp_path)
    write_project(project, tmp_path, force=True)
    assert (tmp_path / "keep.txt").exists()


def test_existing_trace_is_not_an_obstacle(tmp_path, sample_run):
    project, _ = sample_run
    (tmp_path / TRACE_NAME).write_text("", encoding="utf-8")
    write_project(project, tmp_path)
    assert (tmp_path / MANIFEST_NAME).is_file()


def test_empty_project_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_project(ProjectTree(), tmp_path)


def test_manifest_from_dict_fills_missing_counts():
    m = Manifest.from_dict({"project_id": "p", "created_at": "t", "files": []})
    assert m.call_counts == {k: 0 for k in m.call_counts} and len(m.call_counts) == 5
