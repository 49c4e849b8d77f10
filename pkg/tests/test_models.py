import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdcotgen.errors import DuplicateId, EmptyKeyFeatures, EmptyTaskDefinition, ValidationError
from mdcotgen.models import (
    ConflictKind,
    ConflictReport,
    ConflictScope,
    Dimension,
    DimensionWeightState,
    FunctionRationale,
    GeneratedFunction,
    ModuleNode,
    ModuleRationale,
    ProjectTree,
    TaskPrompt,
    dedupe_names,
    derive_file_name,
    plain,
    sanitize_dir_name,
    validate_dataset,
    validate_task_prompt,
)

from fixtures import TASK


def fn(module, name, source="def f():\n    pass"):
    return GeneratedFunction(FunctionRationale(name, "does things", module), source,
                             derive_file_name(name))


def test_dimension_order():
    assert Dimension.STRATEGIC < Dimension.TACTICAL < Dimension.OPERATIONAL
    assert sorted([Dimension.OPERATIONAL, Dimension.STRATEGIC]) == [
        Dimension.STRATEGIC, Dimension.OPERATIONAL]


def test_task_prompt_round_trip():
    task = TaskPrompt.from_dict(TASK)
    assert TaskPrompt.from_dict(json.loads(json.dumps(task.to_dict()))) == task
    assert validate_task_prompt(task) is task


@pytest.mark.parametrize("change, error", [
    ({"task_definition": "   "}, EmptyTaskDefinition),
    ({"key_features": ["", "  "]}, EmptyKeyFeatures),
])
def test_validate_task_prompt_rejects(change, error):
    with pytest.raises(error):
        validate_task_prompt(TaskPrompt.from_dict(TASK | change))


@pytest.mark.parametrize("change", [
    {"category": "Spreadsheet"},
    {"key_features": "one string"},
])
def test_from_dict_rejects_bad_fields(change):
    with pytest.raises(ValidationError):
        TaskPrompt.from_dict(TASK | change)


def test_from_dict_reports_missing_fields():
    with pytest.raises(ValidationError, match="key_features"):
        TaskPrompt.from_dict({k: v for k, v in TASK.items() if k != "key_features"})


def test_validate_dataset_duplicate_id():
    task = TaskPrompt.from_dict(TASK)
    with pytest.raises(DuplicateId):
        validate_dataset([task, task])


def test_sanitize_and_file_names():
    assert sanitize_dir_name("Command-Line Interface (CLI)") == "Command-Line Interface (CLI)"
    assert sanitize_dir_name("Input/Output") == "Input_Output"
    assert sanitize_dir_name("..") == "__"
    assert derive_file_name("AddTask") == "AddTask.py"
    assert derive_file_name("add task", "javascript") == "add_task.js"
    with pytest.raises(ValidationError):
        derive_file_name("x", "cobol")


def test_module_node_invariants():
    with pytest.raises(ValidationError, match="does not belong"):
        ModuleNode("A", (fn("B", "x"),))
    with pytest.raises(ValidationError, match="duplicate file name"):
        ModuleNode("A", (fn("A", "x"), fn("A", "x")))


def test_project_tree_lookup_and_replace():
    tree = ProjectTree((ModuleNode("A", (fn("A", "x"), fn("A", "y"))),))
    assert tree.unit_ids() == {"A", "A/x", "A/y"}
    new = tree.function("A/x").revised("def x():\n    return 1")
    updated = tree.with_function(new)
    assert updated.function("A/x").revision == 1
    assert tree.function("A/x").revision == 0
    assert ProjectTree.from_dict(json.loads(json.dumps(updated.to_dict()))) == updated
    with pytest.raises(ValidationError):
        ProjectTree((ModuleNode("A"), ModuleNode("A")))


def test_generated_function_requires_source():
    with pytest.raises(ValidationError):
        fn("A", "x", source="   ")


def test_conflict_report():
    tree = ProjectTree((ModuleNode("A", (fn("A", "x"),)),))
    report = ConflictReport("ModuleLevel", ["A/x"], ["A/x", "A/ghost"],
                            ["DuplicateDefinition"])
    assert report.scope is ConflictScope.MODULE
    assert report.kinds == (ConflictKind.DUPLICATE_DEFINITION,)
    assert report.unresolved_ids(tree) == ["A/ghost"]
    assert ConflictReport.from_dict(report.to_dict()) == report
    with pytest.raises(ValidationError):
        ConflictReport("ModuleLevel", [], [])


@pytest.mark.parametrize("kwargs", [
    {"w_current": 1.5}, {"w_min": -0.1}, {"impact": -1}, {"freq": -1}, {"freq": 1.5},
    {"alpha": 1.0}, {"beta": 0},
])
def test_weight_state_ranges(kwargs):
    with pytest.raises(ValidationError):
        DimensionWeightState(Dimension.TACTICAL, **kwargs)


def test_weight_state_round_trip():
    state = DimensionWeightState("operational", 0.7, 0.5, 3.0, 2, 0.1, 1.2)
    assert DimensionWeightState.from_dict(state.to_dict()) == state


@given(st.lists(st.sampled_from(["a", "b", "a 2", "c"]), max_size=8))
def test_dedupe_names_unique_and_stable(names):
    out = dedupe_names(names)
    assert len(out) == len(names)
    assert len(set(out)) == len(out)
    first = {}
    for original, new in zip(names, out):
        first.setdefault(original, new)
    assert all(first[n] == n for n in first)


def test_dedupe_names_suffixes():
    assert dedupe_names(["Core", "Core", "Core 2"]) == ["Core", "Core 3", "Core 2"]


def test_plain_converts_nested_values():
    data = {Dimension.TACTICAL: [ModuleRationale("M", "r"), (ConflictKind.LOGICAL_INCONSISTENCY,)]}
    assert plain(data) == {
        "tactical": [{"module_name": "M", "responsibility": "r", "index": 0},
                     ["LogicalInconsistency"]]
    }
