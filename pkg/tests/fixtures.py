"""Scripted fixtures shared by the test-suite.

``sample_script_records()`` is the source of truth for the bundled
``data/project_manager_script.jsonl``; a test checks that the two agree, and
``python tests/fixtures.py`` regenerates the file.
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "mdcotgen" / "data"
SCRIPT_FILE = DATA_DIR / "project_manager_script.jsonl"
SWEEP_SCRIPT_FILE = DATA_DIR / "project_manager_sweep_script.jsonl"
TASK_FILE = DATA_DIR / "project_manager_task.json"

AUTH = "Authorization and Access Control"
CLI = "Command-Line Interface (CLI)"
TASKS = "Task Management"

MODULES = [
    (AUTH, "Checks user roles against the actions they request and blocks the ones they may not perform."),
    (CLI, "Reads commands typed by the user and dispatches them to the matching handler."),
    (TASKS, "Creates tasks and persists the task list to a local JSON file."),
]

FUNCTIONS = {
    AUTH: [
        ("checkPermission", "Decide whether a role may perform an action on a resource type."),
        ("denyUnauthorizedAccess", "Raise PermissionError when the user's role is not the required one."),
    ],
    CLI: [
        ("handleInput", "Parse the raw command line typed by the user."),
        ("executeCommand", "Look up the handler registered for a command and run it."),
    ],
    TASKS: [
        ("AddTask", "Validate a description and append a new task to the stored list."),
        ("loadTasks", "Read the task list from tasks.json, returning an empty list when absent."),
        ("saveTasks", "Write the task list to tasks.json."),
    ],
}

SOURCES = {
    "checkPermission": '''\
def check_permission(user_role, action, resource_type, resource_id=None):
    """
    Check if the user with the given role has permission to perform the specified action on the resource.

    Returns:
    - bool: True if the user has permission, False otherwise
    """
    allowed_permissions = {
        'project': {
            'Admin': ['createProject', 'updateProject', 'deleteProject', 'listProjects'],
            'Regular User': ['viewProjectProgress']
        },
        'task': {
            'Admin': ['createTask', 'updateTask', 'assignTask', 'trackTaskProgress'],
            'Regular User': ['assignTask', 'viewTaskProgress']
        }
    }

    if user_role not in allowed_permissions[resource_type]:
        return False

    if action not in allowed_permissions[resource_type][user_role]:
        return False

    # If resource_id is required and not provided, deny access
    if resource_id is not None and resource_id < 1:
        return False

    return True''',
    "denyUnauthorizedAccess": '''\
def deny_unauthorized_access(action: str, user_role: str, required_role: str):
    """
    Denies unauthorized access to specific actions based on user's role.
    """
    if user_role != required_role:
        raise PermissionError(f"Unauthorized access denied. Action '{action}' requires {required_role} role.")''',
    "handleInput": '''\
import argparse

def handle_input(command: str, user_input: str):
    """
    Receive user input through CLI and interpret commands.
    """
    parser = argparse.ArgumentParser(description="User Command Interpreter")
    subparsers = parser.add_subparsers(title="Commands", dest="command")

    add_task_parser = subparsers.add_parser("add_task", help="Add a new task")
    add_task_parser.add_argument("description", type=str, help="Task description")

    try:
        parsed_args = parser.parse_args(command.split())
        if parsed_args.command == "add_task":
            add_task(parsed_args.description)
    except argparse.ArgumentError as e:
        print(f"Invalid input: {e}")''',
    "executeCommand": '''\
def execute_command(command, args):
    command_handlers = {
        'registerUser': handle_register_user,
        'handleInput': handle_input,
    }

    if command in command_handlers:
        return command_handlers[command](args)
    else:
        raise NotImplementedError(f"Command '{command}' not recognized.")

# Implement each handler function here
def handle_register_user(args):
    # Implementation for registerUser
    pass

def handle_input(args):
    # Interpretation of user input and call executeCommand with appropriate command
    execute_command(args.command, args.input)''',
    "AddTask": '''\
from datetime import datetime

def AddTask(description):
    """
    Add a new task to the task list.

    Parameters:
    - description (str): Description of the task
    """
    if not description.strip():
        print("Error: Task description cannot be empty.")
        return

    tasks = load_tasks()
    task_id = len(tasks) + 1
    task = {
        'id': task_id,
        'description': description,
        'completed': False,
        'created_at': datetime.now().isoformat()
    }
    tasks.append(task)
    save_tasks(tasks)
    print(f"Task added: {task_id} - {description}")''',
    "loadTasks": '''\
import json
import os

def load_tasks(path="tasks.json"):
    if not os.path.exists(path):
        return []
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)''',
    "saveTasks": '''\
import json

def save_tasks(tasks, path="tasks.json"):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(tasks, handle, indent=2)''',
}

# revisions returned by the one conflict-resolution call: the duplicate
# handle_input goes away and the CLI calls the task module's real entry point
REVISED = {
    "handleInput": SOURCES["handleInput"].replace("add_task(parsed_args", "AddTask(parsed_args"),
    "executeCommand": SOURCES["executeCommand"].split("\n\ndef handle_input")[0],
}

TASK = {
    "id": "project-management-system",
    "category": "Tool",
    "task_definition": (
        "You are tasked with building a Python command-line application that simulates a "
        "“Project Management System.” The system should allow users to manage multiple "
        "projects and tasks, with features such as task allocation, project status updates, and "
        "user permissions."
    ),
    "key_features": [
        "Create Project: Users should be able to create new projects with a name, description, deadline and priority.",
        "Assign Tasks: Tasks can be assigned to specific team members.",
        "User Permissions: Admins can create projects and assign tasks; regular users can only view projects and update their own tasks.",
        "Data Persistence: Project and task data are saved to a local JSON file.",
    ],
    "technical_specifications": ["Use Python language to generate code."],
}


def fenced(code: str) -> str:
    return f"```python\n{code}\n```"


def strategic_pattern() -> str:
    return r"\ATask Definition:[\s\S]*Please decompose the above task into several macro-level modules"


def tactical_pattern(module: str) -> str:
    return r'\ATask Definition:\s*\[\s*\{\s*"Module": ' + re.escape(json.dumps(module))


def operational_pattern(module: str, function: str) -> str:
    return r"\ATask Definations:[\s\S]*" + re.escape(
        f"for the {function} sub-function in the {module} module"
    )


def resolve_pattern() -> str:
    return r"\AConflict Resolution"


def strategic_answer() -> str:
    return json.dumps(
        [{"Module": m, "Responsibility": r} for m, r in MODULES], indent=4, ensure_ascii=False
    )


def tactical_answer(module: str) -> str:
    subs = [{"Function": f, "Responsibility": r} for f, r in FUNCTIONS[module]]
    return json.dumps({"Modules": [{"Module": module, "SubFunctions": subs}]}, indent=4)


def resolution_answer(sources: dict[str, str] = REVISED) -> str:
    parts = []
    for fn, code in sources.items():
        module = CLI if fn in ("handleInput", "executeCommand") else None
        parts.append(f"File: {module}/{fn}.py\n{fenced(code)}")
    return "\n\n".join(parts)


def sample_script_records() -> list[dict]:
    records = [{"match": strategic_pattern(), "response": strategic_answer()}]
    for module, _ in MODULES:
        records.append({"match": tactical_pattern(module), "response": tactical_answer(module)})
    for module, _ in MODULES:
        for fn, _ in FUNCTIONS[module]:
            records.append({
                "match": operational_pattern(module, fn),
                "response": fenced(SOURCES[fn]),
            })
    records.append({"match": resolve_pattern(), "response": resolution_answer()})
    return records


RECTIFIED_MARK = "# revised after review"


def verify_pattern(dimension: str) -> str:
    return r"\AOriginal " + dimension.capitalize() + " Dimension Prompt"


def rectify_pattern(module: str, function: str) -> str:
    return r"\AWe have provided[\s\S]*" + re.escape(
        f"for the {function} sub-function in the {module} module"
    )


def sweep_script_records() -> list[dict]:
    """The sample run with every gate live.

    Strategic and tactical reviews pass; each function's first review fails
    (0.3) and its rectified version passes (0.9), so verification and
    rectification counts depend only on which gates fire.
    """
    records = sample_script_records()
    records += [{"match": verify_pattern("strategic"), "response": "0.9"}]
    records += [{"match": verify_pattern("tactical"), "response": "0.9"}] * len(MODULES)
    n_functions = sum(len(v) for v in FUNCTIONS.values())
    rectified = verify_pattern("operational") + r"[\s\S]*" + re.escape(RECTIFIED_MARK)
    records += [{"match": rectified, "response": "0.9"}] * n_functions
    records += [{"match": verify_pattern("operational"), "response": "0.3"}] * n_functions
    for module, _ in MODULES:
        for fn, _ in FUNCTIONS[module]:
            records.append({
                "match": rectify_pattern(module, fn),
                "response": fenced(SOURCES[fn] + "\n\n" + RECTIFIED_MARK),
            })
    return records


def to_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def write_bundled() -> None:
    SCRIPT_FILE.write_text(to_jsonl(sample_script_records()), encoding="utf-8")
    SWEEP_SCRIPT_FILE.write_text(to_jsonl(sweep_script_records()), encoding="utf-8")
    TASK_FILE.write_text(json.dumps(TASK, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_bundled()
    sys.stdout.write(f"wrote {SCRIPT_FILE}, {SWEEP_SCRIPT_FILE} and {TASK_FILE}\n")
