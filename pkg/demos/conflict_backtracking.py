"""What the backtracker catches in the sample project and how it repairs it.

The CLI module's two units disagree with each other and with the task
module: executeCommand carries its own copy of handle_input, and
handleInput calls add_task, which nobody defines (the task module exports
AddTask). The static scan reports both problems; one scripted resolution
call rewrites the two units and the next pass comes back clean.

Run:  python3 demos/conflict_backtracking.py
"""

from mdcotgen import RunConfig, Session, detect_conflicts_static, integrate, run_pipeline
from mdcotgen.evaluator import load_task
from mdcotgen.provider import MockProvider, load_mock_script, parse_mock_script
from mdcotgen.samples import sample_script_path, sample_task_path

task = load_task(sample_task_path())
config = RunConfig(w_initial=0.0, w_min=0.0, backtracking=False)
raw, _ = run_pipeline(task, config, load_mock_script(sample_script_path()))

cli = raw.module("Command-Line Interface (CLI)")
report = detect_conflicts_static(cli, context=raw)
print("before integration:")
print(f"  kinds:    {[k.value for k in report.kinds]}")
print(f"  affected: {list(report.affected_set)}")
print("  " + report.description.replace("\n", "\n  "))

# only the script's resolution record is needed from here on
records = parse_mock_script(sample_script_path().read_text(encoding="utf-8"))
resolver = MockProvider([r for r in records if r.match.pattern.startswith(r"\AConflict")])
session = Session(resolver, config)
result = integrate(session, raw)

print(f"\nconverged={result.converged} after {result.steps} pass(es), "
      f"{result.resolutions} resolution(s)")
for event in session.trace.of_kind("ConflictDetect"):
    scope = event.unit or "project"
    print(f"  pass {event.payload['step']} {scope:<34} found={event.payload['found']}")
print("\nrevised handleInput:\n")
print(result.project.function("Command-Line Interface (CLI)/handleInput").source)
