"""Generate the bundled sample project end to end without a network.

The mock provider replays a script that answers every prompt of the run:
one strategic decomposition, three tactical ones, seven function bodies and
one conflict resolution. Review gates are live here, so the run shows a
failed operational review followed by a rectification for each function.

Run:  python3 demos/scripted_run.py [output-dir]
"""

import sys
import tempfile
from collections import Counter
from pathlib import Path

from mdcotgen import RunConfig, run_pipeline, write_project
from mdcotgen.evaluator import code_length, load_task
from mdcotgen.provider import load_mock_script
from mdcotgen.samples import sample_sweep_script_path, sample_task_path

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "project"

task = load_task(sample_task_path())
provider = load_mock_script(sample_sweep_script_path())
project, trace = run_pipeline(task, RunConfig(seed=3), provider)

print(f"task: {task.id}")
for node in project.modules:
    names = ", ".join(fn.rationale.function_name for fn in node.functions)
    print(f"  {node.name}: {names}")

print("\nevents:")
for kind, n in sorted(trace.tally().items()):
    print(f"  {kind:<16}{n}")

per_tier = Counter(e.dimension for e in trace.of_kind("Rectify"))
print("\nrectifications by tier:", dict(per_tier))

manifest = write_project(project, out, trace=trace, project_id=task.id)
print(f"\nwrote {len(manifest.files)} files to {out}")
print(f"code length {code_length(out)} bytes, manifest says {manifest.total_bytes}")
