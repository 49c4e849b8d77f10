"""Trade review cost against attenuation strength.

Replays the sample run once per alpha value. A larger alpha shrinks the
operational review probability faster after each rectification, so later
functions are reviewed (and rectified) less often. The script fails every
function's first review, which makes the counts depend on the gates alone.

Run:  python3 demos/verification_sweep.py
"""

from mdcotgen import RunConfig
from mdcotgen.cli import sweep_rows
from mdcotgen.evaluator import load_task
from mdcotgen.provider import load_mock_script
from mdcotgen.samples import sample_sweep_script_path, sample_task_path

task = load_task(sample_task_path())
rows = sweep_rows(task, RunConfig(seed=3), "alpha", [0.0, 0.05, 0.1, 0.2, 0.3],
                  lambda: load_mock_script(sample_sweep_script_path()))

print(f"{'alpha':>6} {'verify':>7} {'rectify':>8} {'calls':>6} {'tokens':>7}")
for r in rows:
    print(f"{r['param_value']:>6} {r['verification_calls']:>7} {r['rectification_calls']:>8} "
          f"{r['total_calls']:>6} {r['proxy_cost']:>7}")
