"""
Running the experiment registry
===============================

The same pipelines back the ``proxlab`` command line tool.  Each run writes
report.json, sub-reports, CSV tables and a separate timing file.
"""

import json
import sys
import tempfile
from pathlib import Path

from proxlab import experiments as ex

names = sys.argv[1:] or ["rotation_classify", "interval_trichotomy", "krylov_bogolyubov", "shift_per_interior"]
out = Path(tempfile.mkdtemp(prefix="proxlab_"))
for name in names:
    rep = ex.run_experiment(ex.default_config(name), str(out / name))
    print(f"{name}  ({rep['anchor']})")
    for key, v in sorted(rep["verdicts"].items()):
        print(f"    {key}: {v['value']}")
    print("    files:", ", ".join(sorted(p.name for p in (out / name).iterdir())))
print("reports under", out)
print(json.dumps(ex.default_config("torus_meagre_and_inner"), indent=2))
