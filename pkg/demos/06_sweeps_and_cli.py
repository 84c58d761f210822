# coding: utf-8

# # Parameter sweeps from the command line
#
# The `qbb` command wraps the library: `bounds` prints a JSON (or CSV) report,
# `sweep` tabulates one model parameter, `make-povm` writes a measurement to a
# file, and `verify` certifies it. Here we drive it from Python, exactly as a
# shell would.

# %%

import csv
import io
import json
import subprocess
import sys
import tempfile
from pathlib import Path


def qbb(*args):
    out = subprocess.run([sys.executable, "-m", "qbb", *args], capture_output=True, text=True)
    return out.returncode, out.stdout


# %% [markdown]
# One report. Exit code 0 means the bound chain held.

# %%

code, text = qbb("bounds", "--model", "imaging", "--d", "2", "--n", "4", "--alpha", "auto")
rep = json.loads(text)
print("exit", code)
print(json.dumps(rep["losses"], indent=1))

# %% [markdown]
# The planar family across the prior shape beta. For small beta the prior is
# concentrated at the edges, and the prior loss exceeds twice the SPM bound
# (I_prior > 1).

# %%

code, text = qbb("sweep", "--model", "planar", "--vary", "beta=0.02:1.0:6", "--skip-sdp")
for row in csv.DictReader(io.StringIO(text)):
    print(f"beta={float(row['beta']):.3f}  I_prior={float(row['I_prior']):.3f}  "
          f"nontrivial={row['nontrivial_upper_bound']}")

# %% [markdown]
# Write the SPM measurement for one imaging phase and certify it.

# %%

with tempfile.TemporaryDirectory() as tmp:
    path = str(Path(tmp) / "spm.povm")
    qbb("make-povm", "--model", "imaging", "--d", "1", "--kind", "spm", "--out", path)
    code, text = qbb("verify", "--model", "imaging", "--d", "1", "--povm", path)
    cert = json.loads(text)
print("exit", code, " passed", cert["passed"], " tr Upsilon", cert["trace_upsilon"])
