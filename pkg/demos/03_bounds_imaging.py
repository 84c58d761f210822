# coding: utf-8

# # Bounds on the mean square loss, worked through on imaging
#
# For any model the minimum attainable loss sits in a chain
#
#     max(SPM, RPM) <= Holevo <= NH <= minimum <= PGM* <= min(PGM, prior)
#
# and dividing by the SPM value gives an incompatibility window. Everything
# below the NH line is cheap linear algebra; NH and Holevo need an SDP and
# are covered in the next demo.

# %%

import math

from qbb import assemble_report, imaging_model, ReportOptions, spm
from qbb.bounds import monotone_metric_bound, pgm_bound, pgm_star_bound, prior_loss

d, n, alpha = 2, 4, math.sqrt(2)
model = imaging_model(d, n, alpha)
m = model.moments()

# %% [markdown]
# The prior loss is what you get by ignoring the data. The SPM bound is what
# you would get if the individually optimal measurements could be performed
# jointly.

# %%

s = spm(m)
print("prior", prior_loss(m))
print("SPM  ", s.loss, "  gain", s.gain)

# %% [markdown]
# The SPM operators of different phases do not commute, so the SPM bound is
# not attainable here. The right-division metric gives another lower bound.
# It is weaker for this model because its K matrix is real.

# %%

comm = s.operators[0] @ s.operators[1] - s.operators[1] @ s.operators[0]
print("||[S1, S2]|| =", abs(comm).max())
print("RPM  ", monotone_metric_bound(m, "RLD")[1])

# %% [markdown]
# Upper bounds come from an explicit measurement: the pretty good measurement.
# With the default estimator its loss exceeds the prior loss, so it says
# nothing. Relabelling its outcomes with posterior means (PGM*) fixes that.

# %%

print("PGM  ", pgm_bound(m), " (trivial: above prior)")
print("PGM* ", pgm_star_bound(model, m))

# %% [markdown]
# `assemble_report` does all of it at once and checks the chain. `run_sdp`
# is off to keep this quick.

# %%

rep = assemble_report(model, m, ReportOptions(run_sdp=False))
for k, v in rep.incompat.items():
    print(f"{k:8s} {v}")
print("flags", rep.flags)
print("hierarchy violations:", rep.diagnostics or "none")
