# coding: utf-8

# # Concrete measurements and an optimality certificate
#
# Bounds are only half the story. Given an actual POVM we can compute its
# loss exactly and, for a single parameter, certify that it is optimal.

# %%

import math

from qbb import (
    imaging_model, msl_of_povm, pauli_tomography_povm, pgm_povm, phase_dephasing_model, spm,
    spm_projective, verify_optimality,
)
from qbb.bounds import pgm_star_bound, prior_loss

# %% [markdown]
# With one parameter, measuring the eigenbasis of the SPM operator and
# reporting its eigenvalues reaches the SPM bound.

# %%

model = imaging_model(1, 4, 1.0)
m = model.moments()
povm = spm_projective(m, 0, model)
msl, _ = msl_of_povm(povm, m, "fixed")
print("outcomes", len(povm), " MSL", msl, " SPM", spm(m).loss)

# %% [markdown]
# The certificate builds the Hermitian operator Upsilon and checks that the
# risk operator minus Upsilon is PSD across a grid of candidate estimates.
# The trace of Upsilon is the minimum loss.

# %%

cert = verify_optimality(povm, model)
print("passed", cert.passed, " min eigenvalue", cert.min_eig_over_grid)
print("tr Upsilon", cert.trace_upsilon, " points", cert.points_checked)

# %% [markdown]
# A discretised pretty good measurement with posterior-mean estimates
# reproduces the PGM* value, up to the discretisation.

# %%

img = imaging_model(2, 4, math.sqrt(2))
pm = pgm_povm(img, order=30)
print("PGM povm MSL", msl_of_povm(pm, img.moments())[0],
      " PGM*", pgm_star_bound(img, img.moments()))

# %% [markdown]
# Local Pauli tomography on each qubit is a practical strategy for the
# dephasing model. Its loss falls between the NH bound and the prior loss.

# %%

for copies in (1, 2, 3):
    pd = phase_dephasing_model(copies, math.pi / 2, 5.0).moments()
    tom = msl_of_povm(pauli_tomography_povm(copies), pd)[0]
    print(f"copies {copies}: tomography {tom:.5f}  prior {prior_loss(pd):.5f}")
