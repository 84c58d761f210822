# coding: utf-8

# # Models and their moments
#
# A model is a prior over parameters plus a family of states. All the bounds
# only need a handful of prior-averaged moments:
#
# * `rho0`, the average state
# * `rho_bar[i]`, the state weighted by the i-th (mapped) parameter
# * `second`, the prior second-moment matrix of the mapped parameters
#
# Three families ship with closed forms: phase imaging, phase estimation with
# dephasing, and a planar qubit model. Arbitrary models can be written as
# grids of states.

# %%

import math
import tempfile
from pathlib import Path

import numpy as np

from qbb import (
    imaging_model, load_grid_model, moments_numeric, phase_dephasing_model, planar_model,
    random_grid_model, save_grid_model,
)

np.set_printoptions(precision=5, suppress=True)

# %% [markdown]
# Imaging with two phases, four photons, and the reference amplitude set to
# sqrt(d). The average state is diagonal in the mode basis.

# %%

img = imaging_model(2, 4, math.sqrt(2))
m = img.moments()
print(img)
print("rho0 diagonal:", np.diag(m.rho0).real)
print("lambda = tr(L E[f f^T]) =", m.lam, " pi^2/48 =", math.pi**2 / 48)

# %% [markdown]
# Closed-form moments and tensor-product quadrature agree to machine precision.
# `moments_numeric` ignores the closed form and integrates directly.

# %%

q = moments_numeric(img)
print("max |rho_bar - quadrature|:", np.abs(m.rho_bar - q.rho_bar).max())

# %% [markdown]
# The dephasing model estimates a phase and a dephasing rate. The rate is a
# scale parameter, so the loss is taken on log(theta_2). `symmetry` records
# the map per axis.

# %%

pd = phase_dephasing_model(2, math.pi / 2, 5.0)
mp = pd.moments()
print(pd.symmetry, "hilbert dim", pd.hilbert_dim)
print("mu =", mp.mu)
print("analytic vs quadrature:", np.abs(mp.rho_bar - moments_numeric(pd).rho_bar).max())

# %% [markdown]
# The planar model has uniform-ish beta priors on both Bloch components.

# %%

pl = planar_model(0.83, 0.5, 0.07)
print("planar second moments:", np.diag(pl.moments().second))

# %% [markdown]
# Grid models are plain text: a header, then one line per point with the
# parameters, a prior weight and the density matrix. Here we write a random
# one and read it back.

# %%

rng = np.random.default_rng(0)
grid = random_grid_model(rng, d=2, dim=3)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.txt"
    save_grid_model(grid, path)
    print(path.read_text().splitlines()[0])
    back = load_grid_model(path)
print("round trip:", np.abs(back.moments().rho0 - grid.moments().rho0).max())
