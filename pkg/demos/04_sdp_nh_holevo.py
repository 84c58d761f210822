# coding: utf-8

# # The semidefinite bounds
#
# The Nagaoka-Hayashi (NH) and Holevo bounds are the tightest lower bounds in
# the toolkit. Both are SDPs solved by the built-in interior point method,
# which works directly on complex Hermitian blocks.

# %%

import math

import numpy as np

from qbb import (
    SdpProblem, holevo_bound, imaging_model, nagaoka_two_param, nh_bound, planar_model,
    random_grid_model, solve_sdp, spm,
)

# %% [markdown]
# First the solver on its own. `SdpProblem` collects variables with costs,
# PSD blocks `F0 + sum_k y_k F_k` and linear equalities. The problem below is
# a two-by-two toy: minimise y subject to [[y, 1], [1, y]] >= 0.

# %%

p = SdpProblem()
y = p.add_vars(1, 1.0)
blk = p.add_block(2, [[0, 1], [1, 0]])
p.add_entries(blk, [y[0], y[0]], [0, 1], [0, 1], [1.0, 1.0])
sol = solve_sdp(p)
print(sol.status, "value", sol.value, "gap", sol.gap, "iterations", sol.iterations)

# %% [markdown]
# Now the bounds. For imaging the NH value lands strictly above SPM, so the
# two phases really are incompatible.

# %%

m = imaging_model(2, 4, math.sqrt(2)).moments()
nh, ho = nh_bound(m), holevo_bound(m)
print("SPM    ", spm(m).loss)
print("Holevo ", ho.loss)
print("NH     ", nh.loss, " status", nh.solution.status)

# %% [markdown]
# With two parameters NH can also be found by a direct minimisation over two
# operators. It makes a useful independent check.

# %%

rng = np.random.default_rng(1)
for _ in range(3):
    mm = random_grid_model(rng, 2, 3).moments()
    print(f"SDP {nh_bound(mm).loss:.8f}   direct {nagaoka_two_param(mm):.8f}")

# %% [markdown]
# The planar model with v1 = v2 = 0.25 is a case where NH, the direct
# minimisation and the simple closed form 7/16 all coincide.

# %%

pm = planar_model(math.sqrt(0.5), math.sqrt(0.5), 0.5).moments()
print(nh_bound(pm).loss, nagaoka_two_param(pm), 7 / 16)
