# coding: utf-8

# # Quadrature rules and special functions
#
# Everything numeric in `qbb` rests on two small pieces: Gauss rules for the
# prior integrals, and two special functions that show up in the closed-form
# moments of the dephasing model. This walk-through pokes at both.

# %%

import numpy as np

from qbb.specfun import expint_ei, gauss_jacobi, gl_nodes, xi_3f3

# %% [markdown]
# A Gauss-Legendre rule with `k` nodes integrates polynomials up to degree
# `2k - 1` exactly. Map it onto an interval and check on x^5 over [0, 2].

# %%

rule = gl_nodes(3, 0.0, 2.0)
print("nodes  ", rule.nodes)
print("weights", rule.weights)
print("int x^5 =", rule.weights @ rule.nodes**5, "exact", 2**6 / 6)

# %% [markdown]
# Beta priors get Gauss-Jacobi rules instead, so the prior density becomes part
# of the weight function and never has to be resolved by the nodes. The
# weights come normalised to the beta density, so they sum to one, and the
# first two moments of that density are reproduced exactly.

# %%

gj = gauss_jacobi(6, 0.5, 0.5, -1.0, 1.0)
print("sum of weights:", gj.weights.sum())
print("E[x^2] =", gj.weights @ gj.nodes**2, " exact", 0.25)

# %% [markdown]
# The exponential integral Ei(x) for negative x. Near zero it diverges like
# ln|x|, and far out it decays like e^x / x.

# %%

for x in (-0.01, -1.0, -5.0, -30.0):
    print(f"Ei({x:>6}) = {expint_ei(x): .16e}")

# %% [markdown]
# The hypergeometric combination Xi(z) = z 3F3(1,1,1; 2,2,2; z) stays accurate
# for large negative arguments, where the plain power series would cancel.

# %%

for z in (-0.5, -6.0, -40.0, -200.0):
    print(f"Xi({z:>6}) = {xi_3f3(z): .16e}")

grid = np.linspace(-40, -0.1, 5)
print(np.vectorize(xi_3f3)(grid))
