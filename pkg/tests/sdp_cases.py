"""Hand-built SDPs with known optima, shared by the solver tests and the acceptance suite."""

import math

import numpy as np

from qbb.sdp import SdpProblem, hermitian_basis, _basis_values


def scalar_bound():
    # min y  s.t.  y - 1 >= 0
    p = SdpProblem()
    y = p.add_vars(1, 1.0)
    b = p.add_block(1, [[-1.0]])
    p.add_entries(b, y, 0, 0, 1.0)
    return p, 1.0


def two_by_two():
    # min y  s.t.  [[y, 1], [1, y]] >= 0
    p = SdpProblem()
    y = p.add_vars(1, 1.0)
    b = p.add_block(2, [[0, 1], [1, 0]])
    p.add_entries(b, [y[0], y[0]], [0, 1], [0, 1], [1.0, 1.0])
    return p, 1.0


def max_eigenvalue(seed=3):
    # min t  s.t.  t I - A >= 0, A random complex Hermitian
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    A = 0.5 * (g + g.conj().T)
    p = SdpProblem()
    t = p.add_vars(1, 1.0)
    b = p.add_block(4, -A)
    p.add_entries(b, np.repeat(t, 4), np.arange(4), np.arange(4), 1.0)
    return p, float(np.linalg.eigvalsh(A)[-1])


def degenerate_top_eigenvalue():
    # repeated largest eigenvalue: the optimal slack has a two-dimensional kernel
    A = np.diag([2.0, 2.0, 1.0, -1.0]).astype(complex)
    U = np.linalg.qr(np.random.default_rng(5).normal(size=(4, 4)) + 0j)[0]
    A = U @ A @ U.conj().T
    p = SdpProblem()
    t = p.add_vars(1, 1.0)
    b = p.add_block(4, -A)
    p.add_entries(b, np.repeat(t, 4), np.arange(4), np.arange(4), 1.0)
    return p, 2.0


def trace_norm(seed=7):
    # ||A||_1 = min 2 tr P - tr A  s.t.  P >= 0, P - A >= 0
    rng = np.random.default_rng(seed)
    D = 3
    g = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    A = 0.5 * (g + g.conj().T)
    a, bb, kind = hermitian_basis(D)
    vals = _basis_values(kind)
    p = SdpProblem()
    cost = np.where((a == bb) & (kind == 0), 2.0, 0.0)
    ids = p.add_vars(len(a), cost)
    p.offset = -float(np.trace(A).real)
    b1 = p.add_block(D)
    b2 = p.add_block(D, -A)
    for blk in (b1, b2):
        p.add_entries(blk, ids, a, bb, vals)
    return p, float(np.abs(np.linalg.eigvalsh(A)).sum())


def with_equality():
    # min y1 + 2 y2  s.t.  y1 - y2 = 1, y1 >= 0, y2 >= 0  ->  y = (1, 0)
    p = SdpProblem()
    y = p.add_vars(2, [1.0, 2.0])
    b = p.add_block(2)
    p.add_entries(b, y, [0, 1], [0, 1], 1.0)
    p.add_equality({0: 1.0, 1: -1.0}, 1.0)
    return p, 1.0


def interior_optimum():
    # objective constant on the feasible set; the equality pins y inside the disc
    p = SdpProblem()
    y = p.add_vars(1, 0.0)
    p.offset = 0.25
    b = p.add_block(2, np.eye(2))
    p.add_entries(b, y, 0, 1, 1.0)
    p.add_equality({0: 1.0}, 0.5)
    return p, 0.25


def complex_coupling():
    # min y  s.t.  [[y, i], [-i, 1]] >= 0  ->  y = 1
    p = SdpProblem()
    y = p.add_vars(1, 1.0)
    b = p.add_block(2, [[0, 1j], [-1j, 1]])
    p.add_entries(b, y, 0, 0, 1.0)
    return p, 1.0


def inactive_block():
    # min y  s.t.  y >= 2 and y >= 3; the first block stays strictly positive
    p = SdpProblem()
    y = p.add_vars(1, 1.0)
    for c in (2.0, 3.0):
        b = p.add_block(1, [[-c]])
        p.add_entries(b, y, 0, 0, 1.0)
    return p, 3.0


def lovasz_pentagon():
    # theta(C5) = min t  s.t.  t I - J - sum_e y_e (E_ij + E_ji) >= 0, which equals sqrt(5)
    n = 5
    edges = [(i, (i + 1) % n) for i in range(n)]
    p = SdpProblem()
    t = p.add_vars(1, 1.0)
    ys = p.add_vars(len(edges), 0.0)
    b = p.add_block(n, -np.ones((n, n)))
    p.add_entries(b, np.repeat(t, n), np.arange(n), np.arange(n), 1.0)
    for k, (i, j) in zip(ys, edges):
        p.add_entries(b, k, min(i, j), max(i, j), -1.0)
    return p, math.sqrt(5.0)


CASES = {
    "scalar_bound": scalar_bound,
    "two_by_two": two_by_two,
    "max_eigenvalue": max_eigenvalue,
    "degenerate_top_eigenvalue": degenerate_top_eigenvalue,
    "trace_norm": trace_norm,
    "with_equality": with_equality,
    "interior_optimum": interior_optimum,
    "complex_coupling": complex_coupling,
    "inactive_block": inactive_block,
    "lovasz_pentagon": lovasz_pentagon,
}
