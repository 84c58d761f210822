import math

import numpy as np
import pytest

from qbb import (
    DomainError, Infeasible, MaxIters, SdpProblem, holevo_bound, imaging_model,
    moments_planar, monotone_metric_bound, nagaoka_two_param, nh_bound, random_grid_model,
    solve_sdp, spm,
)
from qbb.linops import sqrt_psd, trace_norm
from qbb.sdp import _basis_values, hermitian_basis

from sdp_cases import CASES

SQ2 = math.sqrt(2)


@pytest.mark.parametrize("name", sorted(CASES))
def test_hand_sdp(name):
    problem, optimum = CASES[name]()
    sol = solve_sdp(problem)
    assert sol.status == "optimal"
    assert sol.gap <= 1e-7 * max(1.0, abs(sol.primal))
    assert sol.primal == pytest.approx(optimum, abs=1e-6 * max(1.0, abs(optimum)))
    # weak duality
    assert sol.primal >= sol.dual - 1e-7 * max(1.0, abs(sol.primal))


def test_trace_of_dominating_matrix():
    # min tr X  s.t.  X - I >= 0  ->  3
    D = 3
    a, b, kind = hermitian_basis(D)
    p = SdpProblem()
    ids = p.add_vars(len(a), np.where((a == b) & (kind == 0), 1.0, 0.0))
    blk = p.add_block(D, -np.eye(D))
    p.add_entries(blk, ids, a, b, _basis_values(kind))
    assert solve_sdp(p).primal == pytest.approx(3.0, abs=1e-6)


def test_infeasible():
    # y >= 1 and -y >= 0
    p = SdpProblem()
    y = p.add_vars(1, 1.0)
    b1 = p.add_block(1, [[-1.0]])
    p.add_entries(b1, y, 0, 0, 1.0)
    b2 = p.add_block(1)
    p.add_entries(b2, y, 0, 0, -1.0)
    with pytest.raises(Infeasible) as err:
        solve_sdp(p)
    assert err.value.solution.status == "infeasible"


def test_max_iters_carries_iterate():
    problem, _ = CASES["lovasz_pentagon"]()
    with pytest.raises(MaxIters) as err:
        solve_sdp(problem, max_iters=2)
    assert err.value.solution.iterations == 2
    sol = solve_sdp(problem, max_iters=2, raise_on_failure=False)
    assert sol.status == "max-iters"


def test_builder_validation():
    p = SdpProblem()
    y = p.add_vars(1)
    b = p.add_block(2)
    with pytest.raises(ValueError):
        p.add_entries(b, y, 0, 0, 1j)
    with pytest.raises(ValueError):
        p.add_entries(b, y, 2, 0, 1.0)
    with pytest.raises(ValueError):
        p.add_block(2, [[0, 1], [0, 0]])


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
def test_random_lmi_against_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    if "CLARABEL" not in cp.installed_solvers():
        pytest.skip("needs an interior-point backend in cvxpy")
    for _ in range(5):
        n, m = 4, 3
        F = []
        for _ in range(m + 1):
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            F.append(0.5 * (g + g.conj().T))
        F[0] = F[0] + 6 * np.eye(n)  # y = 0 strictly feasible
        c = rng.normal(size=m)
        # bound the feasible set with |y_k| <= 3
        p = SdpProblem()
        ids = p.add_vars(m, c)
        blk = p.add_block(n, F[0])
        iu, ju = np.triu_indices(n)
        for k in range(m):
            p.add_entries(blk, ids[k], iu, ju, F[k + 1][iu, ju])
        for k in range(m):
            for sgn in (1.0, -1.0):
                bb = p.add_block(1, [[3.0]])
                p.add_entries(bb, ids[k], 0, 0, sgn)
        ours = solve_sdp(p).primal
        y = cp.Variable(m)
        expr = F[0] + sum(y[k] * F[k + 1] for k in range(m))
        prob = cp.Problem(cp.Minimize(c @ y), [expr >> 0, cp.abs(y) <= 3])
        prob.solve(solver="CLARABEL")
        assert ours == pytest.approx(prob.value, abs=1e-6)


# -- bound formulations ----------------------------------------------------

def nagaoka_objective(m, M1, M2):
    r = sqrt_psd(m.rho0)
    comm = M1 @ M2 - M2 @ M1
    return (m.lam + np.trace(m.rho0 @ (M1 @ M1 + M2 @ M2)).real + trace_norm(r @ (1j * comm) @ r)
            - 2 * np.trace(m.rho_bar[0] @ M1 + m.rho_bar[1] @ M2).real)


def test_nh_single_parameter(rng):
    model = imaging_model(1, 4, 1.0)
    m = model.moments()
    assert nh_bound(m).solution is None
    forced = nh_bound(m, force_sdp=True)
    assert forced.loss == pytest.approx(spm(m).loss, abs=1e-6)
    for _ in range(3):
        m = random_grid_model(rng, 1, 3).moments()
        assert nh_bound(m, force_sdp=True).loss == pytest.approx(spm(m).loss, abs=1e-6)
        assert holevo_bound(m, force_sdp=True).loss == pytest.approx(spm(m).loss, abs=1e-6)


def test_nh_planar():
    m = moments_planar(SQ2 / 2, SQ2 / 2, 0.5)
    nh = nh_bound(m).loss
    assert 0.375 <= nh <= 0.46875
    assert nh == pytest.approx(nagaoka_two_param(m), abs=1e-5)
    assert nh == pytest.approx(0.4375, abs=1e-6)


def test_nh_imaging_nonzero_incompatibility():
    m = imaging_model(2, 4, SQ2).moments()
    nh = nh_bound(m).loss
    assert 0.1639501 < nh < 0.1899917
    assert nh / spm(m).loss - 1 > 1e-3
    ho = holevo_bound(m).loss
    assert spm(m).loss - 1e-6 <= ho <= nh + 1e-6


def test_nagaoka_feasible_point_is_above_minimum():
    m = moments_planar(0.6, 0.7, 0.3)
    s = spm(m).operators
    assert nagaoka_objective(m, s[0], s[1]) >= nagaoka_two_param(m) - 1e-9


def test_nagaoka_requires_two_parameters():
    with pytest.raises(DomainError):
        nagaoka_two_param(imaging_model(3, 4, 1.0).moments())


def test_nh_solution_feasible(rng):
    m = random_grid_model(rng, 2, 3).moments()
    res = nh_bound(m)
    d, D = m.d, m.dim
    S = np.block([[res.second_moments[i, j] for j in range(d)] for i in range(d)])
    V = np.vstack(list(res.first_moments))
    assert np.linalg.eigvalsh(S - V @ V.conj().T)[0] >= -1e-7


def test_nh_commuting_equals_spm(rng):
    for _ in range(5):
        m = random_grid_model(rng, 2, 3, commuting=True).moments()
        assert nh_bound(m).loss == pytest.approx(spm(m).loss, abs=1e-6)
        assert nagaoka_two_param(m) == pytest.approx(spm(m).loss, abs=1e-6)


def test_whitening_invariance(rng):
    for _ in range(5):
        model = random_grid_model(rng, 2, 3)
        g = rng.normal(size=(2, 2))
        m = model.with_weight(g @ g.T + 0.1 * np.eye(2)).moments()
        assert nh_bound(m).loss == pytest.approx(nh_bound(m.whitened()).loss, abs=1e-6)
        assert nh_bound(m, general_weight=False).loss == pytest.approx(nh_bound(m).loss, abs=1e-6)


def test_singular_weight(rng):
    m = random_grid_model(rng, 3, 3).moments()
    w = np.diag([1.0, 0.5, 0.0])
    ms = m.with_weight(w)
    nh = nh_bound(ms).loss
    # dropping the unweighted parameter gives the same problem
    from qbb import ModelMoments

    m2 = ModelMoments(m.rho0, m.rho_bar[:2], m.mu[:2], m.second[:2, :2], w[:2, :2])
    assert nh == pytest.approx(nh_bound(m2).loss, abs=1e-6)
    assert holevo_bound(ms).loss == pytest.approx(holevo_bound(m2).loss, abs=1e-6)


def test_holevo_sandwich(rng):
    for _ in range(5):
        m = random_grid_model(rng, 2, 3).moments()
        ho = holevo_bound(m).loss
        assert ho <= nh_bound(m).loss + 1e-6
        assert ho >= max(spm(m).loss, monotone_metric_bound(m, "RLD")[1]) - 1e-6


def test_holevo_trace_norm_form(rng):
    # at the optimal M the objective equals tr(L Re Z) + ||sqrt(L) Im Z sqrt(L)||_1 form
    m = random_grid_model(rng, 2, 2).moments()
    res = holevo_bound(m)
    M = res.first_moments
    Zm = np.array([[np.trace(m.rho0 @ a @ b) for b in M] for a in M])
    val = (m.lam + np.sum(m.weight * Zm.real) + 2 * abs(Zm[0, 1].imag)
           - 2 * sum(m.weight[i, j] * np.trace(m.rho_bar[j] @ M[i]).real for i in range(2) for j in range(2)))
    assert val == pytest.approx(res.loss, abs=1e-6)
