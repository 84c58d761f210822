import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from qbb import (
    InvalidPovm, ParseError, Povm, ResourceLimit, identity_povm, imaging_model, load_povm,
    msl_of_povm, nh_bound, pauli_tomography_povm, pgm_bound, pgm_povm, pgm_star_bound,
    phase_dephasing_model, planar_model, prior_loss, random_grid_model, save_povm,
    spm, spm_projective, verify_optimality,
)
from qbb.povm import loss_operator, posterior_mean_estimates

from conftest import builtin_models

SQ2 = math.sqrt(2)


def projective(U, estimates):
    el = np.array([np.outer(U[:, k], U[:, k].conj()) for k in range(U.shape[1])])
    return Povm(el, estimates)


# -- construction ----------------------------------------------------------

def test_validation():
    with pytest.raises(InvalidPovm):
        Povm([np.eye(2) / 2])  # incomplete
    with pytest.raises(InvalidPovm):
        Povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])  # not PSD
    with pytest.raises(InvalidPovm):
        Povm([np.eye(2)], estimates=[[0.0], [1.0]])
    p = Povm([np.eye(2)])
    with pytest.raises(InvalidPovm):
        msl_of_povm(p, builtin_models()["planar"], "fixed")


def test_tomography_structure():
    one = pauli_tomography_povm(1)
    assert len(one) == 6
    assert np.allclose([np.trace(e).real for e in one.elements], 1 / 3)
    two = pauli_tomography_povm(2)
    assert len(two) == 36
    assert np.allclose(two.elements.sum(axis=0), np.eye(4), atol=1e-15)
    with pytest.raises(ResourceLimit):
        pauli_tomography_povm(6)


# -- MSL -------------------------------------------------------------------

@pytest.mark.parametrize("name", ["imaging", "phase-dephasing", "planar"])
def test_trivial_povm_gives_prior_loss(name):
    model = builtin_models()[name]
    m = model.moments()
    msl, sigma = msl_of_povm(identity_povm(model.hilbert_dim, m.mu), m)
    assert msl == pytest.approx(prior_loss(m), abs=1e-15)
    assert msl == pytest.approx(np.sum(m.weight * sigma), abs=1e-12)


def test_planar_pgm_fixed_is_twice_spm():
    model = planar_model(0.6, 0.7, 0.4)
    m = model.moments()
    msl, _ = msl_of_povm(pgm_povm(model), m, "fixed")
    assert msl == pytest.approx(2 * spm(m).loss, abs=1e-10)
    assert msl == pytest.approx(pgm_bound(m), abs=1e-10)


def test_imaging_pgm_posterior_mean():
    model = imaging_model(2, 4, SQ2)
    povm = pgm_povm(model, 60)
    msl, _ = msl_of_povm(povm, model.moments())
    assert msl == pytest.approx(0.1899917, abs=2e-4)
    assert msl == pytest.approx(pgm_star_bound(model, model.moments(), 60), abs=1e-12)


def test_spm_projective_imaging_d1():
    m = imaging_model(1, 4, 1.0).moments()
    msl, _ = msl_of_povm(spm_projective(m, 0), m, "fixed")
    assert msl == pytest.approx((math.pi**2 / 3 - 1) / 16, abs=1e-8)
    assert msl == pytest.approx(0.1431167, abs=1e-7)


def test_spm_projective_planar():
    m = planar_model(0.6, 0.7, 0.4).moments()
    v1 = m.second[0, 0]
    p = spm_projective(m, 0)
    assert len(p) == 2
    assert np.allclose(p.estimates[:, 0], [-v1, v1], atol=1e-14)
    assert np.allclose(p.estimates[:, 1], 0.0)
    plus = np.array([1, 1]) / SQ2
    assert np.allclose(p.elements[1], np.outer(plus, plus), atol=1e-14)


def test_spm_projective_second_coordinate_at_prior():
    m = imaging_model(2, 4, SQ2).moments()
    _, sigma = msl_of_povm(spm_projective(m, 0), m, "fixed")
    S1 = spm(m).operators[0]
    single = m.second[0, 0] - np.trace(m.rho0 @ S1 @ S1).real
    assert sigma[0, 0] == pytest.approx(single, abs=1e-12)
    assert sigma[1, 1] == pytest.approx(math.pi**2 / 48, abs=1e-12)


def test_spm_projective_merges_degenerate_eigenvalues():
    # imaging d = 2: S_1 has a zero eigenvalue on the untouched mode
    m = imaging_model(3, 4, 1.0).moments()
    p = spm_projective(m, 0)
    assert len(p) == 3
    assert np.allclose(sorted(np.trace(e).real for e in p.elements), [1, 1, 2])
    assert np.all(np.diff(p.estimates[:, 0]) > 0)


def test_posterior_mean_is_optimal(rng):
    for _ in range(10):
        model = random_grid_model(rng, 2, 3)
        m = model.moments()
        U = unitary_group.rvs(3, random_state=int(rng.integers(1 << 30)))
        est = rng.normal(size=(3, 2))
        p = projective(U, est)
        fixed, _ = msl_of_povm(p, m, "fixed")
        pm, sigma = msl_of_povm(p, m, "posterior_mean")
        assert pm <= fixed + 1e-12
        assert pm <= prior_loss(m) + 1e-8
        assert pm >= nh_bound(m).loss - 1e-5
        assert pm == pytest.approx(np.sum(m.weight * sigma), abs=1e-12)
        relabelled = p.with_estimates(posterior_mean_estimates(p, m))
        assert msl_of_povm(relabelled, m, "fixed")[0] == pytest.approx(pm, abs=1e-12)


def test_zero_probability_outcome_skipped():
    m = planar_model(0.5, 0.5, 1.0).moments()
    el = np.array([np.eye(2), np.zeros((2, 2))])
    msl, _ = msl_of_povm(Povm(el, [[0.0, 0.0], [5.0, 5.0]]), m)
    assert msl == pytest.approx(prior_loss(m), abs=1e-15)


def test_tomography_sandwich():
    model = phase_dephasing_model(1, math.pi / 2, 5.0)
    m = model.moments()
    msl, _ = msl_of_povm(pauli_tomography_povm(1), m)
    assert nh_bound(m).loss - 1e-6 <= msl <= prior_loss(m)
    assert prior_loss(m) == pytest.approx(0.4214738, abs=1e-6)


# -- optimality ------------------------------------------------------------

def test_loss_operator_trace():
    model = imaging_model(2, 4, SQ2)
    assert np.trace(loss_operator(model)).real == pytest.approx(model.moments().lam, abs=1e-13)


def test_verify_spm_d1():
    model = imaging_model(1, 4, 1.0)
    m = model.moments()
    cert = verify_optimality(spm_projective(m, 0), model)
    assert cert.passed
    assert cert.min_eig_over_grid >= -1e-8
    assert cert.trace_upsilon == pytest.approx(spm(m).loss, abs=1e-7)
    assert cert.points_checked == 21 + 2


@pytest.mark.parametrize("name", ["imaging", "phase-dephasing", "planar"])
def test_verify_restricted_builtins(name):
    model = builtin_models()[name]
    for i in range(model.d):
        sub = model.restricted(i)
        m = sub.moments()
        cert = verify_optimality(spm_projective(m, i), sub)
        assert cert.passed, (name, i, cert.min_eig_over_grid)


def test_verify_identity_fails():
    model = imaging_model(2, 4, SQ2)
    cert = verify_optimality(identity_povm(3, model.moments().mu), model)
    assert not cert.passed
    assert cert.min_eig_over_grid < -1e-3


def test_verify_rotated_projective_fails(rng):
    model = planar_model(0.6, 0.7, 0.4)
    m = model.moments()
    U = unitary_group.rvs(2, random_state=7)
    p = projective(U, np.zeros((2, 2)))
    p = p.with_estimates(posterior_mean_estimates(p, m))
    cert = verify_optimality(p, model)
    assert not cert.passed
    assert cert.min_eig_over_grid < 0 or cert.hermiticity_residual > 1e-8


def test_verify_needs_estimates():
    with pytest.raises(InvalidPovm):
        verify_optimality(pauli_tomography_povm(1), planar_model(0.5, 0.5, 1.0))


def test_verify_custom_grid():
    model = imaging_model(1, 4, 1.0)
    p = spm_projective(model.moments(), 0)
    cert = verify_optimality(p, model, grid=np.linspace(-1, 1, 5)[:, None])
    assert cert.points_checked == 7 and cert.passed


# -- files -----------------------------------------------------------------

def test_povm_round_trip(tmp_path):
    m = imaging_model(2, 4, SQ2).moments()
    p = spm_projective(m, 1)
    path = tmp_path / "p.txt"
    save_povm(p, path)
    back = load_povm(path)
    assert np.array_equal(back.elements, p.elements)
    assert np.array_equal(back.estimates, p.estimates)
    save_povm(pauli_tomography_povm(1), path)
    assert load_povm(path).estimates is None


@pytest.mark.parametrize("text, field", [
    ("dim=2\nelement: 1 0 0\n", "element"),
    ("dim=2 d=1\nelement: 1 0 0 0 0 0 1 0 | estimate: 1 2\n", "estimate"),
    ("dim=2\nestimate: 1\n", "element"),
])
def test_povm_parse_errors(tmp_path, text, field):
    path = tmp_path / "p.txt"
    path.write_text(text)
    with pytest.raises(ParseError) as err:
        load_povm(path)
    assert err.value.field == field


def test_povm_file_must_be_complete(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("dim=2\nelement: 1 0 0 0 0 0 0 0\n")
    with pytest.raises(InvalidPovm):
        load_povm(path)
