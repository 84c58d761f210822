"""Numerical tolerances shared across the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerance record. Each value is used as an absolute-relative hybrid.

    Attributes
    ----------
    hermitian : asymmetry allowed before an operator is rejected.
    rank : eigenvalues at or below ``rank * largest`` count as zero.
    psd : negative eigenvalue slack for PSD inputs.
    support : allowed weight of a moment outside the support of ``rho0``.
    trace : slack on the unit trace of states.
    gap_tol, feas_tol, max_iters : interior-point stopping rules.
    hierarchy_slack : slack used when checking the bound hierarchy.
    verify_psd, verify_herm : thresholds used by the optimality verifier.
    povm : completeness and positivity slack for POVM elements.
    """

    hermitian: float = 1e-12
    rank: float = 1e-12
    psd: float = 1e-12
    support: float = 1e-9
    trace: float = 1e-9
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    max_iters: int = 200
    hierarchy_slack: float = 1e-6
    verify_psd: float = 1e-8
    verify_herm: float = 1e-8
    povm: float = 1e-9


DEFAULT_TOL = ToleranceConfig()
