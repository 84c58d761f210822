"""Dense Hermitian linear algebra.

Operators are plain ``complex128`` numpy arrays. :func:`hermitian` validates and
symmetrises its input; the other routines call it on entry, so any square array
that is Hermitian up to rounding can be passed in directly.
"""

from typing import NamedTuple

import numpy as np

from .errors import InvalidOperator, NotPSD, UnsupportedMoment
from .tolerances import DEFAULT_TOL

__all__ = [
    "Spectrum",
    "hermitian",
    "eig_hermitian",
    "lyapunov_solve",
    "trace_norm",
    "sqrt_psd",
    "inv_sqrt_psd",
    "min_eigval",
    "support",
    "dag",
]


class Spectrum(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian(a, tol=DEFAULT_TOL.hermitian):
    """Return ``(a + a^H) / 2`` after checking that ``a`` is Hermitian.

    Raises
    ------
    InvalidOperator
        If ``a`` is not square, has non-finite entries, or its asymmetry
        exceeds ``tol * max(1, max|a|)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidOperator(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidOperator("operator has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > tol * scale:
        raise InvalidOperator(f"operator is not Hermitian (asymmetry {asym:.3e})")
    return 0.5 * (a + a.conj().T)


def eig_hermitian(h):
    """Eigenvalues in ascending order with orthonormal eigenvectors as columns."""
    values, vectors = np.linalg.eigh(hermitian(h))
    return Spectrum(values, vectors)


def min_eigval(a):
    return float(np.linalg.eigvalsh(hermitian(a))[0])


def trace_norm(a):
    """Sum of absolute eigenvalues of a Hermitian operator."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian(a)))))


def support(rho, rank_tol=DEFAULT_TOL.rank, psd_tol=DEFAULT_TOL.psd):
    """Orthonormal basis of the support of a PSD operator.

    Returns ``(p, v)`` where ``p`` holds the retained eigenvalues (ascending)
    and the columns of ``v`` span the support.
    """
    w, v = eig_hermitian(rho)
    top = max(float(w[-1]), 0.0)
    if w[0] < -psd_tol * max(1.0, top):
        raise NotPSD(f"operator has eigenvalue {w[0]:.3e}")
    keep = w > rank_tol * top
    return w[keep], v[:, keep]


def _psd_power(a, power, rank_tol, psd_tol):
    w, v = eig_hermitian(a)
    top = max(float(w[-1]), 0.0)
    if w[0] < -psd_tol * max(1.0, top):
        raise NotPSD(f"operator has eigenvalue {w[0]:.3e}")
    keep = w > rank_tol * top
    f = np.zeros_like(w)
    f[keep] = w[keep] ** power
    return (v * f) @ v.conj().T


def sqrt_psd(a, rank_tol=DEFAULT_TOL.rank, psd_tol=DEFAULT_TOL.psd):
    return _psd_power(a, 0.5, rank_tol, psd_tol)


def inv_sqrt_psd(a, rank_tol=DEFAULT_TOL.rank, psd_tol=DEFAULT_TOL.psd):
    """Pseudo-inverse square root on the retained support of ``a``."""
    return _psd_power(a, -0.5, rank_tol, psd_tol)


def lyapunov_solve(rho, b, rank_tol=DEFAULT_TOL.rank, support_tol=DEFAULT_TOL.support):
    """Solve ``(X rho + rho X) / 2 = B`` for Hermitian ``X``.

    In the eigenbasis of ``rho`` the solution is ``X_jk = 2 B_jk / (p_j + p_k)``.
    Only the support of ``rho`` is used; ``X`` vanishes outside it. ``B`` must
    live on that support, otherwise :class:`UnsupportedMoment` is raised.
    """
    b = hermitian(b)
    p, v = support(rho, rank_tol)
    bs = v.conj().T @ b @ v
    outside = np.linalg.norm(b - v @ bs @ v.conj().T)
    if outside > support_tol * max(1.0, np.linalg.norm(b)):
        raise UnsupportedMoment(
            f"moment has weight {outside:.3e} outside the support of the state"
        )
    xs = 2.0 * bs / (p[:, None] + p[None, :])
    x = v @ xs @ v.conj().T
    return 0.5 * (x + x.conj().T)
