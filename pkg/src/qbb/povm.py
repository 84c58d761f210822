"""Explicit measurements: MSL evaluation, SPM and PGM constructions, tomography,
and the optimality verifier.

Estimates are vectors in the symmetry-mapped coordinates ``f(theta)``, the
space in which the loss is quadratic.
"""

from dataclasses import dataclass

import numpy as np

from .bounds import spm
from .errors import InvalidPovm, ParseError, ResourceLimit
from .linops import dag, eig_hermitian, support
from .model import (
    GridModel, Model, ModelMoments, _complex_matrix, _content_lines, _floats,
    _fmt, _iter_model_states, _parse_header, _split_record,
)
from .tolerances import DEFAULT_TOL

__all__ = [
    "Povm",
    "OptimalityCertificate",
    "msl_of_povm",
    "spm_projective",
    "pgm_povm",
    "identity_povm",
    "pauli_tomography_povm",
    "posterior_mean_estimates",
    "loss_operator",
    "verify_optimality",
    "load_povm",
    "save_povm",
    "MAX_TOMOGRAPHY_COPIES",
]

MAX_TOMOGRAPHY_COPIES = 5


class Povm:
    """Finite POVM with optional estimate vectors.

    Parameters
    ----------
    elements : array (K, D, D)
        PSD elements resolving the identity.
    estimates : array (K, d), optional
        Estimate attached to each outcome.
    """

    def __init__(self, elements, estimates=None, tol=DEFAULT_TOL.povm):
        el = np.asarray(elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or len(el) == 0:
            raise InvalidPovm(f"elements must have shape (K, D, D), got {el.shape}")
        if not np.all(np.isfinite(el)):
            raise InvalidPovm("elements have non-finite entries")
        if np.abs(el - dag(el)).max() > 1e-10:
            raise InvalidPovm("elements are not Hermitian")
        el = 0.5 * (el + dag(el))
        mins = np.linalg.eigvalsh(el)[:, 0]
        if mins.min() < -1e-10:
            raise InvalidPovm(f"element {int(mins.argmin())} has eigenvalue {mins.min():.3e}")
        D = el.shape[1]
        self.completeness_residual = float(np.linalg.norm(el.sum(axis=0) - np.eye(D)))
        if self.completeness_residual > tol * max(1.0, np.sqrt(D)):
            raise InvalidPovm(f"elements do not sum to the identity (residual {self.completeness_residual:.3e})")
        self.elements = el
        if estimates is not None:
            estimates = np.asarray(estimates, dtype=float)
            if estimates.ndim == 1:
                estimates = estimates[:, None]
            if len(estimates) != len(el) or not np.all(np.isfinite(estimates)):
                raise InvalidPovm("need one finite estimate vector per element")
        self.estimates = estimates

    def __len__(self):
        return len(self.elements)

    @property
    def dim(self):
        return self.elements.shape[1]

    def with_estimates(self, estimates):
        out = object.__new__(Povm)
        out.__dict__.update(self.__dict__)
        Povm.__init__(out, self.elements, estimates)
        return out

    def measurement_moments(self):
        """``(M_i, M_ij)``: first and second moments of the estimates."""
        t = self._require_estimates()
        Mi = np.einsum("xi,xab->iab", t, self.elements)
        Mij = np.einsum("xi,xj,xab->ijab", t, t, self.elements)
        return Mi, Mij

    def _require_estimates(self):
        if self.estimates is None:
            raise InvalidPovm("POVM carries no estimates")
        return self.estimates


def _as_moments(source):
    if isinstance(source, ModelMoments):
        return source
    if isinstance(source, Model):
        return source.moments()
    raise TypeError("expected a Model or ModelMoments")


def _outcome_stats(povm, m):
    """Outcome probabilities ``P_x`` and first moments ``N_x = tr(M_x rho_bar)``."""
    if povm.dim != m.dim:
        raise InvalidPovm(f"POVM acts on dimension {povm.dim}, model on {m.dim}")
    flat = povm.elements.reshape(len(povm), -1)
    # tr(M A) = sum_ab M_ab A_ba
    P = np.real(flat @ m.rho0.T.reshape(-1))
    N = np.real(flat @ m.rho_bar.transpose(0, 2, 1).reshape(m.d, -1).T)
    return P, N


def posterior_mean_estimates(povm, source):
    """Posterior means ``N_x / P_x``; outcomes with zero probability get the prior mean."""
    m = _as_moments(source)
    P, N = _outcome_stats(povm, m)
    live = P > 1e-15 * max(P.max(), 1e-300)
    t = np.tile(m.mu, (len(P), 1))
    t[live] = N[live] / P[live, None]
    return t


def msl_of_povm(povm, source, estimator="posterior_mean"):
    """Mean square loss of a POVM and its error matrix.

    ``estimator="fixed"`` uses the POVM's own estimates; ``"posterior_mean"``
    replaces them by posterior means. Both are evaluated exactly from the
    moments: with ``P_x = tr(M_x rho0)`` and ``N_x = tr(M_x rho_bar)``,
    ``Sigma = E[f f^T] + sum_x (P_x t_x t_x^T - t_x N_x^T - N_x t_x^T)``.
    Outcomes of zero probability contribute nothing.

    Returns ``(msl, Sigma)`` with ``msl = tr(L Sigma)``.
    """
    m = _as_moments(source)
    P, N = _outcome_stats(povm, m)
    live = P > 1e-15 * max(P.max(), 1e-300)
    if estimator == "posterior_mean":
        Nl, Pl = N[live], P[live]
        sigma = m.second - (Nl / Pl[:, None]).T @ Nl
    elif estimator == "fixed":
        t = povm._require_estimates()
        if t.shape[1] != m.d:
            raise InvalidPovm(f"estimates have {t.shape[1]} components, model has {m.d}")
        t, Pl, Nl = t[live], P[live], N[live]
        cross = t.T @ Nl
        sigma = m.second + (t * Pl[:, None]).T @ t - cross - cross.T
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    sigma = 0.5 * (sigma + sigma.T)
    return float(np.sum(m.weight * sigma)), sigma


def _merge_spectrum(values, vectors, tol):
    """Group eigenvectors whose eigenvalues agree within ``tol``."""
    groups = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[start] > tol:
            groups.append((float(np.mean(values[start:k])), vectors[:, start:k]))
            start = k
    return groups


def spm_projective(m, i, model=None, merge_tol=1e-9):
    """Projective measurement of the SPM operator ``S_i``.

    Outcomes are the eigenspaces of ``S_i`` (eigenvalues closer than
    ``merge_tol`` times the spectral radius are merged, in ascending order). The
    estimate for parameter ``i`` is the eigenvalue and every other component
    is the prior mean.
    """
    if model is not None and not isinstance(m, ModelMoments):
        m = _as_moments(model)
    m = _as_moments(m)
    S = spm(m).operators[i]
    values, vectors = eig_hermitian(S)
    scale = max(1.0, float(np.abs(values).max()))
    groups = _merge_spectrum(values, vectors, merge_tol * scale)
    elements = np.array([v @ v.conj().T for _, v in groups])
    est = np.tile(m.mu, (len(groups), 1))
    est[:, i] = [s for s, _ in groups]
    return Povm(elements, est)


def identity_povm(dim, estimate):
    return Povm(np.eye(dim, dtype=complex)[None], np.atleast_2d(np.asarray(estimate, dtype=float)))


def pgm_povm(model, order=None, tol=DEFAULT_TOL):
    """Pretty good measurement discretised on the model's quadrature grid.

    Element ``q`` is ``w_q rho0^(-1/2) rho(x_q) rho0^(-1/2)`` with ``rho0`` the
    average over the same grid, so the elements resolve the identity on the
    support exactly. A projector onto the kernel of ``rho0`` is appended if
    needed. Estimates are ``f(x_q)``; the kernel outcome gets the prior mean.
    """
    samples = list(_iter_model_states(model, order))
    pts = np.concatenate([s[0] for s in samples])
    wts = np.concatenate([s[1] for s in samples])
    rhos = np.concatenate([s[2] for s in samples])
    rho0 = np.einsum("n,nab->ab", wts, rhos)
    p, v = support(rho0, tol.rank)
    root = (v / np.sqrt(p)) @ v.conj().T
    el = wts[:, None, None] * (root @ rhos @ root)
    est = model.f(pts)
    kernel = np.eye(model.hilbert_dim) - v @ v.conj().T
    if np.linalg.norm(kernel) > 1e-9:
        el = np.concatenate([el, kernel[None]])
        est = np.concatenate([est, (wts @ est)[None]])
    return Povm(el, est, tol=1e-8)


_QUBIT_PROJECTORS = None


def _qubit_projectors():
    global _QUBIT_PROJECTORS
    if _QUBIT_PROJECTORS is None:
        s2 = 1 / np.sqrt(2)
        kets = [
            (s2, s2), (s2, -s2),          # x +/-
            (s2, 1j * s2), (s2, -1j * s2),  # y +/-
            (1, 0), (0, 1),               # z +/-
        ]
        _QUBIT_PROJECTORS = np.array([np.outer(k, np.conj(k)) for k in np.asarray(kets, dtype=complex)])
    return _QUBIT_PROJECTORS


def pauli_tomography_povm(copies):
    """Local Pauli tomography: each qubit measured in a uniformly random Pauli basis.

    Single-qubit elements are ``|b,s><b,s| / 3`` for the six eigenvectors of
    X, Y and Z; the ``copies``-qubit POVM is their tensor product with
    ``6**copies`` outcomes and no estimates attached.
    """
    if int(copies) != copies or copies < 1:
        raise ValueError(f"copies must be a positive integer, got {copies!r}")
    if copies > MAX_TOMOGRAPHY_COPIES:
        raise ResourceLimit(f"tomography on more than {MAX_TOMOGRAPHY_COPIES} qubits is not supported")
    one = _qubit_projectors() / 3.0
    el = one
    for _ in range(int(copies) - 1):
        k = el.shape[1]
        el = np.einsum("xab,ycd->xyacbd", el, one).reshape(-1, 2 * k, 2 * k)
    return Povm(el)


def loss_operator(model, order=None):
    """``Lambda = E[rho(theta) f^T L f]``, whose trace is ``lambda``."""
    D = model.hilbert_dim
    out = np.zeros((D, D), dtype=complex)
    for pts, wts, rhos in _iter_model_states(model, order):
        fv = model.f(pts)
        q = np.einsum("ni,ij,nj->n", fv, model.weight, fv)
        out += np.einsum("n,nab->ab", wts * q, rhos)
    return 0.5 * (out + out.conj().T)


@dataclass
class OptimalityCertificate:
    upsilon: np.ndarray
    hermiticity_residual: float
    min_eig_over_grid: float
    points_checked: int
    passed: bool
    trace_upsilon: float
    worst_point: np.ndarray

    def as_dict(self):
        return {
            "passed": self.passed,
            "hermiticity_residual": self.hermiticity_residual,
            "min_eig_over_grid": self.min_eig_over_grid,
            "points_checked": self.points_checked,
            "trace_upsilon": self.trace_upsilon,
            "worst_point": [float(x) for x in self.worst_point],
        }


def _risk_shift(m, t):
    """``rho(t) - Lambda = (t^T L t) rho0 - 2 sum_i (L t)_i rho_bar_i`` for rows of ``t``."""
    q = np.einsum("ni,ij,nj->n", t, m.weight, t)
    lt = t @ m.weight
    return q[:, None, None] * m.rho0 - 2.0 * np.einsum("ni,iab->nab", lt, m.rho_bar)


def verify_optimality(povm, model, grid=None, grid_per_axis=21, moments=None, order=None,
                      tol=DEFAULT_TOL):
    """Check the optimality conditions for a POVM with attached estimates.

    With the risk operator ``R(t) = E[rho(theta) (t - f)^T L (t - f)]`` and
    ``Y = sum_x M_x R(t_x)``, a POVM is optimal iff ``Y`` is Hermitian and
    ``R(t) - Y`` is PSD for every candidate estimate ``t``. ``Upsilon`` is the
    Hermitian part of ``Y``; its trace is the MSL. The PSD condition is checked
    on ``grid`` (an ``(n, d)`` array in ``f`` coordinates) or, by default, on a
    tensor grid of ``grid_per_axis`` points spanning the range of ``f``, plus
    the POVM's own estimates. A pass is certified on the grid only.
    """
    t = povm._require_estimates()
    m = moments if moments is not None else model.moments(order)
    if t.shape[1] != m.d:
        raise InvalidPovm(f"estimates have {t.shape[1]} components, model has {m.d}")
    Lam = loss_operator(model, order)
    R = Lam[None] + _risk_shift(m, t)
    Y = np.einsum("xab,xbc->ac", povm.elements, R)
    herm = float(np.linalg.norm(Y - Y.conj().T) / max(1.0, np.linalg.norm(Y)))
    ups = 0.5 * (Y + Y.conj().T)
    if grid is None:
        lo, hi = model.f_box()
        per = grid_per_axis if m.d <= 3 else max(3, int(round(grid_per_axis ** (3 / m.d))))
        axes = [np.linspace(a, b, per) for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m.d)
    grid = np.concatenate([np.atleast_2d(np.asarray(grid, dtype=float)), t])
    base = Lam - ups
    worst, arg = np.inf, None
    for start in range(0, len(grid), 4096):
        g = grid[start:start + 4096]
        ev = np.linalg.eigvalsh(base[None] + _risk_shift(m, g))[:, 0]
        k = int(np.argmin(ev))
        if ev[k] < worst:
            worst, arg = float(ev[k]), g[k]
    passed = herm <= tol.verify_herm and worst >= -tol.verify_psd
    return OptimalityCertificate(ups, herm, worst, len(grid), bool(passed),
                                 float(np.trace(ups).real), np.asarray(arg))


# --------------------------------------------------------------------------
# POVM text format


def load_povm(path):
    """Read a POVM file.

    Format::

        dim=2 d=1
        element: <2*dim^2 numbers, row-major re/im pairs> | estimate: <d numbers>

    The ``estimate`` field is optional but must be present on all records or
    on none.
    """
    lines = _content_lines(path)
    try:
        n, text = next(lines)
    except StopIteration:
        raise ParseError("file is empty") from None
    header = _parse_header(text, n, ("dim",))
    dim, d = header["dim"], header.get("d")
    elements, estimates = [], []
    for n, text in lines:
        fields = _split_record(text, n)
        if "element" not in fields:
            raise ParseError("record is missing a field", line=n, field="element")
        elements.append(_complex_matrix(_floats(fields["element"], n, "element"), dim, n, "element"))
        if "estimate" in fields:
            est = _floats(fields["estimate"], n, "estimate")
            if d is not None and len(est) != d:
                raise ParseError(f"estimate needs {d} entries", line=n, field="estimate")
            estimates.append(est)
    if not elements:
        raise ParseError("file contains no records")
    if estimates and len(estimates) != len(elements):
        raise ParseError("estimates must be given for every element or for none", field="estimate")
    if estimates and len({len(e) for e in estimates}) != 1:
        raise ParseError("estimates have inconsistent lengths", field="estimate")
    return Povm(np.array(elements), np.array(estimates) if estimates else None)


def save_povm(povm, path):
    with open(path, "w", encoding="utf-8") as fh:
        head = f"dim={povm.dim}"
        if povm.estimates is not None:
            head += f" d={povm.estimates.shape[1]}"
        fh.write(head + "\n")
        for k, el in enumerate(povm.elements):
            pairs = np.stack([el.real.ravel(), el.imag.ravel()], axis=1).ravel()
            line = "element: " + " ".join(_fmt(v) for v in pairs)
            if povm.estimates is not None:
                line += " | estimate: " + " ".join(_fmt(v) for v in povm.estimates[k])
            fh.write(line + "\n")
