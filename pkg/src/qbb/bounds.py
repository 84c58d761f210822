"""Closed-form bounds on the minimum mean square loss and the full report.

Lower bounds: SPM, the monotone-metric family (SLD, RLD and SQRT), and the
SDP-based NH and Holevo bounds from :mod:`qbb.sdp`. Upper bounds: the prior
loss, the PGM with its own labels, and the PGM followed by posterior-mean
relabelling (PGM*). Every quantity is computed on the support of ``rho0``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DegenerateModel, IntegrationError, UnsupportedMoment
from .linops import lyapunov_solve, support
from .model import _iter_model_states
from .tolerances import DEFAULT_TOL

__all__ = [
    "MetricChoice",
    "SpmResult",
    "BoundsReport",
    "ReportOptions",
    "prior_loss",
    "spm",
    "monotone_metric_bound",
    "pgm_bound",
    "pgm_star_bound",
    "pgm_operators",
    "assemble_report",
    "check_hierarchy",
]


class MetricChoice(str, Enum):
    SLD = "SLD"
    RLD = "RLD"
    SQRT = "SQRT"


class SpmResult(NamedTuple):
    operators: np.ndarray
    loss: float
    gain: float
    pseudo_gain: float


def _reduced(m, tol=DEFAULT_TOL):
    """Restrict ``rho0`` and ``rho_bar`` to the support of ``rho0``.

    Returns ``(p, v, rb)``: support eigenvalues, isometry, and the first moments
    in the eigenbasis of ``rho0`` (so the reduced ``rho0`` is ``diag(p)``).
    """
    p, v = support(m.rho0, tol.rank)
    rb = np.einsum("ai,kab,bj->kij", v.conj(), m.rho_bar, v)
    back = np.einsum("ia,kab,jb->kij", v, rb, v.conj())
    outside = np.linalg.norm(m.rho_bar - back)
    if outside > tol.support * max(1.0, np.linalg.norm(m.rho_bar)):
        raise UnsupportedMoment(f"first moments leak {outside:.3e} outside support(rho0)")
    return p, v, rb


def prior_loss(m):
    """MSL of the best data-independent guess, ``lambda - mu^T L mu``."""
    return max(m.lam - float(m.mu @ m.weight @ m.mu), 0.0)


def spm(m, tol=DEFAULT_TOL):
    """SPM operators and bound.

    ``S_i`` solves ``(S_i rho0 + rho0 S_i)/2 = rho_bar_i``; the bound is
    ``lambda - L^{ij} tr(rho0 S_j S_i)``. The pseudo-gain is the subtracted
    term, the gain is that minus ``mu^T L mu``.
    """
    ops = np.array([lyapunov_solve(m.rho0, r, tol.rank, tol.support) for r in m.rho_bar])
    G = np.real(np.einsum("ab,jbc,ica->ij", m.rho0, ops, ops))
    pseudo = float(np.sum(m.weight * G))
    loss = m.lam - pseudo
    return SpmResult(ops, loss, pseudo - float(m.mu @ m.weight @ m.mu), pseudo)


def _sym_sqrt(w):
    vals, vecs = np.linalg.eigh(0.5 * (w + w.T))
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def monotone_metric_bound(m, metric="SLD", tol=DEFAULT_TOL):
    """Monotone-metric bound ``lambda - tr(L Re K) + ||sqrt(L) Im K sqrt(L)||_1``.

    ``K_ij = tr(L_i^H rho_bar_j)`` where ``L_i`` inverts the metric's action on
    ``rho0``: the anticommutator for SLD, right multiplication for RLD and the
    two-sided square-root sandwich for SQRT.

    Returns ``(K, bound)``.
    """
    metric = MetricChoice(metric)
    p, _, rb = _reduced(m, tol)
    if metric is MetricChoice.SLD:
        Li = 2.0 * rb / (p[:, None] + p[None, :])
    elif metric is MetricChoice.RLD:
        Li = rb / p[None, None, :]
    else:
        s = 1.0 / np.sqrt(p)
        Li = rb * s[:, None] * s[None, :]
    if not np.all(np.isfinite(Li)):
        raise UnsupportedMoment("metric action is singular on the support of rho0")
    K = np.einsum("iba,jba->ij", Li.conj(), rb)
    K = 0.5 * (K + K.conj().T)
    root = _sym_sqrt(m.weight)
    im = root @ K.imag @ root
    bound = m.lam - float(np.sum(m.weight * K.real)) + float(np.abs(np.linalg.eigvalsh(1j * im)).sum())
    return K, bound


def pgm_operators(m, tol=DEFAULT_TOL):
    """``rho0^(-1/2) rho_bar_i rho0^(-1/2)`` on the support, in the full basis."""
    p, v, rb = _reduced(m, tol)
    s = 1.0 / np.sqrt(p)
    A = rb * s[:, None] * s[None, :]
    return np.einsum("ia,kab,jb->kij", v, A, v.conj())


def pgm_bound(m, tol=DEFAULT_TOL):
    """MSL of the pretty good measurement with its own outcome labels."""
    p, _, rb = _reduced(m, tol)
    s = 1.0 / np.sqrt(p)
    A = rb * s[:, None] * s[None, :]
    G = np.real(np.einsum("jab,iba->ij", rb, A))
    return 2.0 * (m.lam - float(np.sum(m.weight * G)))


def pgm_star_bound(model, m, quad_order=None, tol=DEFAULT_TOL):
    """MSL of the pretty good measurement followed by posterior-mean relabelling.

    For outcome ``x`` the posterior mean is ``t_i(x) = tr(rho(x) A_i)`` with
    ``A_i = rho0^(-1/2) rho_bar_i rho0^(-1/2)``, and the loss is
    ``lambda - int p(x) t(x)^T L t(x) dx``. The outcome density equals the prior,
    so the model's own quadrature is reused. The PGM built from that grid must
    resolve the identity; a grid whose state average differs from ``rho0`` by
    more than 1e-6 raises :class:`IntegrationError`.
    """
    A = pgm_operators(m, tol)
    dim = m.dim
    # tr(rho A_i) = sum_ab rho_ab (A_i)_ba
    At = A.transpose(0, 2, 1).reshape(m.d, -1).T
    acc = 0.0
    total = 0.0
    rho_sum = np.zeros((dim, dim), dtype=complex)
    for pts, wts, rhos in _iter_model_states(model, quad_order):
        flat = rhos.reshape(len(wts), -1)
        t = np.real(flat @ At)
        acc += float(wts @ np.einsum("ni,ij,nj->n", t, m.weight, t))
        total += float(wts.sum())
        rho_sum += (wts @ flat).reshape(dim, dim)
    if not (np.isfinite(acc) and abs(total - 1.0) < 1e-8):
        raise IntegrationError("prior quadrature does not integrate to one")
    drift = float(np.abs(rho_sum - m.rho0).max())
    if drift > 1e-6:
        raise IntegrationError(
            f"quadrature average state differs from rho0 by {drift:.3e}; raise the order"
        )
    return m.lam - acc


# --------------------------------------------------------------------------
# Report assembly.

LOSS_KEYS = ("prior", "SPM", "RPM", "SQRT", "PGM", "PGM*", "NH", "Holevo", "2SPM")
INCOMPAT_KEYS = ("I_NH", "I_H", "I_RPM", "I_PGM", "I_PGM*", "I_prior")


@dataclass
class ReportOptions:
    """Switches for :func:`assemble_report`.

    ``tomography_copies`` adds the posterior-mean MSL of local Pauli
    tomography on that many qubits (the model must act on ``2**copies``
    dimensions).
    """

    run_sdp: bool = True
    quad_order: int | None = None
    tol: object = DEFAULT_TOL
    tomography_copies: int | None = None


@dataclass
class BoundsReport:
    losses: dict
    incompat: dict
    certified_range: tuple
    gain: float
    pseudo_gain: float
    flags: dict
    diagnostics: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.diagnostics

    def as_dict(self):
        return {
            "losses": dict(self.losses),
            "incompat": dict(self.incompat),
            "certified_range": list(self.certified_range),
            "gain": self.gain,
            "pseudo_gain": self.pseudo_gain,
            "flags": dict(self.flags),
            "diagnostics": list(self.diagnostics),
            "solver": dict(self.solver),
        }

    def flat(self):
        """One-level mapping used for CSV rows."""
        row = {f"L_{k}": v for k, v in self.losses.items()}
        row.update(self.incompat)
        row["I_low"], row["I_high"] = self.certified_range
        row["gain"] = self.gain
        row["pseudo_gain"] = self.pseudo_gain
        row.update(self.flags)
        row["violations"] = ";".join(self.diagnostics)
        return row


def check_hierarchy(losses, slack=DEFAULT_TOL.hierarchy_slack):
    """Return a list of violated links in the bound chain.

    The chain is ``min(2 SPM, prior) >= min(PGM, prior) >= PGM* >= NH >= Holevo
    >= max(SPM, RPM)``; links involving a missing value are skipped. Other
    strategies (such as tomography) must sit between NH and the prior.
    """
    get = losses.get
    chain = []
    if get("2SPM") is not None:
        chain.append(("min(2SPM,prior)", min(get("2SPM"), get("prior"))))
    chain.append(("min(PGM,prior)", min(get("PGM"), get("prior"))))
    chain.append(("PGM*", get("PGM*")))
    chain.append(("NH", get("NH")))
    chain.append(("Holevo", get("Holevo")))
    lows = [v for v in (get("SPM"), get("RPM")) if v is not None]
    chain.append(("max(SPM,RPM)", max(lows)))
    chain = [(n, v) for n, v in chain if v is not None]
    bad = []
    for (n1, v1), (n2, v2) in zip(chain, chain[1:]):
        if v1 < v2 - slack * max(1.0, abs(v2)):
            bad.append(f"{n1}={v1:.10g} < {n2}={v2:.10g}")
    for name in ("tomography",):
        v = get(name)
        if v is None:
            continue
        floor = get("NH") if get("NH") is not None else get("SPM")
        if v < floor - slack * max(1.0, abs(floor)):
            bad.append(f"{name}={v:.10g} below lower bound {floor:.10g}")
        if v > get("prior") + slack * max(1.0, abs(get("prior"))):
            bad.append(f"{name}={v:.10g} above prior={get('prior'):.10g}")
    return bad


def assemble_report(model, m=None, options=None):
    """Compute every bound for ``model`` and collect them in a :class:`BoundsReport`.

    Bounds are computed one after another in a fixed order, so reports are
    reproducible. Incompatibility values are ``L_X / L_SPM - 1``.

    Raises
    ------
    DegenerateModel
        If ``L_SPM <= 1e-14``.
    """
    from . import sdp

    options = options or ReportOptions()
    tol = options.tol
    if m is None:
        m = model.moments(options.quad_order)
    s = spm(m, tol)
    if s.loss <= 1e-14:
        raise DegenerateModel(f"L_SPM = {s.loss:.3e}; incompatibility is undefined")
    losses = {"prior": prior_loss(m), "SPM": s.loss}
    losses["RPM"] = monotone_metric_bound(m, "RLD", tol)[1]
    losses["SQRT"] = monotone_metric_bound(m, "SQRT", tol)[1]
    losses["PGM"] = pgm_bound(m, tol)
    losses["PGM*"] = pgm_star_bound(model, m, options.quad_order, tol)
    losses["2SPM"] = 2.0 * s.loss
    solver = {}
    if options.run_sdp:
        nh = sdp.nh_bound(m, tol)
        ho = sdp.holevo_bound(m, tol)
        losses["NH"] = nh.loss
        losses["Holevo"] = ho.loss
        for name, res in (("NH", nh), ("Holevo", ho)):
            sol = res.solution
            solver[name] = (
                {"status": "closed-form"} if sol is None else
                {"status": sol.status, "iterations": sol.iterations, "gap": sol.gap,
                 "dual_loss": res.dual_loss}
            )
    if options.tomography_copies:
        from .povm import msl_of_povm, pauli_tomography_povm

        tomo = pauli_tomography_povm(options.tomography_copies)
        losses["tomography"] = msl_of_povm(tomo, m, "posterior_mean")[0]

    def ratio(x):
        return None if x is None else x / s.loss - 1.0

    incompat = {
        "I_NH": ratio(losses.get("NH")),
        "I_H": ratio(losses.get("Holevo")),
        "I_RPM": ratio(losses["RPM"]),
        "I_PGM": ratio(losses["PGM"]),
        "I_PGM*": ratio(losses["PGM*"]),
        "I_prior": ratio(losses["prior"]),
    }
    if "tomography" in losses:
        incompat["I_tom"] = ratio(losses["tomography"])
    low = incompat["I_NH"] if incompat["I_NH"] is not None else max(0.0, incompat["I_RPM"])
    flags = {
        "pgm_trivial": losses["PGM"] >= losses["prior"],
        "two_spm_trivial": losses["2SPM"] >= losses["prior"],
        "nontrivial_upper_bound": losses["2SPM"] < losses["prior"],
    }
    diagnostics = check_hierarchy(losses, tol.hierarchy_slack)
    return BoundsReport(
        losses=losses,
        incompat=incompat,
        certified_range=(low, incompat["I_PGM*"]),
        gain=s.gain,
        pseudo_gain=s.pseudo_gain,
        flags=flags,
        diagnostics=diagnostics,
        solver=solver,
    )
