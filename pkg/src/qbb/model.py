"""Estimation models and their moments.

A model bundles a prior over a box of parameters, a parametric family of
density matrices, a weight matrix ``L`` for the quadratic loss and a
per-parameter symmetry map ``f`` (identity for locations, log for scales).
Every bound in :mod:`qbb.bounds` consumes only the moments of a model::

    rho0      = E[rho(theta)]
    rho_bar_i = E[f_i(theta) rho(theta)]
    second    = E[f(theta) f(theta)^T]      (so lambda = tr(L second))
    mu        = E[f(theta)]

The three built-in models come with closed-form moments. Any model can also be
integrated numerically on a tensor Gauss grid.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import sqrtm

from . import specfun
from .errors import ModelError, ParseError, PriorError
from .linops import dag, hermitian
from .tolerances import DEFAULT_TOL

__all__ = [
    "ModelMoments",
    "PriorAxis",
    "Model",
    "ProductModel",
    "GridModel",
    "imaging_model",
    "planar_model",
    "phase_dephasing_model",
    "moments_numeric",
    "moments_imaging",
    "moments_planar",
    "moments_phase_dephasing",
    "load_grid_model",
    "save_grid_model",
    "random_grid_model",
]

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SYMMETRY_MAPS = ("identity", "log")

# Largest tensor grid built in one go; bigger grids are streamed in chunks.
_CHUNK = 20000


@dataclass(frozen=True)
class ModelMoments:
    """State and prior moments of a model.

    ``rho_bar`` has shape ``(d, D, D)``. ``second`` is the prior matrix
    ``E[f f^T]``; ``lam`` is derived from it as ``tr(L second)``.
    """

    rho0: np.ndarray
    rho_bar: np.ndarray
    mu: np.ndarray
    second: np.ndarray
    weight: np.ndarray
    tol: float = DEFAULT_TOL.trace

    def __post_init__(self):
        rho0 = hermitian(self.rho0, tol=1e-9)
        rho_bar = np.array([hermitian(r, tol=1e-9) for r in np.asarray(self.rho_bar)])
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        second = np.atleast_2d(np.asarray(self.second, dtype=float))
        weight = np.atleast_2d(np.asarray(self.weight, dtype=float))
        d = len(mu)
        if rho_bar.shape != (d,) + rho0.shape:
            raise ModelError(f"rho_bar has shape {rho_bar.shape}, expected {(d,) + rho0.shape}")
        if second.shape != (d, d) or weight.shape != (d, d):
            raise ModelError("second moment and weight must be d x d")
        if abs(np.trace(rho0).real - 1.0) > self.tol:
            raise ModelError(f"trace(rho0) = {np.trace(rho0).real!r}, expected 1")
        w = np.linalg.eigvalsh(rho0)
        if w[0] < -1e-10 * max(1.0, w[-1]):
            raise ModelError(f"rho0 has negative eigenvalue {w[0]:.3e}")
        weight = 0.5 * (weight + weight.T)
        if np.linalg.eigvalsh(weight)[0] < -1e-12 * max(1.0, np.abs(weight).max()):
            raise ModelError("weight matrix is not PSD")
        second = 0.5 * (second + second.T)
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "rho_bar", rho_bar)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "second", second)
        object.__setattr__(self, "weight", weight)
        if self.lam < float(mu @ weight @ mu) - 1e-9 * max(1.0, abs(self.lam)):
            raise ModelError("prior second moment is smaller than the squared mean")

    @property
    def d(self):
        return len(self.mu)

    @property
    def dim(self):
        return self.rho0.shape[0]

    @property
    def lam(self):
        return float(np.trace(self.weight @ self.second))

    def with_weight(self, weight):
        return replace(self, weight=np.atleast_2d(np.asarray(weight, dtype=float)))

    def whitened(self):
        """Equivalent moments with identity weight.

        With ``L = sqrt(L) sqrt(L)`` the loss ``(t - f)^T L (t - f)`` equals the
        identity-weight loss in the coordinates ``sqrt(L) f``, so every moment is
        transformed linearly and every bound is unchanged.
        """
        root = np.real(sqrtm(self.weight))
        root = 0.5 * (root + root.T)
        rb = np.einsum("ij,jab->iab", root, self.rho_bar)
        return ModelMoments(
            self.rho0, rb, root @ self.mu, root @ self.second @ root, np.eye(self.d)
        )


@dataclass(frozen=True)
class PriorAxis:
    """One factor of a product prior.

    ``kind`` is ``"uniform"`` on ``[low, high]``, ``"jeffreys-log"`` (density
    proportional to ``1/theta``, so uniform in ``log theta``) on ``[low, high]``
    with ``low > 0``, or ``"beta"``, the symmetric beta density proportional to
    ``(1 - (theta/W)^2)^(beta - 1)`` on ``[-W, W]`` with ``W = high = -low``.
    """

    kind: str
    low: float
    high: float
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "jeffreys-log", "beta"):
            raise PriorError(f"unknown prior kind {self.kind!r}")
        if not (np.isfinite(self.low) and np.isfinite(self.high) and self.low < self.high):
            raise PriorError(f"prior support [{self.low}, {self.high}] is empty or unbounded")
        if self.kind == "jeffreys-log" and self.low <= 0:
            raise PriorError("a log-uniform prior needs a positive lower end")
        if self.kind == "beta":
            if not self.beta > 0:
                raise PriorError(f"beta prior needs beta > 0, got {self.beta}")
            if abs(self.low + self.high) > 1e-12 * self.high:
                raise PriorError("beta prior must be centred at zero")

    def rule(self, order):
        """Nodes in theta and probability weights summing to one."""
        if self.kind == "uniform":
            r = specfun.gl_nodes(order, self.low, self.high)
            return r.nodes, r.weights / (self.high - self.low)
        if self.kind == "jeffreys-log":
            a, b = math.log(self.low), math.log(self.high)
            r = specfun.gl_nodes(order, a, b)
            return np.exp(r.nodes), r.weights / (b - a)
        r = specfun.gauss_jacobi(order, self.beta - 1.0, self.beta - 1.0, self.low, self.high)
        return r.nodes, r.weights


def apply_symmetry(symmetry, theta):
    theta = np.asarray(theta, dtype=float)
    out = theta.copy()
    for i, tag in enumerate(symmetry):
        if tag == "log":
            if np.any(theta[..., i] <= 0):
                raise ModelError(f"log symmetry map on parameter {i} needs positive values")
            out[..., i] = np.log(theta[..., i])
    return out


def invert_symmetry(symmetry, t):
    t = np.asarray(t, dtype=float)
    out = t.copy()
    for i, tag in enumerate(symmetry):
        if tag == "log":
            out[..., i] = np.exp(t[..., i])
    return out


class Model:
    """Common interface of product-prior and grid models.

    Subclasses provide :meth:`quadrature_chunks` and :meth:`states`.
    """

    name = "model"

    def __init__(self, d, hilbert_dim, weight, symmetry=None, params=None):
        self.d = int(d)
        self.hilbert_dim = int(hilbert_dim)
        weight = np.atleast_2d(np.asarray(weight, dtype=float))
        if weight.shape != (self.d, self.d):
            raise ModelError(f"weight must be {self.d}x{self.d}")
        if np.abs(weight - weight.T).max() > 1e-12 * max(1.0, np.abs(weight).max()):
            raise ModelError("weight matrix is not symmetric")
        if np.linalg.eigvalsh(weight)[0] < -1e-12 * max(1.0, np.abs(weight).max()):
            raise ModelError("weight matrix is not PSD")
        self.weight = 0.5 * (weight + weight.T)
        symmetry = tuple(symmetry or ("identity",) * self.d)
        if len(symmetry) != self.d or any(s not in SYMMETRY_MAPS for s in symmetry):
            raise ModelError(f"bad symmetry tags {symmetry!r}")
        self.symmetry = symmetry
        self.params = dict(params or {})

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({self.name}: {args})"

    default_order = 20

    def f(self, theta):
        return apply_symmetry(self.symmetry, theta)

    def state_at(self, theta):
        return self.states(np.atleast_2d(np.asarray(theta, dtype=float)))[0]

    def states(self, points):
        raise NotImplementedError

    def quadrature_chunks(self, order=None, chunk=_CHUNK):
        raise NotImplementedError

    def analytic_moments(self):
        """Closed-form moments, or ``None`` when the model has none."""
        return None

    def moments(self, order=None, analytic=True):
        if analytic:
            m = self.analytic_moments()
            if m is not None:
                return m
        return moments_numeric(self, order)

    def f_box(self):
        """Per-axis range of ``f(theta)`` over the prior support."""
        raise NotImplementedError

    def with_weight(self, weight):
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        Model.__init__(clone, self.d, self.hilbert_dim, weight, self.symmetry, self.params)
        return clone

    def restricted(self, i):
        """Same model with loss on parameter ``i`` only (weight ``e_i e_i^T``)."""
        w = np.zeros((self.d, self.d))
        w[i, i] = 1.0
        return self.with_weight(w)


class ProductModel(Model):
    """Model with a product prior and a vectorised state map.

    ``state_fn`` maps an ``(N, d)`` array of parameters to ``(N, D, D)`` states.
    ``closed_form`` is an optional zero-argument callable returning
    :class:`ModelMoments` for identity weight, rescaled here to ``weight``.
    """

    def __init__(self, name, axes, state_fn, hilbert_dim, weight, symmetry=None,
                 params=None, closed_form=None, default_order=None):
        super().__init__(len(axes), hilbert_dim, weight, symmetry, params)
        self.name = name
        self.axes = tuple(axes)
        self.state_fn = state_fn
        self.closed_form = closed_form
        if default_order is None:
            default_order = 60 if self.d <= 2 else 24 if self.d <= 4 else 12
        self.default_order = default_order

    def states(self, points):
        return self.state_fn(np.asarray(points, dtype=float))

    def quadrature_chunks(self, order=None, chunk=_CHUNK):
        order = order or self.default_order
        rules = [ax.rule(order) for ax in self.axes]
        sizes = [len(r[0]) for r in rules]
        total = int(np.prod(sizes))
        for start in range(0, total, chunk):
            idx = np.unravel_index(np.arange(start, min(total, start + chunk)), sizes)
            pts = np.stack([rules[k][0][idx[k]] for k in range(self.d)], axis=1)
            wts = np.prod([rules[k][1][idx[k]] for k in range(self.d)], axis=0)
            yield pts, wts

    def analytic_moments(self):
        if self.closed_form is None:
            return None
        return self.closed_form().with_weight(self.weight)

    def f_box(self):
        lo = np.array([ax.low for ax in self.axes])
        hi = np.array([ax.high for ax in self.axes])
        return self.f(lo), self.f(hi)


class GridModel(Model):
    """Model with a discrete prior: a finite list of (theta, weight, state)."""

    name = "grid"

    def __init__(self, thetas, probs, rhos, weight, symmetry=None, params=None, tol=1e-6):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas[:, None]
        probs = np.asarray(probs, dtype=float)
        rhos = np.asarray(rhos, dtype=complex)
        k, d = thetas.shape
        if probs.shape != (k,) or rhos.ndim != 3 or rhos.shape[0] != k:
            raise ModelError("grid records have inconsistent lengths")
        super().__init__(d, rhos.shape[1], weight, symmetry, params)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > tol:
            raise PriorError(f"grid weights must be non-negative and sum to 1, got {probs.sum()!r}")
        _check_states(rhos)
        self.f(thetas)
        self.thetas = thetas
        self.probs = probs
        self.rhos = 0.5 * (rhos + dag(rhos))
        self.default_order = None

    def states(self, points):
        points = np.asarray(points, dtype=float)
        out = np.empty((len(points),) + self.rhos.shape[1:], dtype=complex)
        for n, p in enumerate(points):
            hit = np.flatnonzero(np.all(np.isclose(self.thetas, p, rtol=0, atol=1e-12), axis=1))
            if hit.size == 0:
                raise ModelError(f"grid model has no record at theta = {p}")
            out[n] = self.rhos[hit[0]]
        return out

    def quadrature_chunks(self, order=None, chunk=_CHUNK):
        yield self.thetas, self.probs

    def iter_states(self):
        yield self.thetas, self.probs, self.rhos

    def analytic_moments(self):
        return _moments_from_samples(self, [(self.thetas, self.probs, self.rhos)])

    def f_box(self):
        fv = self.f(self.thetas)
        return fv.min(axis=0), fv.max(axis=0)


def _check_states(rhos, tol=DEFAULT_TOL.trace):
    tr = np.trace(rhos, axis1=1, axis2=2)
    if np.any(np.abs(tr - 1.0) > 1e-8):
        bad = int(np.argmax(np.abs(tr - 1.0)))
        raise ModelError(f"state {bad} has trace {tr[bad]!r}")
    herm = np.abs(rhos - dag(rhos)).max(axis=(1, 2))
    if np.any(herm > 1e-9):
        raise ModelError("sampled state is not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (rhos + dag(rhos)))[:, 0]
    if np.any(w < -1e-10):
        bad = int(np.argmin(w))
        raise ModelError(f"state {bad} has negative eigenvalue {w[bad]:.3e}")


def _iter_model_states(model, order):
    if isinstance(model, GridModel):
        yield from model.iter_states()
        return
    for pts, wts in model.quadrature_chunks(order):
        yield pts, wts, model.states(pts)


def _moments_from_samples(model, samples, check=True):
    dim, d = model.hilbert_dim, model.d
    rho0 = np.zeros((dim, dim), dtype=complex)
    rb = np.zeros((d, dim * dim), dtype=complex)
    first = np.zeros(d)
    second = np.zeros((d, d))
    total = 0.0
    checked = False
    for pts, wts, rhos in samples:
        if check and not checked:
            _check_states(rhos[: min(len(rhos), 256)])
            checked = True
        fv = model.f(pts)
        flat = rhos.reshape(len(wts), -1)
        rho0 += (wts @ flat).reshape(dim, dim)
        rb += (wts[:, None] * fv).T @ flat
        first += wts @ fv
        second += (wts[:, None] * fv).T @ fv
        total += wts.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-8:
        raise PriorError(f"prior weights integrate to {total!r}, expected 1")
    return ModelMoments(rho0, rb.reshape(d, dim, dim), first, second, model.weight)


def moments_numeric(model, order_per_axis=None):
    """Moments by tensor Gauss quadrature (exact finite sums for grid models).

    Uniform axes use Gauss-Legendre, log-uniform axes use Gauss-Legendre in
    ``log theta`` and beta axes use Gauss-Jacobi. The grid is streamed in
    chunks and reduced in a fixed order, so results are reproducible bit for bit.
    """
    return _moments_from_samples(model, _iter_model_states(model, order_per_axis))


# --------------------------------------------------------------------------
# Imaging: generalised N00N state, one phase per arm, reference mode 0.


def moments_imaging(d, n, alpha):
    d, n, alpha = int(d), int(n), float(alpha)
    if d < 1 or n < 1 or not alpha > 0:
        raise ModelError("imaging model needs d >= 1, n >= 1 and alpha > 0")
    norm = d + alpha**2
    rho0 = np.diag([alpha**2] + [1.0] * d).astype(complex) / norm
    rb = np.zeros((d, d + 1, d + 1), dtype=complex)
    c = -1j * alpha / (n * norm)
    for j in range(d):
        rb[j, j + 1, 0] = c
        rb[j, 0, j + 1] = -c
    second = np.eye(d) * math.pi**2 / (3 * n**2)
    return ModelMoments(rho0, rb, np.zeros(d), second, np.eye(d) / d)


def imaging_model(d, n, alpha):
    """Phases ``theta_j`` uniform on ``[-pi/n, pi/n]`` imprinted on the state
    ``(alpha |0> + sum_j exp(-i n theta_j) |j>) / sqrt(d + alpha^2)``."""
    d, n, alpha = int(d), int(n), float(alpha)
    if d < 1 or n < 1 or not alpha > 0:
        raise ModelError("imaging model needs d >= 1, n >= 1 and alpha > 0")
    norm = math.sqrt(d + alpha**2)

    def state_fn(points):
        psi = np.empty((len(points), d + 1), dtype=complex)
        psi[:, 0] = alpha
        psi[:, 1:] = np.exp(-1j * n * points)
        psi /= norm
        return psi[:, :, None] * psi.conj()[:, None, :]

    half = math.pi / n
    axes = [PriorAxis("uniform", -half, half)] * d
    return ProductModel(
        "imaging", axes, state_fn, d + 1, np.eye(d) / d,
        params={"d": d, "n": n, "alpha": alpha},
        closed_form=lambda: moments_imaging(d, n, alpha).with_weight(np.eye(d)),
    )


# --------------------------------------------------------------------------
# Planar qubit tomography: Bloch vector (theta_1, theta_2, 0).


def _planar_check(W1, W2, beta):
    if not (W1 > 0 and W2 > 0):
        raise PriorError("planar widths must be positive")
    if W1**2 + W2**2 > 1 + 1e-12:
        raise ModelError(f"W1^2 + W2^2 = {W1**2 + W2**2:.6g} exceeds the Bloch disc")
    if not beta > 0:
        raise PriorError(f"beta must be positive, got {beta}")


def moments_planar(W1, W2, beta):
    W1, W2, beta = float(W1), float(W2), float(beta)
    _planar_check(W1, W2, beta)
    v = np.array([W1**2, W2**2]) / (1 + 2 * beta)
    rb = np.array([v[0] / 2 * PAULI["x"], v[1] / 2 * PAULI["y"]])
    return ModelMoments(np.eye(2, dtype=complex) / 2, rb, np.zeros(2), np.diag(v), np.eye(2))


def planar_model(W1, W2, beta):
    W1, W2, beta = float(W1), float(W2), float(beta)
    _planar_check(W1, W2, beta)

    def state_fn(points):
        out = np.empty((len(points), 2, 2), dtype=complex)
        out[:, 0, 0] = out[:, 1, 1] = 0.5
        out[:, 0, 1] = 0.5 * (points[:, 0] - 1j * points[:, 1])
        out[:, 1, 0] = 0.5 * (points[:, 0] + 1j * points[:, 1])
        return out

    axes = [PriorAxis("beta", -W1, W1, beta), PriorAxis("beta", -W2, W2, beta)]
    return ProductModel(
        "planar", axes, state_fn, 2, np.eye(2),
        params={"w1": W1, "w2": W2, "beta": beta},
        closed_form=lambda: moments_planar(W1, W2, beta),
        default_order=24,
    )


# --------------------------------------------------------------------------
# Phase and dephasing on n copies of a qubit.


def _pd_check(copies, W1, W2):
    if int(copies) != copies or copies < 1:
        raise ModelError(f"copies must be a positive integer, got {copies!r}")
    if copies > 8:
        raise ModelError("at most 8 copies are supported")
    if not W1 > 0:
        raise PriorError("phase window W1 must be positive")
    if not W2 > 1:
        raise PriorError(f"dephasing log-width needs W2 > 1, got {W2}")


def _pd_single(points):
    r = np.exp(-points[:, 1] ** 2)
    out = np.empty((len(points), 2, 2), dtype=complex)
    out[:, 0, 0] = out[:, 1, 1] = 0.5
    out[:, 0, 1] = 0.5 * r * np.exp(1j * points[:, 0])
    out[:, 1, 0] = np.conj(out[:, 0, 1])
    return out


def phase_dephasing_model(copies, W1, W2):
    """Qubit ``(I + exp(-theta_2^2)(cos theta_1 X - sin theta_1 Y)) / 2`` on
    ``copies`` copies. ``theta_1`` is uniform on ``[-W1/2, W1/2]``; ``theta_2``
    is log-uniform on ``[W2^(-1/2), W2^(1/2)]`` and its loss uses ``log theta_2``.
    """
    copies, W1, W2 = int(copies), float(W1), float(W2)
    _pd_check(copies, W1, W2)

    def state_fn(points):
        one = _pd_single(points)
        out = one
        for _ in range(copies - 1):
            k = out.shape[1]
            out = np.einsum("nij,nkl->nikjl", out, one).reshape(len(points), 2 * k, 2 * k)
        return out

    axes = [PriorAxis("uniform", -W1 / 2, W1 / 2), PriorAxis("jeffreys-log", W2**-0.5, W2**0.5)]
    return ProductModel(
        "phase-dephasing", axes, state_fn, 2**copies, np.eye(2), symmetry=("identity", "log"),
        params={"copies": copies, "w1": W1, "w2": W2},
        closed_form=lambda: moments_phase_dephasing(copies, W1, W2),
    )


def _pd_integrals(K, a, W1, W2):
    """Prior averages for an entry with ``K`` decaying and net ``a`` phase factors.

    Returns ``(E[g], E[theta_1 g], E[log(theta_2) g])`` for
    ``g = exp(-K theta_2^2) exp(i a theta_1)``.
    """
    h = W1 / 2
    if a == 0:
        phase, phase1 = 1.0, 0.0
    else:
        phase = math.sin(a * h) / (a * h)
        phase1 = 1j * (2.0 / W1) * (math.sin(a * h) / a**2 - h * math.cos(a * h) / a)
    lw = math.log(W2)
    if K == 0:
        dec, dec2 = 1.0, 0.0
    else:
        hi, lo = K * W2, K / W2
        ei_hi, ei_lo = specfun.expint_ei(-hi), specfun.expint_ei(-lo)
        dec = (ei_hi - ei_lo) / (2 * lw)

        def G(v):
            lv = math.log(v)
            return -0.5 * lv * lv + lv * (specfun.expint_ei(-v) - specfun.EULER_GAMMA) + v * specfun.xi_3f3(-v)

        dec2 = (G(hi) - G(lo) - math.log(K) * (ei_hi - ei_lo)) / (4 * lw)
    return phase * dec, phase1 * dec, phase * dec2


def moments_phase_dephasing(copies, W1, W2):
    """Closed-form n-copy moments of the phase-dephasing model.

    Entry ``(a, b)`` of the n-fold product is ``2^-n exp(-K theta_2^2)
    exp(i (k - m) theta_1)`` with ``k`` (``m``) the number of positions where
    ``a`` has a 0 (1) and ``b`` a 1 (0), and ``K = k + m``. The integrals
    therefore depend on ``(k, m)`` only and are evaluated once per pair.
    """
    copies, W1, W2 = int(copies), float(W1), float(W2)
    _pd_check(copies, W1, W2)
    D = 2**copies
    idx = np.arange(D)
    a, b = np.meshgrid(idx, idx, indexing="ij")
    popcount = np.vectorize(lambda x: bin(int(x)).count("1"))
    k = popcount(~a & b & (D - 1))
    m = popcount(a & ~b & (D - 1))
    rho0 = np.zeros((D, D), dtype=complex)
    rb = np.zeros((2, D, D), dtype=complex)
    for kk in range(copies + 1):
        for mm in range(copies + 1 - kk):
            mask = (k == kk) & (m == mm)
            if not mask.any():
                continue
            i0, i1, i2 = _pd_integrals(kk + mm, kk - mm, W1, W2)
            rho0[mask] = i0
            rb[0][mask] = i1
            rb[1][mask] = i2
    scale = 0.5**copies
    second = np.diag([W1**2 / 12, math.log(W2) ** 2 / 12])
    return ModelMoments(rho0 * scale, rb * scale, np.zeros(2), second, np.eye(2))


# --------------------------------------------------------------------------
# Grid-model text format.


def _floats(text, line, name):
    try:
        return [float(tok) for tok in text.split()]
    except ValueError:
        raise ParseError(f"cannot parse numbers in {name!r}", line=line, field=name) from None


def _complex_matrix(values, dim, line, name):
    if len(values) != 2 * dim * dim:
        raise ParseError(
            f"expected {2 * dim * dim} numbers for a {dim}x{dim} complex matrix, got {len(values)}",
            line=line, field=name,
        )
    arr = np.asarray(values).reshape(dim * dim, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)


def _parse_header(text, line, required):
    out = {}
    for tok in text.split():
        if "=" not in tok:
            raise ParseError(f"bad header token {tok!r}", line=line)
        key, val = tok.split("=", 1)
        try:
            out[key] = int(val)
        except ValueError:
            raise ParseError(f"header value {val!r} is not an integer", line=line, field=key) from None
    for key in required:
        if key not in out or out[key] < 1:
            raise ParseError(f"header needs a positive {key}", line=line, field=key)
    return out


def _split_record(text, line):
    fields = {}
    for part in text.split("|"):
        if ":" not in part:
            raise ParseError("record field lacks a ':'", line=line)
        key, val = part.split(":", 1)
        fields[key.strip()] = val
    return fields


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield n, text


def load_grid_model(path):
    """Read a grid model.

    Format (``#`` starts a comment)::

        d=1 dim=2
        L: 1
        f=identity
        theta: 0 | w: 0.5 | rho: 1 0 0 0 0 0 0 0
        theta: 1 | w: 0.5 | rho: 0 0 0 0 0 0 1 0

    ``L:`` lines are the rows of the weight matrix (identity if omitted). The
    ``f=`` line lists one symmetry tag per parameter. ``rho`` lists the
    matrix row-major as real/imaginary pairs.
    """
    lines = _content_lines(path)
    try:
        n, text = next(lines)
    except StopIteration:
        raise ParseError("file is empty") from None
    header = _parse_header(text, n, ("d", "dim"))
    d, dim = header["d"], header["dim"]
    weight_rows, symmetry = [], None
    thetas, probs, rhos = [], [], []
    for n, text in lines:
        if text.startswith("L:"):
            row = _floats(text[2:], n, "L")
            if len(row) != d:
                raise ParseError(f"weight row needs {d} entries", line=n, field="L")
            weight_rows.append(row)
        elif text.startswith("f="):
            symmetry = tuple(text[2:].replace(",", " ").split())
            if len(symmetry) != d or any(s not in SYMMETRY_MAPS for s in symmetry):
                raise ParseError(f"need {d} tags from {SYMMETRY_MAPS}", line=n, field="f")
        else:
            fields = _split_record(text, n)
            for key in ("theta", "w", "rho"):
                if key not in fields:
                    raise ParseError("record is missing a field", line=n, field=key)
            theta = _floats(fields["theta"], n, "theta")
            if len(theta) != d:
                raise ParseError(f"theta needs {d} entries", line=n, field="theta")
            w = _floats(fields["w"], n, "w")
            if len(w) != 1:
                raise ParseError("w needs exactly one number", line=n, field="w")
            thetas.append(theta)
            probs.append(w[0])
            rhos.append(_complex_matrix(_floats(fields["rho"], n, "rho"), dim, n, "rho"))
    if not thetas:
        raise ParseError("file contains no records")
    if weight_rows and len(weight_rows) != d:
        raise ParseError(f"weight matrix needs {d} rows, got {len(weight_rows)}", field="L")
    total = sum(probs)
    if abs(total - 1.0) > 1e-6 or min(probs) < 0:
        raise ParseError(f"record weights must be non-negative and sum to 1, got {total!r}", field="w")
    weight = np.array(weight_rows) if weight_rows else np.eye(d)
    model = GridModel(thetas, probs, rhos, weight, symmetry, params={"path": str(path)})
    return model


def _fmt(x):
    return format(float(x), ".17g")


def save_grid_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"d={model.d} dim={model.hilbert_dim}\n")
        for row in model.weight:
            fh.write("L: " + " ".join(_fmt(v) for v in row) + "\n")
        fh.write("f=" + " ".join(model.symmetry) + "\n")
        for th, w, rho in zip(model.thetas, model.probs, model.rhos):
            pairs = np.stack([rho.real.ravel(), rho.imag.ravel()], axis=1).ravel()
            fh.write(
                "theta: " + " ".join(_fmt(v) for v in th)
                + " | w: " + _fmt(w)
                + " | rho: " + " ".join(_fmt(v) for v in pairs) + "\n"
            )


def random_grid_model(rng, d, dim, points=None, weight=None, commuting=False, rank=None):
    """Random grid model for property tests.

    States are random mixed states (``rank`` controls their rank) or, with
    ``commuting=True``, random diagonal states so every moment commutes.
    """
    points = points or 3 * dim
    thetas = rng.normal(size=(points, d))
    probs = rng.dirichlet(np.ones(points))
    rank = rank or dim
    rhos = np.empty((points, dim, dim), dtype=complex)
    for k in range(points):
        if commuting:
            p = rng.dirichlet(np.ones(dim))
            rhos[k] = np.diag(p)
        else:
            g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
            r = g @ g.conj().T
            rhos[k] = r / np.trace(r).real
    if weight is None:
        weight = np.eye(d)
    return GridModel(thetas, probs, rhos, weight, params={"random": True})
