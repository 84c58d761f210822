"""A small interior-point SDP solver and the NH and Holevo bounds built on it.

Problems are stated in the form::

    minimise    c^T y + offset
    subject to  F_b(y) = F_b0 + sum_k y_k F_bk  is PSD for every block b
                E y = f

with real variables ``y`` and Hermitian (possibly complex) blocks. The
coefficient matrices are stored as sparse triplets because each variable
touches only a handful of entries in the bound formulations.

The dual problem is ``maximise -sum_b <X_b, F_b0> + f^T w`` over PSD ``X_b``
with ``sum_b <X_b, F_bk> + (E^T w)_k = c_k``. The solver is an infeasible
primal-dual path-following method with Nesterov-Todd scaling and Mehrotra
predictor-corrector steps.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
import scipy.sparse as sp

from .errors import DomainError, Infeasible, MaxIters
from .linops import support
from .tolerances import DEFAULT_TOL

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "solve_sdp",
    "BoundResult",
    "nh_bound",
    "holevo_bound",
    "nagaoka_two_param",
    "hermitian_basis",
]


# --------------------------------------------------------------------------
# Problem container


@dataclass
class _Block:
    size: int
    const: np.ndarray
    var: list = field(default_factory=list)
    row: list = field(default_factory=list)
    col: list = field(default_factory=list)
    val: list = field(default_factory=list)


class SdpProblem:
    """Builder for an SDP in the form described in the module docstring.

    Entries are added for the upper or lower triangle only; the Hermitian
    mirror is filled in automatically.
    """

    def __init__(self):
        self.n_vars = 0
        self.cost = []
        self.offset = 0.0
        self.blocks = []
        self.eq_rows = []
        self.eq_rhs = []

    def add_vars(self, count, cost=0.0):
        start = self.n_vars
        self.n_vars += int(count)
        self.cost.extend(np.broadcast_to(np.asarray(cost, dtype=float), (int(count),)).tolist())
        return np.arange(start, self.n_vars)

    def set_cost(self, idx, value):
        idx = np.atleast_1d(idx)
        value = np.broadcast_to(np.asarray(value, dtype=float), idx.shape)
        for i, v in zip(idx, value):
            self.cost[int(i)] = float(v)

    def add_block(self, size, const=None):
        const = np.zeros((size, size), dtype=complex) if const is None else np.asarray(const, dtype=complex)
        if const.shape != (size, size):
            raise ValueError("constant term has the wrong shape")
        if np.abs(const - const.conj().T).max(initial=0) > 1e-12 * max(1.0, np.abs(const).max(initial=0)):
            raise ValueError("constant term is not Hermitian")
        self.blocks.append(_Block(size, 0.5 * (const + const.conj().T)))
        return len(self.blocks) - 1

    def add_entries(self, block, var, row, col, val):
        """Add ``val`` at ``(row, col)`` of ``F_{block, var}`` and the conjugate at ``(col, row)``."""
        var, row, col = (np.atleast_1d(np.asarray(a, dtype=np.int64)) for a in (var, row, col))
        val = np.atleast_1d(np.asarray(val, dtype=complex))
        var, row, col, val = np.broadcast_arrays(var, row, col, val)
        blk = self.blocks[block]
        if np.any(var >= self.n_vars) or np.any(var < 0):
            raise ValueError("variable index out of range")
        if np.any((row < 0) | (row >= blk.size) | (col < 0) | (col >= blk.size)):
            raise ValueError("entry outside the block")
        diag = row == col
        if np.any(np.abs(val[diag].imag) > 0):
            raise ValueError("diagonal coefficients must be real")
        off = ~diag
        blk.var += [var, var[off]]
        blk.row += [row, col[off]]
        blk.col += [col, row[off]]
        blk.val += [val, np.conj(val[off])]

    def add_equality(self, coeffs, rhs):
        """Add ``sum_k coeffs[k] y_k = rhs``; ``coeffs`` maps index to value."""
        row = np.zeros(self.n_vars)
        for k, v in dict(coeffs).items():
            row[int(k)] += float(v)
        self.eq_rows.append(row)
        self.eq_rhs.append(float(rhs))

    def finalize(self):
        blocks = []
        for b in self.blocks:
            cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
            blocks.append(_Compiled(
                b.size, b.const, cat(b.var, np.int64), cat(b.row, np.int64),
                cat(b.col, np.int64), cat(b.val, complex), self.n_vars,
            ))
        E = np.array([np.pad(r, (0, self.n_vars - len(r))) for r in self.eq_rows]).reshape(-1, self.n_vars)
        return np.asarray(self.cost, dtype=float), blocks, E, np.asarray(self.eq_rhs, dtype=float)


class _Compiled:
    """One LMI block with triplet coefficients and cached sparse views."""

    def __init__(self, size, const, var, row, col, val, m):
        self.n = size
        self.const = const
        self.var, self.row, self.col, self.val = var, row, col, val
        N = len(var)
        self.B = sp.csr_matrix((val, (np.arange(N), var)), shape=(N, m))
        self.Bh = sp.csr_matrix((np.conj(val), (np.arange(N), var)), shape=(N, m)).T.tocsr()
        self.flat = self.row * size + self.col
        self.lin_map = sp.csr_matrix((val, (self.flat, var)), shape=(size * size, m))
        self.adj_map = self.lin_map.conj().T.tocsr()
        self.norms = np.sqrt(np.bincount(var, weights=np.abs(val) ** 2, minlength=m))

    def lin(self, y):
        return (self.lin_map @ y).reshape(self.n, self.n)

    def adj(self, X):
        return np.real(self.adj_map @ X.reshape(-1))

    def schur(self, W, chunk=None):
        """``H_kl = <F_k, W F_l W>`` assembled from the triplets."""
        N = len(self.var)
        m = self.B.shape[1]
        H = np.zeros((m, m))
        if N == 0:
            return H
        r, s = self.row, self.col
        chunk = chunk or max(1, int(4e6 // N))
        Bd = self.B
        for start in range(0, N, chunk):
            sl = slice(start, min(N, start + chunk))
            P = W[np.ix_(r[sl], r)] * W[np.ix_(s, s[sl])].T
            T = (Bd.T @ P.T).T
            H += np.real(self.Bh[:, sl] @ T)
        return 0.5 * (H + H.T)


# --------------------------------------------------------------------------
# Solver


@dataclass
class SdpSolution:
    status: str
    primal: float
    dual: float
    gap: float
    y: np.ndarray
    X: list
    Z: list
    iterations: int
    primal_infeas: float
    dual_infeas: float
    w: np.ndarray = None

    @property
    def value(self):
        return self.primal


def _inner(A, B):
    return float(np.real(np.vdot(A, B)))


def _step_to_boundary(lam, dT):
    """Largest ``a`` with ``diag(lam) + a dT`` PSD (``inf`` if unbounded)."""
    s = 1.0 / np.sqrt(lam)
    M = s[:, None] * dT * s[None, :]
    e = np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0]
    return math.inf if e >= 0 else -1.0 / e


def solve_sdp(problem, gap_tol=DEFAULT_TOL.gap_tol, feas_tol=DEFAULT_TOL.feas_tol,
              max_iters=DEFAULT_TOL.max_iters, raise_on_failure=True):
    """Solve ``problem`` and return an :class:`SdpSolution`.

    Stops when the relative primal and dual residuals are below ``feas_tol``
    and the duality gap is below ``gap_tol * max(1, |primal|)``.

    Raises
    ------
    Infeasible
        The dual iterates diverge along a ray certifying that no ``y`` makes
        every block PSD.
    MaxIters
        No convergence within ``max_iters``; ``err.solution`` has the last
        iterate. Pass ``raise_on_failure=False`` to get it returned instead.
    """
    c, blocks, E, f = problem.finalize()
    m = len(c)
    p = E.shape[0]
    offset = problem.offset
    n_tot = sum(b.n for b in blocks)
    if n_tot == 0:
        raise ValueError("problem has no LMI blocks")

    normF0 = math.sqrt(sum(np.linalg.norm(b.const) ** 2 for b in blocks))
    normc = np.linalg.norm(c)
    normFk = np.sqrt(sum(b.norms**2 for b in blocks)) if m else np.zeros(0)
    xi = max(10.0, math.sqrt(n_tot), n_tot * max([(1 + abs(ck)) / (1 + nk) for ck, nk in zip(c, normFk)] or [1.0]))
    zeta = max(10.0, math.sqrt(n_tot), normF0, float(normFk.max(initial=0.0)))
    y = np.zeros(m)
    w = np.zeros(p)
    X = [xi * np.eye(b.n, dtype=complex) for b in blocks]
    Z = [zeta * np.eye(b.n, dtype=complex) for b in blocks]

    status = "max-iters"
    it = 0
    rec = None
    for it in range(max_iters + 1):
        Fy = [b.const + b.lin(y) for b in blocks]
        Rz = [F - Zb for F, Zb in zip(Fy, Z)]
        AX = sum(b.adj(Xb) for b, Xb in zip(blocks, X)) if m else np.zeros(0)
        rc = c - AX - E.T @ w
        re = f - E @ y
        pobj = float(c @ y) + offset
        dobj = -sum(_inner(Xb, b.const) for b, Xb in zip(blocks, X)) + float(f @ w) + offset
        xz = sum(_inner(Xb, Zb) for Xb, Zb in zip(X, Z))
        pinf = math.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rz) + np.linalg.norm(re) ** 2) / (1 + normF0)
        dinf = np.linalg.norm(rc) / (1 + normc)
        gap = max(abs(pobj - dobj), xz)
        rec = (pobj, dobj, gap, pinf, dinf)
        if pinf <= feas_tol and dinf <= feas_tol and gap <= gap_tol * max(1.0, abs(pobj)):
            status = "optimal"
            break
        # Ray certificate: X grows while its image under the adjoint stays small.
        dray = dobj - offset
        if dray > 0 and pinf > feas_tol and np.linalg.norm(AX + E.T @ w) <= 1e-8 * dray:
            status = "infeasible"
            break
        if it == max_iters:
            break

        try:
            scal = []
            for Xb, Zb in zip(X, Z):
                Lx = np.linalg.cholesky(Xb)
                Lz = np.linalg.cholesky(Zb)
                U, S, Vh = np.linalg.svd(Lz.conj().T @ Lx)
                R = (Lx @ Vh.conj().T) / np.sqrt(S)[None, :]
                Rinv = (np.sqrt(S)[:, None] * Vh) @ sla.solve_triangular(Lx, np.eye(len(S)), lower=True)
                scal.append((R, Rinv, R @ R.conj().T, S))
        except np.linalg.LinAlgError:
            break

        H = sum(b.schur(Wb) for b, (_, _, Wb, _) in zip(blocks, scal)) if m else np.zeros((0, 0))
        if p:
            K = np.block([[H, -E.T], [E, np.zeros((p, p))]])
            lu = sla.lu_factor(K)
            solve_k = lambda rhs: sla.lu_solve(lu, rhs)
        else:
            reg = 0.0
            while True:
                try:
                    cho = sla.cho_factor(H + reg * np.eye(m), lower=True)
                    break
                except np.linalg.LinAlgError:
                    reg = max(reg * 100, 1e-14 * max(1.0, np.trace(H) / max(m, 1)))
                    if reg > 1e-2:
                        raise
            solve_k = lambda rhs: sla.cho_solve(cho, rhs)

        def direction(Us):
            g = -rc.copy()
            G = []
            for b, (R, _, Wb, _), Ub, Rzb in zip(blocks, scal, Us, Rz):
                Gb = R @ Ub @ R.conj().T - Wb @ Rzb @ Wb
                G.append(Gb)
                if m:
                    g += b.adj(Gb)
            sol = solve_k(np.concatenate([g, re])) if p else solve_k(g)
            dy, dw = sol[:m], sol[m:]
            dZ = [Rzb + b.lin(dy) for b, Rzb in zip(blocks, Rz)]
            dX = [Gb + Wb @ Rzb @ Wb - Wb @ dZb @ Wb for Gb, (_, _, Wb, _), Rzb, dZb in zip(G, scal, Rz, dZ)]
            return dy, dw, dX, dZ

        def steps(dX, dZ):
            ap = ad = 1.0
            tX, tZ = [], []
            for (R, Rinv, _, lam), dXb, dZb in zip(scal, dX, dZ):
                dXt = Rinv @ dXb @ Rinv.conj().T
                dZt = R.conj().T @ dZb @ R
                tX.append(dXt)
                tZ.append(dZt)
                ad = min(ad, _step_to_boundary(lam, dXt))
                ap = min(ap, _step_to_boundary(lam, dZt))
            return ap, ad, tX, tZ

        # Predictor: affine-scaling direction.
        Us = [-np.diag(lam).astype(complex) for (_, _, _, lam) in scal]
        dy, dw, dX, dZ = direction(Us)
        ap, ad, tX, tZ = steps(dX, dZ)
        mu = xz / n_tot
        mu_aff = sum(_inner(Xb + ad * dXb, Zb + ap * dZb) for Xb, dXb, Zb, dZb in zip(X, dX, Z, dZ)) / n_tot
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # Corrector with centring.
        Us = []
        for (_, _, _, lam), a, b in zip(scal, tX, tZ):
            prod = 0.5 * (a @ b + b @ a)
            rhs = sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - prod
            Us.append(2.0 * rhs / (lam[:, None] + lam[None, :]))
        dy, dw, dX, dZ = direction(Us)
        ap, ad, _, _ = steps(dX, dZ)
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        y = y + ap * dy
        Z = [Zb + ap * d for Zb, d in zip(Z, dZ)]
        X = [Xb + ad * d for Xb, d in zip(X, dX)]
        w = w + ad * dw
        Z = [0.5 * (A + A.conj().T) for A in Z]
        X = [0.5 * (A + A.conj().T) for A in X]

    pobj, dobj, gap, pinf, dinf = rec
    sol = SdpSolution(status, pobj, dobj, gap, y, X, Z, it, pinf, dinf, w)
    if raise_on_failure:
        if status == "infeasible":
            raise Infeasible("LMI constraints are infeasible", sol)
        if status != "optimal":
            raise MaxIters(
                f"no convergence after {it} iterations (gap {gap:.2e}, "
                f"primal infeasibility {pinf:.2e}, dual infeasibility {dinf:.2e})", sol
            )
    return sol


# --------------------------------------------------------------------------
# Hermitian parametrisation


def hermitian_basis(D):
    """Real coordinates of a D x D Hermitian matrix.

    Returns arrays ``(a, b, kind)`` with ``kind`` 0 for the real part and 1 for
    the imaginary part of entry ``(a, b)``, ``a <= b``. Basis matrices are
    ``E_aa``; ``E_ab + E_ba``; ``i E_ab - i E_ba``.
    """
    a, b = np.triu_indices(D)
    off = a != b
    A = np.concatenate([a, a[off]])
    B = np.concatenate([b, b[off]])
    kind = np.concatenate([np.zeros(len(a), int), np.ones(off.sum(), int)])
    return A, B, kind


def _basis_values(kind):
    """Value placed at ``(a, b)`` by each basis matrix (mirror is implied)."""
    return np.where(kind == 0, 1.0 + 0j, 1j)


def _coords_to_matrix(D, x):
    a, b, kind = hermitian_basis(D)
    M = np.zeros((D, D), dtype=complex)
    np.add.at(M, (a, b), x * _basis_values(kind))
    off = a != b
    np.add.at(M, (b[off], a[off]), np.conj(x[off] * _basis_values(kind[off])))
    return M


def _trace_with_basis(A, D):
    """``Re tr(A B_k)`` for every Hermitian basis matrix ``B_k``."""
    a, b, kind = hermitian_basis(D)
    off = a != b
    out = np.where(kind == 0, np.real(A[b, a] + A[a, b]), np.real(1j * (A[b, a] - A[a, b])))
    out = np.where(off | (kind == 1), out, np.real(A[a, a]))
    return out


# --------------------------------------------------------------------------
# Bound formulations


class BoundResult(NamedTuple):
    loss: float
    first_moments: np.ndarray
    second_moments: np.ndarray
    solution: SdpSolution
    dual_loss: float


def _reduce_weight(m):
    """Express the bound in coordinates where the weight is the identity.

    For singular weights only the range of ``L`` matters. Returns
    ``(root, rb_white, lam)`` with ``root`` of shape ``(r, d)`` such that
    ``L = root^T root``.
    """
    vals, vecs = np.linalg.eigh(m.weight)
    keep = vals > 1e-12 * max(1.0, vals.max())
    root = (vecs[:, keep] * np.sqrt(vals[keep])).T
    rb = np.einsum("ij,jab->iab", root, m.rho_bar)
    return root, rb, m.lam


def _support_frame(m, tol):
    p, v = support(m.rho0, tol.rank)
    return p, v


def _spm_shortcut(m, tol):
    from .bounds import spm

    s = spm(m, tol)
    second = np.einsum("iab,jbc->ijac", s.operators, s.operators)
    return BoundResult(s.loss, s.operators, second, None, s.loss)


def nh_bound(m, tol=DEFAULT_TOL, force_sdp=False, general_weight=True):
    """Nagaoka-Hayashi bound.

    Minimises ``lambda + L^{ij} tr(rho0 M_ji) - 2 L^{ij} tr(rho_bar_j M_i)``
    over Hermitian ``M_i`` and ``M_ij = M_ji`` subject to the block matrix
    ``[[S, V], [V^H, I]]`` being PSD, where ``S`` has blocks ``M_ij`` and ``V``
    stacks the ``M_i``. The problem lives on the support of ``rho0``.

    If ``L`` has rank at most one the bound equals the SPM bound and no SDP is
    solved unless ``force_sdp`` is set. With ``general_weight=False`` the
    problem is first whitened to identity weight.
    """
    rank_l = int(np.sum(np.linalg.eigvalsh(m.weight) > 1e-12 * max(1.0, np.abs(m.weight).max())))
    if rank_l <= 1 and not force_sdp:
        return _spm_shortcut(m, tol)
    p, v = _support_frame(m, tol)
    D = len(p)
    rho0 = np.diag(p).astype(complex)
    if general_weight and np.linalg.eigvalsh(m.weight)[0] > 1e-10 * np.abs(m.weight).max():
        L = m.weight
        rb = np.einsum("ai,kab,bj->kij", v.conj(), m.rho_bar, v)
    else:
        root, rbw, _ = _reduce_weight(m)
        L = np.eye(root.shape[0])
        rb = np.einsum("ai,kab,bj->kij", v.conj(), rbw, v)
    d = len(rb)
    nb = D * D
    a_idx, b_idx, kind = hermitian_basis(D)
    vals = _basis_values(kind)
    prob = SdpProblem()
    prob.offset = m.lam
    blk = prob.add_block((d + 1) * D, np.diag(np.r_[np.zeros(d * D), np.ones(D)]))
    first = []
    for i in range(d):
        cost = -2.0 * sum(L[i, j] * _trace_with_basis(rb[j], D) for j in range(d))
        ids = prob.add_vars(nb, cost)
        first.append(ids)
        # V block at (i, d) and its mirror.
        prob.add_entries(blk, ids, i * D + a_idx, d * D + b_idx, vals)
        off = a_idx != b_idx
        prob.add_entries(blk, ids[off], i * D + b_idx[off], d * D + a_idx[off], np.conj(vals[off]))
    tr0 = _trace_with_basis(rho0, D)
    second = {}
    for i in range(d):
        for j in range(i, d):
            cost = (L[i, j] if i == j else 2.0 * L[i, j]) * tr0
            ids = prob.add_vars(nb, cost)
            second[(i, j)] = ids
            prob.add_entries(blk, ids, i * D + a_idx, j * D + b_idx, vals)
            off = a_idx != b_idx
            if i == j:
                continue
            prob.add_entries(blk, ids[off], i * D + b_idx[off], j * D + a_idx[off], np.conj(vals[off]))
    sol = solve_sdp(prob, tol.gap_tol, tol.feas_tol, tol.max_iters)
    Ms = np.array([v @ _coords_to_matrix(D, sol.y[ids]) @ v.conj().T for ids in first])
    Mij = np.zeros((d, d) + (m.dim, m.dim), dtype=complex)
    for (i, j), ids in second.items():
        Mij[i, j] = Mij[j, i] = v @ _coords_to_matrix(D, sol.y[ids]) @ v.conj().T
    return BoundResult(sol.primal, Ms, Mij, sol, sol.dual)


def holevo_bound(m, tol=DEFAULT_TOL, force_sdp=False):
    """Bayesian Holevo bound.

    Minimises ``lambda + tr(L V) - 2 L^{ij} tr(rho_bar_j M_i)`` over real
    symmetric ``V`` and Hermitian ``M_i`` with ``V - Re Z`` dominating the
    imaginary part in the sense ``[[V, X^H], [X, I]]`` PSD, where the columns of
    ``X`` are ``vec(M_i sqrt(rho0))`` so ``X^H X = Z``, ``Z_ij = tr(rho0 M_i M_j)``.
    Minimising over ``V`` for fixed ``M`` reproduces
    ``tr(L Re Z) + ||sqrt(L) Im Z sqrt(L)||_1``.
    """
    rank_l = int(np.sum(np.linalg.eigvalsh(m.weight) > 1e-12 * max(1.0, np.abs(m.weight).max())))
    if rank_l <= 1 and not force_sdp:
        return _spm_shortcut(m, tol)
    p, v = _support_frame(m, tol)
    D = len(p)
    if np.linalg.eigvalsh(m.weight)[0] > 1e-10 * np.abs(m.weight).max():
        L = m.weight
        rb = np.einsum("ai,kab,bj->kij", v.conj(), m.rho_bar, v)
    else:
        root, rbw, _ = _reduce_weight(m)
        L = np.eye(root.shape[0])
        rb = np.einsum("ai,kab,bj->kij", v.conj(), rbw, v)
    d = len(rb)
    sq = np.sqrt(p)
    prob = SdpProblem()
    prob.offset = m.lam
    size = d + D * D
    const = np.zeros((size, size), dtype=complex)
    const[d:, d:] = np.eye(D * D)
    blk = prob.add_block(size, const)
    iu, ju = np.triu_indices(d)
    vids = prob.add_vars(len(iu), np.where(iu == ju, np.diag(L)[iu], 2.0 * L[iu, ju]))
    prob.add_entries(blk, vids, iu, ju, 1.0)
    a_idx, b_idx, kind = hermitian_basis(D)
    vals = _basis_values(kind)
    off = a_idx != b_idx
    first = []
    for i in range(d):
        cost = -2.0 * sum(L[i, j] * _trace_with_basis(rb[j], D) for j in range(d))
        ids = prob.add_vars(len(a_idx), cost)
        first.append(ids)
        # X[(a, b), i] = M_ab sqrt(p_b); entry (a, b) of the basis and its mirror (b, a).
        prob.add_entries(blk, ids, d + a_idx * D + b_idx, i, vals * sq[b_idx])
        prob.add_entries(blk, ids[off], d + b_idx[off] * D + a_idx[off], i, np.conj(vals[off]) * sq[a_idx[off]])
    sol = solve_sdp(prob, tol.gap_tol, tol.feas_tol, tol.max_iters)
    Ms = np.array([v @ _coords_to_matrix(D, sol.y[ids]) @ v.conj().T for ids in first])
    Vm = np.zeros((d, d))
    Vm[iu, ju] = sol.y[vids]
    Vm[ju, iu] = sol.y[vids]
    return BoundResult(sol.primal, Ms, Vm, sol, sol.dual)


def nagaoka_two_param(m, tol=DEFAULT_TOL, eps_schedule=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10)):
    """Two-parameter Nagaoka form of the NH bound.

    After whitening to identity weight the bound is::

        lambda + min_{M1, M2} tr rho0 (M1^2 + M2^2)
                 + || sqrt(rho0) [M1, M2] sqrt(rho0) ||_1
                 - 2 tr(rho_bar_1 M1 + rho_bar_2 M2)

    This is minimised directly over Hermitian ``M1, M2`` with L-BFGS. The
    trace norm is smoothed as ``sum sqrt(e^2 + eps^2)`` and ``eps`` is driven
    to zero along ``eps_schedule``, warm-starting each stage at the SPM
    operators or the previous optimum. The route shares no code with the
    SDP, which makes it a useful cross-check.
    """
    if m.d != 2:
        raise DomainError(f"the two-parameter form needs d = 2, got d = {m.d}")
    from .bounds import spm

    w = m.whitened()
    p, v = support(w.rho0, tol.rank)
    D = len(p)
    rb = np.einsum("ai,kab,bj->kij", v.conj(), w.rho_bar, v)
    rho0 = np.diag(p).astype(complex)
    sq = np.sqrt(p)
    n = D * D
    c1 = _trace_with_basis(rb[0], D)
    c2 = _trace_with_basis(rb[1], D)
    a_idx, b_idx, kind = hermitian_basis(D)

    def unpack(x):
        return _coords_to_matrix(D, x[:n]), _coords_to_matrix(D, x[n:])

    def grad_coords(A):
        # gradient of Re tr(A dM) in basis coordinates
        return _trace_with_basis(A, D)

    def fun(x, eps):
        M1, M2 = unpack(x)
        C = M1 @ M2 - M2 @ M1
        K = 1j * (sq[:, None] * C * sq[None, :])
        K = 0.5 * (K + K.conj().T)
        e, U = np.linalg.eigh(K)
        smooth = np.sqrt(e * e + eps * eps)
        val = (np.real(np.trace(rho0 @ (M1 @ M1 + M2 @ M2))) + smooth.sum()
               - 2 * (c1 @ x[:n] + c2 @ x[n:]))
        if eps == 0:
            return val, None
        Gk = (U * (e / smooth)) @ U.conj().T
        Q = sq[:, None] * Gk * sq[None, :]
        # d tr(Gk K) = tr(i Q [dM1, M2]) + tr(i Q [M1, dM2])
        A1 = 1j * (M2 @ Q - Q @ M2)
        A2 = 1j * (Q @ M1 - M1 @ Q)
        g1 = grad_coords(rho0 @ M1 + M1 @ rho0 + A1) - 2 * c1
        g2 = grad_coords(rho0 @ M2 + M2 @ rho0 + A2) - 2 * c2
        return val, np.concatenate([g1, g2])

    S = spm(w, tol).operators
    Sr = [v.conj().T @ s @ v for s in S]
    x = np.concatenate([grad_coords_inverse(Sr[0], D), grad_coords_inverse(Sr[1], D)])
    for eps in eps_schedule:
        res = sopt.minimize(fun, x, args=(eps,), jac=True, method="L-BFGS-B",
                            options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12, "maxcor": 30})
        x = res.x
    val, _ = fun(x, 0.0)
    return w.lam + float(val)


def grad_coords_inverse(M, D):
    """Basis coordinates of a Hermitian matrix (inverse of ``_coords_to_matrix``)."""
    a, b, kind = hermitian_basis(D)
    return np.where(kind == 0, M[a, b].real, M[a, b].imag)
