"""Dense primal-dual interior-point solver for small complex Hermitian SDPs.

Problems have the form::

    primal:  maximize  Tr[C X]   s.t.  Tr[A_i X] = b_i,  X >= 0
    dual:    minimize  b . y     s.t.  S = sum_i y_i A_i - C >= 0

with Hermitian ``C``, ``A_i`` and free real multipliers ``y``.  At any
feasible pair ``b . y - Tr[C X] = Tr[X S] >= 0``, so the dual value bounds the
primal value from above.

The iteration is an infeasible-start path-following method with
Nesterov-Todd scaling and a Mehrotra predictor-corrector step.  Complex
matrices are handled directly; the Newton system in ``y`` is real.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalFailureError, ShapeMismatchError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True, eq=False)
class SdpProblem:
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        n = c.shape[0]
        if c.shape != (n, n):
            raise ShapeMismatchError(f"cost matrix must be square, got {c.shape}")
        if a.ndim == 2:
            a = a[None]
        if a.shape[1:] != (n, n) or a.shape[0] != b.size:
            raise ShapeMismatchError(f"constraint stack {a.shape} does not fit n={n}, m={b.size}")
        scale = 1.0 + max(np.abs(c).max(initial=0.0), np.abs(a).max(initial=0.0))
        if (np.abs(c - c.conj().T).max(initial=0.0) > 1e-9 * scale
                or np.abs(a - a.conj().transpose(0, 2, 1)).max(initial=0.0) > 1e-9 * scale):
            raise ShapeMismatchError("cost and constraint matrices must be Hermitian")
        object.__setattr__(self, "c", 0.5 * (c + c.conj().T))
        object.__setattr__(self, "a", 0.5 * (a + a.conj().transpose(0, 2, 1)))
        object.__setattr__(self, "b", b)

    @classmethod
    def from_constraints(cls, c, constraints: Sequence[Tuple[np.ndarray, float]]) -> "SdpProblem":
        a = np.array([m for m, _ in constraints], dtype=complex)
        b = np.array([v for _, v in constraints], dtype=float)
        return cls(c, a, b)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.b.size

    def apply(self, x: np.ndarray) -> np.ndarray:
        """The vector ``(Tr[A_i X])_i``."""
        return np.einsum("ikl,lk->i", self.a, x).real

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,ikl->kl", y, self.a)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_value: float
    dual_value: float
    status: Status
    iterations: int
    primal_residual: float
    dual_residual: float
    dropped: Tuple[int, ...] = field(default=())

    @property
    def gap(self) -> float:
        return self.dual_value - self.primal_value

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.x)[0])


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _independent_rows(a: np.ndarray, b: np.ndarray) -> tuple[list[int], list[int], bool]:
    """Greedy Gram-Schmidt over the constraint matrices in order.

    Returns kept indices, dropped indices, and whether the dropped equations
    are consistent with the kept ones.
    """
    m = a.shape[0]
    vecs = np.concatenate([a.real.reshape(m, -1), a.imag.reshape(m, -1)], axis=1)
    basis: list[np.ndarray] = []
    keep, drop = [], []
    for i in range(m):
        v = vecs[i].copy()
        for q in basis:
            v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-10 * max(1.0, np.linalg.norm(vecs[i])):
            basis.append(v / norm)
            keep.append(i)
        else:
            drop.append(i)
    consistent = True
    if drop:
        coef, *_ = np.linalg.lstsq(vecs[keep].T, vecs[drop].T, rcond=None)
        pred = coef.T @ b[keep]
        consistent = bool(np.all(np.abs(pred - b[drop]) <= 1e-9 * (1.0 + np.abs(b[drop]))))
    return keep, drop, consistent


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``alpha`` keeping ``x + alpha dx`` PSD (``x`` positive definite)."""
    l = np.linalg.cholesky(x)
    li = np.linalg.inv(l)
    lam = np.linalg.eigvalsh(_herm(li @ dx @ li.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _nt_scaling(x: np.ndarray, s: np.ndarray):
    """Nesterov-Todd scaling ``G`` with ``G^-1 X G^-H = G^H S G = diag(lam)``.

    Returns ``(W, G, G^-1, lam)`` where ``W = G G^H`` satisfies ``W S W = X``.
    """
    lx = np.linalg.cholesky(x)
    ls = np.linalg.cholesky(s)
    _, lam, vh = np.linalg.svd(ls.conj().T @ lx)
    root = np.sqrt(lam)
    g = lx @ vh.conj().T / root
    g_inv = (root[:, None] * vh) @ np.linalg.inv(lx)
    return _herm(g @ g.conj().T), g, g_inv, lam


def solve_sdp(p: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    """Solve ``p``; the returned status is ``Optimal`` only when the duality gap,
    the primal and dual residuals (absolute, entrywise max) are all below ``tol``."""
    n, m_all = p.dim, p.n_constraints
    keep, drop, consistent = _independent_rows(p.a, p.b)
    a, b, c = p.a[keep], p.b[keep], p.c
    m = len(keep)

    def pack(x, y, s, status, it, rp, rd):
        y_full = np.zeros(m_all)
        y_full[keep] = y
        return SdpSolution(
            x=_herm(x), y=y_full, s=_herm(s),
            primal_value=float(np.trace(c @ x).real), dual_value=float(b @ y),
            status=status, iterations=it, primal_residual=rp, dual_residual=rd,
            dropped=tuple(drop))

    # starting point: X = xi I with xi the least-squares fit to the constraints
    traces = np.einsum("ikk->i", a).real
    xi = float(traces @ b / (traces @ traces)) if m and traces @ traces > 0 else 1.0
    if not np.isfinite(xi) or xi <= 0:
        xi = 1.0
    x = xi * np.eye(n, dtype=complex)
    eta = 1.0 + float(np.abs(np.linalg.eigvalsh(c)).max(initial=0.0))
    s = eta * np.eye(n, dtype=complex)
    y = np.zeros(m)

    if not consistent:
        return pack(x, y, s, Status.INFEASIBLE, 0, np.inf, np.inf)

    rp_norm = rd_norm = np.inf
    for it in range(1, max_iter + 1):
        rp = b - np.einsum("ikl,lk->i", a, x).real
        rd = np.einsum("i,ikl->kl", y, a) - c - s
        mu = float(np.trace(x @ s).real) / n
        pobj = float(np.trace(c @ x).real)
        dobj = float(b @ y)
        rp_norm = float(np.abs(rp).max(initial=0.0))
        rd_norm = float(np.abs(rd).max(initial=0.0))
        if rp_norm <= tol and rd_norm <= tol and abs(dobj - pobj) <= tol:
            return pack(x, y, s, Status.OPTIMAL, it - 1, rp_norm, rd_norm)
        big = 1e12
        if np.abs(y).max(initial=0.0) > big and rp_norm > tol:
            return pack(x, y, s, Status.INFEASIBLE, it - 1, rp_norm, rd_norm)
        if np.abs(x).max() > big and rd_norm > tol:
            return pack(x, y, s, Status.UNBOUNDED, it - 1, rp_norm, rd_norm)

        try:
            w, g, g_inv, lam = _nt_scaling(x, s)
            waw = w @ a @ w
            schur = np.einsum("ikl,jlk->ij", a, waw).real
            schur = 0.5 * (schur + schur.T)
            chol = np.linalg.cholesky(schur + 1e-14 * np.trace(schur) / max(m, 1) * np.eye(m)) if m else None
            s_inv = np.linalg.inv(s)
        except np.linalg.LinAlgError as exc:
            if rp_norm <= 1e3 * tol and rd_norm <= 1e3 * tol and abs(dobj - pobj) <= 1e3 * tol:
                return pack(x, y, s, Status.MAX_ITER, it - 1, rp_norm, rd_norm)
            raise NumericalFailureError(f"Newton system breakdown at iteration {it}: {exc}") from exc

        wrdw = w @ rd @ w

        def direction(rc: np.ndarray):
            if m:
                h = np.einsum("ikl,lk->i", a, rc - wrdw).real - rp
                dy = np.linalg.solve(chol.conj().T, np.linalg.solve(chol, h))
            else:
                dy = np.zeros(0)
            ds = np.einsum("i,ikl->kl", dy, a) + rd
            dx = _herm(rc - w @ ds @ w)
            return dx, dy, _herm(ds)

        dx_a, dy_a, ds_a = direction(-x)
        ap = min(1.0, _max_step(x, dx_a))
        ad = min(1.0, _max_step(s, ds_a))
        mu_aff = float(np.trace((x + ap * dx_a) @ (s + ad * ds_a)).real) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # second-order term, linearized in the scaled space: solve the Lyapunov
        # equation (lam_i + lam_j) Z_ij / 2 = herm(dX~ dS~)_ij and map back
        dxs = g_inv @ dx_a @ g_inv.conj().T
        dss = g.conj().T @ ds_a @ g
        corr = 2 * _herm(dxs @ dss) / (lam[:, None] + lam[None, :])
        rc = sigma * mu * s_inv - x - g @ corr @ g.conj().T
        dx, dy, ds = direction(rc)
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * _max_step(x, dx))
        ad = min(1.0, gamma * _max_step(s, ds))
        x = _herm(x + ap * dx)
        y = y + ad * dy
        s = _herm(s + ad * ds)
        log.debug("it=%d pobj=%.10g dobj=%.10g rp=%.2e rd=%.2e mu=%.2e", it, pobj, dobj,
                  rp_norm, rd_norm, mu)

    return pack(x, y, s, Status.MAX_ITER, max_iter, rp_norm, rd_norm)


def hermitian_basis(d: int, traceless: bool = False) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of ``d x d`` Hermitian matrices.

    With ``traceless=True`` the identity direction is left out, giving the
    ``d**2 - 1`` generalized Gell-Mann matrices.
    """
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k], e[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            out.append(e)
    if traceless:
        for k in range(1, d):
            diag = np.zeros(d)
            diag[:k] = 1.0
            diag[k] = -k
            out.append(np.diag(diag / np.sqrt(k * (k + 1))).astype(complex))
    else:
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[j, j] = 1.0
            out.append(e)
    return out


def lambda_max_problem(c: np.ndarray) -> SdpProblem:
    """``max Tr[C X]`` over density matrices; optimum is the top eigenvalue of ``C``."""
    n = np.asarray(c).shape[0]
    return SdpProblem(c, np.eye(n)[None], np.array([1.0]))


def solve_or_raise(p: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                   loose: Optional[float] = None) -> SdpSolution:
    """Like :func:`solve_sdp` but raise unless the result is usable.

    A ``MaxIter`` result is accepted when its residuals and gap are below
    ``loose`` (default ``100 * tol``).
    """
    from .errors import SolverFailureError

    sol = solve_sdp(p, tol=tol, max_iter=max_iter)
    if sol.status is Status.OPTIMAL:
        return sol
    loose = 100 * tol if loose is None else loose
    if (sol.status is Status.MAX_ITER and sol.primal_residual <= loose
            and sol.dual_residual <= loose and abs(sol.gap) <= loose):
        return sol
    raise SolverFailureError(f"SDP solver ended with status {sol.status.value} "
                             f"(gap {sol.gap:.2e}, residuals {sol.primal_residual:.2e}/"
                             f"{sol.dual_residual:.2e})")
