"""Decision procedures for supermaps.

* :func:`complete_cptni_value` solves the SDP whose value ``alpha`` decides
  complete CPTNI preservation (``alpha <= 1``).
* :func:`cptni_seesaw_value` lower-bounds the plain CPTNI value by alternating
  maximization over product witnesses ``J_N (x) rho``.
* :func:`complete_to_superchannel` builds a completion from the dual optimum.
* :class:`SuperInstrument` bundles branches summing to a superchannel.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BranchesDoNotSumToSuperchannelError,
    DimensionMismatchError,
    NotCompletelyCPTNIError,
    NotCPPError,
)
from .maps import MapChoi, random_channel
from .sdp import DEFAULT_TOL, SdpProblem, SdpSolution, hermitian_basis, solve_or_raise
from .supermap import (
    SuperChoi,
    canonical_superchannel,
    is_cpp,
    is_superchannel,
    pairing,
)
from .tensor import FactoredMatrix, hermitian_eigh

#: verdict threshold on alpha and on the seesaw bound
VERDICT_TOL = 1e-6


def _require_cpp(theta: SuperChoi) -> None:
    if not is_cpp(theta):
        lam = float(hermitian_eigh(theta.data)[0][0])
        raise NotCPPError(f"supermap Choi matrix is not PSD (min eigenvalue {lam:.3e})")


@dataclass(frozen=True, eq=False)
class CompleteValue:
    """Optimum of the complete-CPTNI program and its dual certificate.

    ``witness`` is the optimal ``M`` on ``A0, A1, B0``.  ``dual_operator`` is
    ``r I + sum_k y_k P_k (x) I_A1 (x) K_k``, which dominates ``J^{AB0}``;
    ``beta = a0 * r`` is the dual value.
    """

    alpha: float
    beta: float
    r: float
    witness: FactoredMatrix
    dual_operator: np.ndarray
    solution: SdpSolution

    @property
    def gap(self) -> float:
        return self.beta - self.alpha


def _marginal_constraints(a0: int, a1: int, b0: int) -> list[tuple[np.ndarray, float]]:
    """Equalities forcing ``Tr X = a0`` and ``X^{A0B0} = I (x) sigma``.

    Returned on the factor order ``A0, A1, B0``; the first entry is the trace
    constraint, whose multiplier is ``r``.
    """
    eye_a1 = np.eye(a1)
    cons = [(np.eye(a0 * a1 * b0, dtype=complex), float(a0))]
    for p in hermitian_basis(a0, traceless=True):
        for k in hermitian_basis(b0):
            cons.append((np.kron(np.kron(p, eye_a1), k), 0.0))
    return cons


def complete_cptni_value(theta: SuperChoi, tol: float = DEFAULT_TOL) -> CompleteValue:
    """``alpha = max Tr[J^{AB0} M^T]`` over ``M >= 0`` with ``M^{A0B0} = I (x) rho``.

    The program is solved for ``N = M^T``, which obeys the same kind of
    marginal constraint with ``rho^T``; this keeps the cost a plain trace.
    """
    _require_cpp(theta)
    a0, a1, b0, _ = theta.dims
    cost = theta.ab0.data
    cons = _marginal_constraints(a0, a1, b0)
    sol = solve_or_raise(SdpProblem.from_constraints(cost, cons), tol=tol)
    a = np.array([m for m, _ in cons])
    dual_op = np.einsum("i,ikl->kl", sol.y, a)
    r = float(sol.y[0])
    factors = (("A0", a0), ("A1", a1), ("B0", b0))
    return CompleteValue(
        alpha=sol.primal_value,
        beta=a0 * r,
        r=r,
        witness=FactoredMatrix(sol.x.T, factors),
        dual_operator=0.5 * (dual_op + dual_op.conj().T),
        solution=sol,
    )


def complete_to_superchannel(theta: SuperChoi, tol: float = VERDICT_TOL,
                             sdp_tol: float = DEFAULT_TOL) -> SuperChoi:
    """A CPP ``theta'`` such that ``theta + theta'`` is a superchannel.

    Raises :class:`NotCompletelyCPTNIError` when ``alpha > 1 + tol``.
    """
    _require_cpp(theta)
    a0, a1, b0, b1 = theta.dims
    ab0 = theta.ab0.data
    if np.abs(ab0).max() <= 1e-12:
        return canonical_superchannel(theta.dims) - theta
    val = complete_cptni_value(theta, tol=sdp_tol)
    if val.alpha > 1 + tol:
        raise NotCompletelyCPTNIError(
            f"complete CPTNI value {val.alpha:.9f} exceeds 1; no completion exists", val.alpha)

    # make S - J^{AB0} exactly PSD by moving the identity multiplier
    s = val.dual_operator
    slack_min = float(hermitian_eigh(s - ab0)[0][0])
    r = val.r + max(0.0, -slack_min)
    s = s + (r - val.r) * np.eye(s.shape[0])
    beta = a0 * r
    # S / beta is the AB0 marginal of a superchannel; the remainder is theta's share
    rest = s / beta - ab0
    w, v = hermitian_eigh(rest)
    rest = (v * np.clip(w, 0.0, None)) @ v.conj().T
    data = np.kron(rest, np.eye(b1) / b1)
    return SuperChoi.from_array(0.5 * (data + data.conj().T), theta.dims)


# ---------------------------------------------------------------------------
# seesaw over product witnesses

@dataclass(frozen=True, eq=False)
class SeesawResult:
    """Best product witness found; ``value`` is a certified lower bound."""

    value: float
    channel: MapChoi
    state: FactoredMatrix
    restarts: int
    rounds: int


def _effective_state_operator(ab0: np.ndarray, j_n: np.ndarray, da: int, b0: int) -> np.ndarray:
    t = ab0.reshape(da, b0, da, b0)
    return np.einsum("xbyc,xy->bc", t, j_n)


def _effective_map_operator(ab0: np.ndarray, rho: np.ndarray, da: int, b0: int) -> np.ndarray:
    t = ab0.reshape(da, b0, da, b0)
    return np.einsum("xbyc,bc->xy", t, rho)


def _channel_problem(cost: np.ndarray, d_in: int, d_out: int) -> SdpProblem:
    eye = np.eye(d_out)
    cons = [(np.kron(h, eye), float(np.trace(h).real)) for h in hermitian_basis(d_in)]
    return SdpProblem.from_constraints(cost, cons)


def _project_to_channel(j: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Nearby exactly-CPTP Choi matrix: clip to PSD, then renormalize the input marginal."""
    w, v = hermitian_eigh(0.5 * (j + j.conj().T))
    j = (v * np.clip(w, 0.0, None)) @ v.conj().T
    marg = np.einsum("iaja->ij", j.reshape(d_in, d_out, d_in, d_out))
    mw, mv = hermitian_eigh(0.5 * (marg + marg.conj().T))
    if mw[0] <= 1e-12:
        return np.kron(np.eye(d_in), np.eye(d_out) / d_out)
    t = np.kron((mv / np.sqrt(mw)) @ mv.conj().T, np.eye(d_out))
    out = t @ j @ t
    return 0.5 * (out + out.conj().T)


def _top_pure_state(op: np.ndarray) -> np.ndarray:
    """Density ``rho`` maximizing ``sum_{bc} op_bc rho_bc``."""
    w, v = hermitian_eigh(op)
    top = v[:, -1].conj()
    return np.outer(top, top.conj())


def cptni_seesaw_value(theta: SuperChoi, restarts: int = 32, seed: Optional[int] = 0,
                       max_rounds: int = 200, conv_tol: float = 1e-9,
                       sdp_tol: float = 1e-10) -> SeesawResult:
    """Lower bound on ``sup Tr[J^{AB0} (J_N (x) rho)^T]`` over channels and states.

    Each restart alternates an exact state step (top eigenvector) and an SDP
    channel step until the value improves by less than ``conv_tol``.  The
    reported value is the pairing of an exactly-CPTP channel and a density
    matrix, so it never exceeds the true supremum.
    """
    _require_cpp(theta)
    a0, a1, b0, _ = theta.dims
    da = a0 * a1
    ab0 = theta.ab0.data
    rng = np.random.default_rng(seed)
    best: Optional[tuple[float, np.ndarray, np.ndarray]] = None
    total_rounds = 0
    for _ in range(max(1, restarts)):
        sub = np.random.default_rng(rng.integers(2**63))
        j_n = random_channel(a0, a1, kraus_rank=2, seed=sub).data
        vec = sub.standard_normal(b0) + 1j * sub.standard_normal(b0)
        vec /= np.linalg.norm(vec)
        rho = np.outer(vec, vec.conj())
        value = float(np.sum(ab0 * np.kron(j_n, rho)).real)
        for _ in range(max_rounds):
            total_rounds += 1
            rho = _top_pure_state(_effective_state_operator(ab0, j_n, da, b0))
            k = _effective_map_operator(ab0, rho, da, b0)
            sol = solve_or_raise(_channel_problem(k.T, a0, a1), tol=sdp_tol)
            j_n = _project_to_channel(sol.x, a0, a1)
            new = float(np.sum(ab0 * np.kron(j_n, rho)).real)
            improved = new - value
            value = max(value, new)
            if improved < conv_tol:
                break
        # re-evaluate on the final exact pair so the bound is certified
        rho = _top_pure_state(_effective_state_operator(ab0, j_n, da, b0))
        value = float(np.sum(ab0 * np.kron(j_n, rho)).real)
        if best is None or value > best[0]:
            best = (value, j_n, rho)
    value, j_n, rho = best
    return SeesawResult(
        value=value,
        channel=MapChoi.from_array(j_n, a0, a1),
        state=FactoredMatrix(rho, (("B0", b0),)),
        restarts=max(1, restarts),
        rounds=total_rounds,
    )


# ---------------------------------------------------------------------------
# verdicts

class Verdict(str, enum.Enum):
    COMPLETELY_CPTNI = "CompletelyCPTNI"
    CPTNI_ONLY = "CPTNIOnly"
    NOT_CPTNI = "NotCPTNI"
    NOT_CPP = "NotCPP"


@dataclass(frozen=True, eq=False)
class CertReport:
    cpp: bool
    min_eigenvalue: float
    cptni_lower_bound: Optional[float]
    seesaw: Optional[SeesawResult]
    complete_value: Optional[float]
    complete: Optional[CompleteValue]
    verdict: Verdict

    @property
    def evidence(self) -> str:
        if self.verdict is Verdict.CPTNI_ONLY:
            return "SDP value above 1; no product violation found by seesaw (not a proof)"
        if self.verdict is Verdict.NOT_CPTNI:
            return "explicit product witness with pairing above 1"
        if self.verdict is Verdict.COMPLETELY_CPTNI:
            return "SDP value at most 1 with matching dual certificate"
        return "negative eigenvalue in the Choi matrix"


def certify(theta: SuperChoi, tol: float = VERDICT_TOL, restarts: int = 32, seed: Optional[int] = 0,
            sdp_tol: float = DEFAULT_TOL) -> CertReport:
    """Classify ``theta`` into the inclusion chain of supermap classes.

    ``CPTNIOnly`` means the SDP value exceeds ``1 + tol`` while no product
    witness above ``1 + tol`` was found; it rests on the seesaw search.
    """
    lam = float(hermitian_eigh(theta.data)[0][0])
    if not is_cpp(theta):
        return CertReport(False, lam, None, None, None, None, Verdict.NOT_CPP)
    comp = complete_cptni_value(theta, tol=sdp_tol)
    see = cptni_seesaw_value(theta, restarts=restarts, seed=seed)
    if comp.alpha <= 1 + tol:
        verdict = Verdict.COMPLETELY_CPTNI
    elif see.value > 1 + tol:
        verdict = Verdict.NOT_CPTNI
    else:
        verdict = Verdict.CPTNI_ONLY
    return CertReport(True, lam, see.value, see, comp.alpha, comp, verdict)


# ---------------------------------------------------------------------------
# super-instruments

@dataclass(frozen=True, eq=False)
class SuperInstrument:
    """Branches ``Theta_x`` whose sum is a superchannel; build with :func:`build_instrument`."""

    branches: tuple[SuperChoi, ...]

    @property
    def dims(self):
        return self.branches[0].dims

    @property
    def total(self) -> SuperChoi:
        out = self.branches[0]
        for b in self.branches[1:]:
            out = out + b
        return out

    def __len__(self) -> int:
        return len(self.branches)


def build_instrument(branches: Sequence[SuperChoi], tol: float = 1e-7) -> SuperInstrument:
    branches = tuple(branches)
    if not branches:
        raise BranchesDoNotSumToSuperchannelError("an instrument needs at least one branch")
    dims = branches[0].dims
    for i, b in enumerate(branches):
        if b.dims != dims:
            raise DimensionMismatchError(f"branch {i} has dims {b.dims}, expected {dims}")
        if not is_cpp(b):
            raise NotCPPError(f"branch {i} is not CPP")
    inst = SuperInstrument(branches)
    rep = is_superchannel(inst.total, tol=tol)
    if not rep.holds:
        raise BranchesDoNotSumToSuperchannelError(
            f"branches sum to a non-superchannel (residuals psd={rep.psd_residual:.3e}, "
            f"marginal={rep.marginal_residual:.3e}, A1B0={rep.a1b0_residual:.3e})")
    return inst


def outcome_statistics(inst: SuperInstrument, j_n: MapChoi, rho) -> np.ndarray:
    """Outcome probabilities ``p_x = Tr[Theta_x[N](rho)]``."""
    return np.array([pairing(b, j_n, rho) for b in inst.branches])


def branches_completely_cptni(inst: SuperInstrument, tol: float = VERDICT_TOL) -> list[float]:
    """``alpha`` for every branch; each is at most ``1 + tol`` for a valid instrument."""
    return [complete_cptni_value(b).alpha for b in inst.branches]
