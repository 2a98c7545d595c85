"""Choi matrices of supermaps sending maps ``A0 -> A1`` to maps ``B0 -> B1``.

The Choi matrix lives on the factors ``A0, A1, B0, B1`` in that order.  A
missing label in a marginal name means that factor was traced out, e.g.
``marginal("A0", "B0")`` traces out ``A1`` and ``B1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import (
    BadMarginalError,
    DimensionMismatchError,
    NonLinearActionError,
    NotPSDError,
    ShapeMismatchError,
)
from .maps import MapChoi, apply_map, choi_from_kraus
from .tensor import (
    FactoredMatrix,
    hermitian_eigh,
    is_psd,
    isometry_between,
    kron,
    kron_vectors,
    maximally_mixed,
    partial_trace,
    phi_plus,
    phi_plus_vector,
    purify,
)

LABELS = ("A0", "A1", "B0", "B1")
Dims = Tuple[int, int, int, int]

PAULI_Y = np.array([[0, -1j], [1j, 0]])


@dataclass(frozen=True, eq=False)
class SuperChoi:
    """Choi matrix of a supermap; ``dims = (a0, a1, b0, b1)``."""

    dims: Dims
    j: FactoredMatrix

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if self.j.factors != tuple(zip(LABELS, dims)):
            raise ShapeMismatchError(f"SuperChoi expects factors {tuple(zip(LABELS, dims))}, "
                                     f"got {self.j.factors}")

    @classmethod
    def from_array(cls, data, dims) -> "SuperChoi":
        dims = tuple(int(d) for d in dims)
        return cls(dims, FactoredMatrix(data, tuple(zip(LABELS, dims))))

    @classmethod
    def from_factored(cls, m: FactoredMatrix) -> "SuperChoi":
        m = m.reorder(LABELS)
        return cls(m.dims, m)

    @property
    def data(self) -> np.ndarray:
        return self.j.data

    def marginal(self, *keep: str) -> FactoredMatrix:
        return partial_trace(self.j, [label for label in LABELS if label not in keep])

    @property
    def ab0(self) -> FactoredMatrix:
        """``J^{AB0}``: ``B1`` traced out, factors ``A0, A1, B0``."""
        return self.marginal("A0", "A1", "B0")

    def __add__(self, other: "SuperChoi") -> "SuperChoi":
        if other.dims != self.dims:
            raise DimensionMismatchError(f"dims differ: {self.dims} vs {other.dims}")
        return SuperChoi(self.dims, self.j + other.j)

    def __sub__(self, other: "SuperChoi") -> "SuperChoi":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "SuperChoi":
        return SuperChoi(self.dims, self.j * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SuperChoi(dims={self.dims})"


def is_cpp(theta: SuperChoi, atol: float = 0.0) -> bool:
    """Completely CP-preserving iff the Choi matrix is PSD."""
    return theta.j.is_hermitian() and is_psd(theta.data, atol=atol)


def zero_supermap(dims) -> SuperChoi:
    d = int(np.prod(dims))
    return SuperChoi.from_array(np.zeros((d, d)), dims)


def identity_supermap(a0: int = 2, a1: int = 2) -> SuperChoi:
    """Choi matrix of the supermap leaving every map unchanged."""
    m = kron(phi_plus("A0", "B0", a0), phi_plus("A1", "B1", a1))
    return SuperChoi.from_factored(m)


def canonical_superchannel(dims) -> SuperChoi:
    """Discard the input map's output, feed it ``u``, and prepare ``u`` on ``B1``.

    Choi matrix ``I / (a0 * b1)``; used when a completion has nothing to fix.
    """
    a0, a1, b0, b1 = dims
    d = a0 * a1 * b0 * b1
    return SuperChoi.from_array(np.eye(d) / (a0 * b1), dims)


def counterexample_supermap() -> SuperChoi:
    """``I^{A0} (x) psi_-^{A1 B0} (x) u^{B1}`` on qubits.

    Sends every channel to a trace-nonincreasing map, yet admits no
    completion to a superchannel.
    """
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    psi_minus = FactoredMatrix(np.outer(singlet, singlet), (("A1", 2), ("B0", 2)))
    m = kron(kron(FactoredMatrix(np.eye(2), (("A0", 2),)), psi_minus), maximally_mixed("B1", 2))
    return SuperChoi.from_factored(m)


def counterexample_action(j_e: MapChoi) -> MapChoi:
    """Action ``E -> (rho -> Tr[E(u) Y rho^T Y] u)`` written out directly."""
    e_u = apply_map(j_e, np.eye(2) / 2).data
    # rho -> Tr[E(u) Y rho^T Y] u; on |a><b| this is Tr[E(u) Y |b><a| Y] u
    data = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            rho_t = np.zeros((2, 2))
            rho_t[b, a] = 1.0
            coeff = np.trace(e_u @ PAULI_Y @ rho_t @ PAULI_Y)
            data[2 * a:2 * a + 2, 2 * b:2 * b + 2] = coeff * np.eye(2) / 2
    return MapChoi.from_array(data, 2, 2)


def superchoi_from_action(dims, action: Callable[[MapChoi], MapChoi],
                          check_linearity: bool = True, samples: int = 8) -> SuperChoi:
    """Build ``sum_{jklm} J_{E_jklm} (x) J_{action(E_jklm)}``.

    ``E_jklm(rho) = <j|rho|k> |l><m|`` has Choi matrix ``|j><k| (x) |l><m|``.
    Linearity of ``action`` is spot-checked on ``samples`` random pairs.
    """
    a0, a1, b0, b1 = (int(d) for d in dims)
    da, db = a0 * a1, b0 * b1

    def run(e: np.ndarray) -> np.ndarray:
        out = action(MapChoi.from_array(e, a0, a1))
        if (out.d_in, out.d_out) != (b0, b1):
            raise DimensionMismatchError(
                f"action returned a {out.d_in}->{out.d_out} map, expected {b0}->{b1}")
        return out.data

    data = np.zeros((da * db, da * db), dtype=complex)
    for p in range(da):
        for q in range(da):
            e = np.zeros((da, da), dtype=complex)
            e[p, q] = 1.0
            data[p * db:(p + 1) * db, q * db:(q + 1) * db] = run(e)
    theta = SuperChoi.from_array(data, dims)

    if check_linearity:
        rng = np.random.default_rng(0)
        for _ in range(samples):
            x, y = (rng.standard_normal((da, da)) + 1j * rng.standard_normal((da, da))
                    for _ in range(2))
            s, t = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            lhs = run(s * x + t * y)
            rhs = s * run(x) + t * run(y)
            if np.linalg.norm(lhs - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
                raise NonLinearActionError("supplied action is not linear")
            # the Choi matrix must reproduce the action on the sample as well
            expect = apply_supermap(theta, MapChoi.from_array(x, a0, a1)).data
            if np.linalg.norm(expect - run(x)) > 1e-8 * max(1.0, np.linalg.norm(expect)):
                raise NonLinearActionError("action is not determined by its values on a basis")
    return theta


def apply_supermap(theta: SuperChoi, j_e: MapChoi) -> MapChoi:
    """``J_F = Tr_A[J_Theta (J_E^T (x) I_B)]``."""
    a0, a1, b0, b1 = theta.dims
    if (j_e.d_in, j_e.d_out) != (a0, a1):
        raise DimensionMismatchError(f"map is {j_e.d_in}->{j_e.d_out}, supermap expects {a0}->{a1}")
    da, db = a0 * a1, b0 * b1
    t = theta.data.reshape(da, db, da, db)
    out = np.einsum("xbyc,xy->bc", t, j_e.data)
    return MapChoi.from_array(out, b0, b1)


def pairing(theta: SuperChoi, j_n: MapChoi, rho) -> float:
    """``Tr[J^{AB0} (J_N (x) rho)^T] = Tr[Theta[N](rho)]``."""
    a0, a1, b0, _ = theta.dims
    r = rho.data if isinstance(rho, FactoredMatrix) else np.asarray(rho, dtype=complex)
    if (j_n.d_in, j_n.d_out) != (a0, a1) or r.shape != (b0, b0):
        raise DimensionMismatchError("map or state does not fit the supermap's input slots")
    return float(np.sum(theta.ab0.data * np.kron(j_n.data, r)).real)


@dataclass(frozen=True)
class SuperchannelReport:
    holds: bool
    min_eigenvalue: float
    psd_residual: float
    marginal_residual: float
    a1b0_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.psd_residual, self.marginal_residual, self.a1b0_residual)


def is_superchannel(theta: SuperChoi, tol: float = 1e-7) -> SuperchannelReport:
    """Check ``J >= 0``, ``J^{AB0} = J^{A0B0} (x) u^{A1}`` and ``J^{A1B0} = I``.

    Residuals are the PSD violation ``max(0, -lambda_min)`` and Frobenius
    norms of the two marginal differences.
    """
    a0, a1, b0, _ = theta.dims
    lam = float(hermitian_eigh(theta.data)[0][0])
    psd_res = max(0.0, -lam)
    ab0 = theta.ab0
    target = kron(theta.marginal("A0", "B0"), maximally_mixed("A1", a1)).reorder(ab0.labels)
    marg_res = float(np.linalg.norm(ab0.data - target.data))
    a1b0_res = float(np.linalg.norm(theta.marginal("A1", "B0").data - np.eye(a1 * b0)))
    herm_ok = theta.j.is_hermitian()
    holds = herm_ok and psd_res <= tol and marg_res <= tol and a1b0_res <= tol
    return SuperchannelReport(holds, lam, psd_res, marg_res, a1b0_res)


def marginal_from_realization(j_n: MapChoi, rho_rb: FactoredMatrix, a0: int, a1: int) -> FactoredMatrix:
    """Forward formula ``M = Tr_R0[(rho^{R0B0} (x) I^A)((J_N^{R0 A})^{T_R0} (x) I^{B0})]``.

    ``j_n`` maps ``R0 A0 -> A1`` (input order ``R0, A0``) and ``rho_rb`` has
    factors ``R0, B0``.  The result has factors ``A0, A1, B0``.
    """
    rho_rb = rho_rb.reorder(["R0", "B0"])
    r0, b0 = rho_rb.dims
    if j_n.d_in != r0 * a0 or j_n.d_out != a1:
        raise DimensionMismatchError(
            f"map {j_n.d_in}->{j_n.d_out} does not act on R0({r0}) A0({a0}) -> A1({a1})")
    rt = rho_rb.tensor()                                         # r b r' b'
    jt = j_n.data.reshape(r0, a0, a1, r0, a0, a1)                # r x y r' x' y'
    m = np.einsum("rbsc,rxysuv->xybuvc", rt, jt)
    d = a0 * a1 * b0
    return FactoredMatrix(m.reshape(d, d), (("A0", a0), ("A1", a1), ("B0", b0)))


@dataclass(frozen=True)
class MarginalRealization:
    j_n: MapChoi
    rho: FactoredMatrix
    residual: float


def realize_marginal_M(m: FactoredMatrix, atol: float = 1e-7) -> MarginalRealization:
    """Write an admissible ``M^{AB0}`` as a channel ``R0 A0 -> A1`` acting on half of a
    bipartite state ``rho^{R0 B0}``.

    ``m`` must be PSD on ``A0, A1, B0`` with ``Tr_A1 m = I (x) rho`` for a
    density matrix ``rho``.  Both ``I (x) rho`` and ``m`` are purified; the
    isometry relating the two purifications, with its junk output traced
    out, is the channel.  ``R0`` has the rank of ``rho``.
    """
    m = m.reorder(["A0", "A1", "B0"])
    a0, a1, b0 = m.dims
    if not m.is_hermitian() or not is_psd(m.data):
        raise NotPSDError("M must be Hermitian positive semidefinite")
    mab = partial_trace(m, ["A1"])
    rho = partial_trace(mab, ["A0"]) / a0
    expect = kron(FactoredMatrix(np.eye(a0), (("A0", a0),)), rho)
    dev = float(np.linalg.norm(mab.data - expect.data))
    if dev > atol or abs(rho.trace() - 1.0) > atol:
        raise BadMarginalError(f"Tr_A1 M is not I (x) rho for a density rho "
                               f"(deviation {dev:.3e}, Tr rho = {rho.trace().real:.6f})")

    phi_rho = purify(rho.hermitian_part(), "R0")                   # B0, R0
    r0 = phi_rho.dims[-1]
    source = kron_vectors(phi_plus_vector("A0", "At0", a0), phi_rho)   # A0 At0 B0 R0
    source = source.reorder(["A0", "B0", "At0", "R0"])
    target = purify(m.hermitian_part(), "F0", min_aux_dim=-(-(a0 * r0) // a1))  # A0 A1 B0 F0
    target = target.reorder(["A0", "B0", "A1", "F0"])
    v, _, _ = isometry_between(source, target, ["A0", "B0"], atol=atol)
    f0 = target.dims[-1]

    # Gamma = Tr_F0 o V, Kraus operators <f|V : (At0 R0) -> A1
    vt = v.reshape(a1, f0, a0 * r0)
    kraus = [vt[:, f, :] for f in range(f0)]
    # reorder the input from (At0, R0) to (R0, A0)
    perm = np.arange(a0 * r0).reshape(a0, r0).T.reshape(-1)
    kraus = [k[:, perm] for k in kraus]
    j_n = choi_from_kraus(kraus)
    rho_rb = phi_rho.density().reorder(["R0", "B0"])
    resid = float(np.linalg.norm(marginal_from_realization(j_n, rho_rb, a0, a1).data - m.data))
    return MarginalRealization(j_n, rho_rb, resid)
