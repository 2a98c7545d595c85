"""Dense complex matrices over labeled tensor factors.

Every operator in the package is a :class:`FactoredMatrix`: a square complex
matrix together with an ordered list of ``(label, dim)`` factors.  Kronecker
products are row-major with the leftmost factor varying slowest, so the basis
state ``|i_1 i_2 ... i_k>`` sits at the flat index
``((i_1 * d_2 + i_2) * d_3 + ...) + i_k``.  Partial traces and partial
transposes address factors by label, never by position.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionOrderError,
    DuplicateLabelError,
    MarginalMismatchError,
    NotPSDError,
    ShapeMismatchError,
    UnknownLabelError,
)

Factor = Tuple[str, int]

#: eigenvalues above ``-PSD_RTOL * lambda_max`` count as nonnegative
PSD_RTOL = 1e-8
#: default relative cutoff deciding the rank of a purification
PURIFY_CUTOFF = 1e-12
HERMITIAN_RTOL = 1e-9


def _normalize_factors(factors: Iterable[Sequence]) -> Tuple[Factor, ...]:
    out = tuple((str(label), int(dim)) for label, dim in factors)
    labels = [label for label, _ in out]
    if len(set(labels)) != len(labels):
        raise DuplicateLabelError(f"duplicate factor labels in {labels}")
    for label, dim in out:
        if dim < 1:
            raise ShapeMismatchError(f"factor {label!r} has nonpositive dimension {dim}")
    return out


def _positions(factors: Sequence[Factor], labels: Iterable[str]) -> list[int]:
    names = [label for label, _ in factors]
    pos = []
    for label in labels:
        if label not in names:
            raise UnknownLabelError(f"unknown factor label {label!r}; have {names}")
        pos.append(names.index(label))
    return pos


@dataclass(frozen=True, eq=False)
class FactoredMatrix:
    """A ``d x d`` complex matrix acting on an ordered product of labeled factors."""

    data: np.ndarray
    factors: Tuple[Factor, ...]

    def __post_init__(self):
        factors = _normalize_factors(self.factors)
        data = np.array(self.data, dtype=complex)
        d = prod(dim for _, dim in factors)
        if data.shape != (d, d):
            raise ShapeMismatchError(
                f"matrix shape {data.shape} does not match factor dims {factors}")
        data.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "data", data)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dim_of(self, label: str) -> int:
        return self.dims[_positions(self.factors, [label])[0]]

    def tensor(self) -> np.ndarray:
        """Entries reshaped to ``(d_1, ..., d_k, d_1, ..., d_k)``."""
        return self.data.reshape(self.dims + self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.data), initial=0.0))
        return float(np.max(np.abs(self.data - self.data.conj().T), initial=0.0)) <= rtol * scale

    def hermitian_part(self) -> "FactoredMatrix":
        return FactoredMatrix(0.5 * (self.data + self.data.conj().T), self.factors)

    def reorder(self, labels: Sequence[str]) -> "FactoredMatrix":
        """Permute tensor factors into the order given by ``labels``."""
        labels = list(labels)
        if sorted(labels) != sorted(self.labels):
            raise UnknownLabelError(f"reorder needs a permutation of {self.labels}, got {labels}")
        if tuple(labels) == self.labels:
            return self
        perm = _positions(self.factors, labels)
        k = len(perm)
        t = self.tensor().transpose(perm + [p + k for p in perm])
        factors = tuple(self.factors[p] for p in perm)
        d = self.dim
        return FactoredMatrix(t.reshape(d, d), factors)

    def relabel(self, mapping: Mapping[str, str]) -> "FactoredMatrix":
        _positions(self.factors, mapping.keys())
        return FactoredMatrix(self.data, tuple((mapping.get(l, l), d) for l, d in self.factors))

    def transpose(self) -> "FactoredMatrix":
        return FactoredMatrix(self.data.T, self.factors)

    def _check_same(self, other: "FactoredMatrix") -> "FactoredMatrix":
        if not isinstance(other, FactoredMatrix):
            return NotImplemented
        if other.factors != self.factors:
            if sorted(other.factors) != sorted(self.factors):
                raise ShapeMismatchError(f"factors differ: {self.factors} vs {other.factors}")
            other = other.reorder(self.labels)
        return other

    def __add__(self, other):
        other = self._check_same(other)
        if other is NotImplemented:
            return other
        return FactoredMatrix(self.data + other.data, self.factors)

    def __sub__(self, other):
        other = self._check_same(other)
        if other is NotImplemented:
            return other
        return FactoredMatrix(self.data - other.data, self.factors)

    def __mul__(self, scalar):
        if isinstance(scalar, FactoredMatrix):
            return NotImplemented
        return FactoredMatrix(scalar * self.data, self.factors)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FactoredMatrix(self.data / scalar, self.factors)

    def __neg__(self):
        return FactoredMatrix(-self.data, self.factors)

    def __repr__(self):
        return f"FactoredMatrix(factors={self.factors}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class PureVector:
    """A (possibly unnormalized) vector on labeled factors.

    ``weight`` is the squared norm, which equals the trace of the matrix it
    purifies.
    """

    amplitudes: np.ndarray
    factors: Tuple[Factor, ...]

    def __post_init__(self):
        factors = _normalize_factors(self.factors)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != prod(dim for _, dim in factors):
            raise ShapeMismatchError(f"vector length {amps.size} does not match {factors}")
        amps.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def weight(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def reorder(self, labels: Sequence[str]) -> "PureVector":
        labels = list(labels)
        if sorted(labels) != sorted(self.labels):
            raise UnknownLabelError(f"reorder needs a permutation of {self.labels}, got {labels}")
        perm = _positions(self.factors, labels)
        t = self.tensor().transpose(perm)
        return PureVector(t.reshape(-1), tuple(self.factors[p] for p in perm))

    def relabel(self, mapping: Mapping[str, str]) -> "PureVector":
        _positions(self.factors, mapping.keys())
        return PureVector(self.amplitudes, tuple((mapping.get(l, l), d) for l, d in self.factors))

    def density(self) -> FactoredMatrix:
        """The rank-one operator ``|psi><psi|``."""
        return FactoredMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.factors)


def identity(factors: Sequence[Factor]) -> FactoredMatrix:
    factors = _normalize_factors(factors)
    return FactoredMatrix(np.eye(prod(d for _, d in factors)), factors)


def maximally_mixed(label: str, dim: int) -> FactoredMatrix:
    return FactoredMatrix(np.eye(dim) / dim, ((label, dim),))


def phi_plus_vector(label_a: str, label_b: str, dim: int) -> PureVector:
    """Unnormalized maximally entangled vector ``sum_j |j>|j>`` (squared norm ``dim``)."""
    return PureVector(np.eye(dim).reshape(-1), ((label_a, dim), (label_b, dim)))


def phi_plus(label_a: str, label_b: str, dim: int) -> FactoredMatrix:
    return phi_plus_vector(label_a, label_b, dim).density()


def kron(a: FactoredMatrix, b: FactoredMatrix) -> FactoredMatrix:
    """Kronecker product; ``a``'s factors come first (slower varying)."""
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise DuplicateLabelError(f"labels {sorted(clash)} appear in both operands")
    return FactoredMatrix(np.kron(a.data, b.data), a.factors + b.factors)


def kron_vectors(a: PureVector, b: PureVector) -> PureVector:
    clash = set(a.labels) & set(b.labels)
    if clash:
        raise DuplicateLabelError(f"labels {sorted(clash)} appear in both operands")
    return PureVector(np.kron(a.amplitudes, b.amplitudes), a.factors + b.factors)


def partial_trace(m: FactoredMatrix, drop: Iterable[str]) -> FactoredMatrix:
    """Trace out the factors named in ``drop``; the rest keep their order."""
    drop = set(drop)
    _positions(m.factors, drop)
    if not drop:
        return m
    k = len(m.factors)
    keep = [i for i, label in enumerate(m.labels) if label not in drop]
    # einsum subscripts: shared index for dropped factors, distinct for kept ones
    row = list(range(k))
    col = [i if m.labels[i] in drop else k + i for i in range(k)]
    out = [i for i in keep] + [k + i for i in keep]
    t = np.einsum(m.tensor(), row + col, out)
    factors = tuple(m.factors[i] for i in keep)
    d = prod(dim for _, dim in factors)
    return FactoredMatrix(t.reshape(d, d), factors)


def partial_transpose(m: FactoredMatrix, on: Iterable[str]) -> FactoredMatrix:
    """Transpose the named factors in the computational basis."""
    pos = _positions(m.factors, on)
    k = len(m.factors)
    perm = list(range(2 * k))
    for p in pos:
        perm[p], perm[p + k] = perm[p + k], perm[p]
    t = m.tensor().transpose(perm)
    return FactoredMatrix(t.reshape(m.dim, m.dim), m.factors)


def hermitian_eigh(m: FactoredMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    data = m.data if isinstance(m, FactoredMatrix) else np.asarray(m)
    return np.linalg.eigh(0.5 * (data + data.conj().T))


def min_eigenvalue(m: FactoredMatrix | np.ndarray) -> float:
    return float(hermitian_eigh(m)[0][0])


def is_psd(m: FactoredMatrix | np.ndarray, atol: float = 0.0) -> bool:
    """PSD test with the package-wide relative tolerance plus an optional absolute slack."""
    w = hermitian_eigh(m)[0]
    scale = max(float(w[-1]), 0.0)
    return bool(w[0] >= -(PSD_RTOL * scale + atol))


def psd_projection(m: FactoredMatrix) -> FactoredMatrix:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, v = hermitian_eigh(m)
    return FactoredMatrix((v * np.clip(w, 0.0, None)) @ v.conj().T, m.factors)


def purify(m: FactoredMatrix, aux_label: str, cutoff: float = PURIFY_CUTOFF,
           min_aux_dim: int = 1) -> PureVector:
    """Purify a PSD matrix (any trace) onto ``m``'s factors followed by ``aux_label``.

    The auxiliary dimension is the number of eigenvalues above
    ``cutoff * lambda_max``, padded with zero amplitudes up to ``min_aux_dim``.
    Tracing the auxiliary factor out of ``|psi><psi|`` gives back ``m``.
    """
    if aux_label in m.labels:
        raise DuplicateLabelError(f"auxiliary label {aux_label!r} already used")
    if not m.is_hermitian():
        raise NotPSDError("matrix to purify is not Hermitian")
    w, v = hermitian_eigh(m)
    lam_max = max(float(w[-1]), 0.0)
    if w[0] < -PSD_RTOL * lam_max:
        raise NotPSDError(f"matrix to purify has eigenvalue {w[0]:.3e} < 0")
    keep = w > cutoff * lam_max if lam_max > 0 else np.zeros_like(w, dtype=bool)
    w, v = w[keep], v[:, keep]
    rank = len(w)
    aux_dim = max(rank, min_aux_dim, 1)
    amps = np.zeros((m.dim, aux_dim), dtype=complex)
    amps[:, :rank] = v * np.sqrt(w)
    return PureVector(amps.reshape(-1), m.factors + ((aux_label, aux_dim),))


def _split(psi: PureVector, shared: Sequence[str]) -> tuple[np.ndarray, Tuple[Factor, ...]]:
    rest = [label for label in psi.labels if label not in shared]
    v = psi.reorder(list(shared) + rest)
    ds = prod(d for _, d in v.factors[:len(shared)])
    return v.amplitudes.reshape(ds, -1), v.factors[len(shared):]


def isometry_between(psi1: PureVector, psi2: PureVector, shared: Sequence[str],
                     atol: float = 1e-7) -> tuple[np.ndarray, Tuple[Factor, ...], Tuple[Factor, ...]]:
    """Isometry ``V: E1 -> E2`` with ``(I_S (x) V) psi1 = psi2``.

    ``E1``/``E2`` are the factors of ``psi1``/``psi2`` not in ``shared``, in
    their original order.  Returns ``(V, E1 factors, E2 factors)``.
    """
    shared = list(shared)
    _positions(psi1.factors, shared)
    _positions(psi2.factors, shared)
    s1 = [f for f in psi1.factors if f[0] in shared]
    s2 = [f for f in psi2.factors if f[0] in shared]
    if sorted(s1) != sorted(s2):
        raise MarginalMismatchError(f"shared factors differ: {s1} vs {s2}")
    a, e1 = _split(psi1, shared)
    b, e2 = _split(psi2, shared)
    d1, d2 = a.shape[1], b.shape[1]
    if d1 > d2:
        raise DimensionOrderError(f"purifying dimension {d1} exceeds target {d2}")
    rho1 = a @ a.conj().T
    rho2 = b @ b.conj().T
    if np.linalg.norm(rho1 - rho2) > atol * max(1.0, np.linalg.norm(rho1)):
        raise MarginalMismatchError(
            f"marginals differ by {np.linalg.norm(rho1 - rho2):.3e} (Frobenius)")
    # psi2 = psi1 V^T as matrices S x E; solve on the support, then complete to an isometry
    # through the polar factor.
    u, s, wh = np.linalg.svd(a, full_matrices=False)
    tol = PURIFY_CUTOFF * max(float(s[0]) if s.size else 0.0, 1e-300)
    r = int(np.sum(s > max(tol, 1e-15)))
    pinv = (wh[:r].conj().T / s[:r]) @ u[:, :r].conj().T
    vt = pinv @ b
    uu, _, vvh = np.linalg.svd(vt.T, full_matrices=True)
    v = uu[:, :d1] @ vvh
    resid = np.linalg.norm(a @ v.T - b)
    if resid > atol * max(1.0, np.linalg.norm(b)):
        raise MarginalMismatchError(f"purifications are not related by an isometry "
                                    f"(residual {resid:.3e})")
    return v, e1, e2


def relate_purifications(psi1: PureVector, psi2: PureVector, shared: Sequence[str],
                         atol: float = 1e-7):
    """Choi matrix (a :class:`~qsupermaps.maps.MapChoi`) of the isometry channel
    taking the purifying factors of ``psi1`` to those of ``psi2``."""
    from .maps import choi_from_kraus

    v, e1, e2 = isometry_between(psi1, psi2, shared, atol)
    return choi_from_kraus([v])
