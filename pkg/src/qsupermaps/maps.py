"""Choi matrices of linear maps between quantum systems.

Convention: ``J = sum_{jk} |j><k| (x) E(|j><k|)`` with the input factor first,
so that ``E(rho) = Tr_in[J (rho^T (x) I_out)]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, NotCPTNIError, ShapeMismatchError
from .tensor import (
    Factor,
    FactoredMatrix,
    hermitian_eigh,
    is_psd,
    partial_trace,
)

IN, OUT = "in", "out"
#: absolute tolerance on marginal entries for the TP / TNI predicates
MARGINAL_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class MapChoi:
    """Choi matrix of a linear map ``C^{d_in x d_in} -> C^{d_out x d_out}``."""

    d_in: int
    d_out: int
    j: FactoredMatrix

    def __post_init__(self):
        if self.j.factors != ((IN, self.d_in), (OUT, self.d_out)):
            raise ShapeMismatchError(
                f"MapChoi expects factors (in={self.d_in}, out={self.d_out}), got {self.j.factors}")

    @classmethod
    def from_array(cls, data, d_in: int, d_out: int) -> "MapChoi":
        return cls(d_in, d_out, FactoredMatrix(data, ((IN, d_in), (OUT, d_out))))

    @property
    def data(self) -> np.ndarray:
        return self.j.data

    def marginal_in(self) -> np.ndarray:
        """``Tr_out J``, equal to the identity exactly when the map is trace preserving."""
        return partial_trace(self.j, [OUT]).data

    def on_factors(self, in_factors: Sequence[Factor], out_factors: Sequence[Factor]) -> FactoredMatrix:
        """The Choi matrix with ``in``/``out`` split into the given labeled factors."""
        if prod(d for _, d in in_factors) != self.d_in or prod(d for _, d in out_factors) != self.d_out:
            raise DimensionMismatchError(
                f"factors {in_factors} -> {out_factors} do not match {self.d_in} -> {self.d_out}")
        return FactoredMatrix(self.data, tuple(in_factors) + tuple(out_factors))

    def __add__(self, other: "MapChoi") -> "MapChoi":
        return MapChoi(self.d_in, self.d_out, self.j + other.j)

    def __mul__(self, scalar) -> "MapChoi":
        return MapChoi(self.d_in, self.d_out, self.j * scalar)

    __rmul__ = __mul__


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> MapChoi:
    """Choi matrix of ``rho -> sum_m K_m rho K_m^dagger``."""
    if len(kraus) == 0:
        raise ShapeMismatchError("need at least one Kraus operator")
    ks = [np.atleast_2d(np.asarray(k, dtype=complex)) for k in kraus]
    shape = ks[0].shape
    if any(k.shape != shape for k in ks):
        raise ShapeMismatchError(f"inconsistent Kraus shapes {[k.shape for k in ks]}")
    d_out, d_in = shape
    # |K>> = sum_j |j> (x) K|j>, i.e. the row-major flattening of K^T
    vecs = np.stack([k.T.reshape(-1) for k in ks])
    return MapChoi.from_array(vecs.T @ vecs.conj(), d_in, d_out)


def kraus_from_choi(j: MapChoi, cutoff: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of a PSD Choi matrix."""
    w, v = hermitian_eigh(j.data)
    lam_max = max(float(w[-1]), 0.0)
    out = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam_max == 0 or lam <= cutoff * lam_max:
            break
        out.append((np.sqrt(lam) * vec).reshape(j.d_in, j.d_out).T)
    return out


def choi_from_function(f: Callable[[np.ndarray], np.ndarray], d_in: int, d_out: int) -> MapChoi:
    """Choi matrix of a linear function given on ``d_in x d_in`` arrays, by basis summation."""
    data = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for a in range(d_in):
        for b in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[a, b] = 1.0
            out = np.asarray(f(e), dtype=complex)
            if out.shape != (d_out, d_out):
                raise ShapeMismatchError(f"function returned shape {out.shape}, expected {(d_out, d_out)}")
            data[a * d_out:(a + 1) * d_out, b * d_out:(b + 1) * d_out] = out
    return MapChoi.from_array(data, d_in, d_out)


def identity_channel(d: int) -> MapChoi:
    return choi_from_kraus([np.eye(d)])


def unitary_channel(u: np.ndarray) -> MapChoi:
    return choi_from_kraus([u])


def _state_array(rho) -> np.ndarray:
    return rho.data if isinstance(rho, FactoredMatrix) else np.asarray(rho, dtype=complex)


def apply_map(j: MapChoi, rho, label: str = "out") -> FactoredMatrix:
    """Evaluate ``E(rho) = Tr_in[J (rho^T (x) I)]``."""
    r = _state_array(rho)
    if r.shape != (j.d_in, j.d_in):
        raise DimensionMismatchError(f"state has shape {r.shape}, map expects input dim {j.d_in}")
    t = j.data.reshape(j.d_in, j.d_out, j.d_in, j.d_out)
    out = np.einsum("iajb,ij->ab", t, r)
    return FactoredMatrix(out, ((label, j.d_out),))


def apply_to_factors(state: FactoredMatrix, j: MapChoi, in_labels: Sequence[str],
                     out_factors: Sequence[Factor]) -> FactoredMatrix:
    """Apply a map to the named factors of ``state``, identity elsewhere.

    The input factors are removed and ``out_factors`` appended at the end.
    """
    in_labels = list(in_labels)
    rest = [label for label in state.labels if label not in in_labels]
    s = state.reorder(rest + in_labels)
    d_rest = prod(s.dims[:len(rest)])
    d_in = prod(s.dims[len(rest):])
    d_out = prod(d for _, d in out_factors)
    if d_in != j.d_in or d_out != j.d_out:
        raise DimensionMismatchError(
            f"map {j.d_in}->{j.d_out} applied to factors of dim {d_in} -> {d_out}")
    st = s.data.reshape(d_rest, d_in, d_rest, d_in)
    jt = j.data.reshape(d_in, d_out, d_in, d_out)
    out = np.einsum("risj,iajb->rasb", st, jt).reshape(d_rest * d_out, d_rest * d_out)
    return FactoredMatrix(out, s.factors[:len(rest)] + tuple(out_factors))


@dataclass(frozen=True)
class MapReport:
    cp: bool
    tp: bool
    tni: bool
    min_eigenvalue: float
    tp_deviation: float
    tni_min_eigenvalue: float


def classify_map(j: MapChoi, atol: float = MARGINAL_ATOL) -> MapReport:
    """CP / TP / TNI predicates with the witnesses that decided them.

    ``min_eigenvalue`` is the most negative Choi eigenvalue, ``tp_deviation``
    the largest entry of ``|Tr_out J - I|`` and ``tni_min_eigenvalue`` the
    smallest eigenvalue of ``I - Tr_out J``.
    """
    w = hermitian_eigh(j.data)[0]
    marg = j.marginal_in()
    dev = float(np.max(np.abs(marg - np.eye(j.d_in))))
    gap = float(hermitian_eigh(np.eye(j.d_in) - marg)[0][0])
    return MapReport(
        cp=bool(j.j.is_hermitian()) and is_psd(j.data, atol=atol),
        tp=dev <= atol,
        tni=j.j.is_hermitian() and gap >= -atol,
        min_eigenvalue=float(w[0]),
        tp_deviation=dev,
        tni_min_eigenvalue=gap,
    )


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    """Isometry ``C^{d_in} -> C^{d_out}`` from the QR factor of a complex Gaussian matrix."""
    g = rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(d_in: int, d_out: int, kraus_rank: int = 1,
                   seed: Optional[int | np.random.Generator] = None) -> MapChoi:
    """Random CPTP map via a Stinespring isometry ``d_in -> d_out * kraus_rank``."""
    if kraus_rank < 1:
        raise ValueError("kraus_rank must be at least 1")
    rng = np.random.default_rng(seed)
    v = random_isometry(d_in, d_out * kraus_rank, rng)
    kraus = [v.reshape(d_out, kraus_rank, d_in)[:, m, :] for m in range(kraus_rank)]
    j = choi_from_kraus(kraus)
    rep = classify_map(j)
    assert rep.cp and rep.tp, "random channel failed its own CPTP check"
    return j


def complete_map_to_channel(j: MapChoi) -> MapChoi:
    """Choi of ``J'`` with ``J + J'`` CPTP: ``(I - Tr_out J) (x) u_out``."""
    rep = classify_map(j)
    if not (rep.cp and rep.tni):
        raise NotCPTNIError(f"map is not CPTNI (min eig {rep.min_eigenvalue:.3e}, "
                            f"TNI gap {rep.tni_min_eigenvalue:.3e})")
    defect = np.eye(j.d_in) - j.marginal_in()
    defect = 0.5 * (defect + defect.conj().T)
    return MapChoi.from_array(np.kron(defect, np.eye(j.d_out) / j.d_out), j.d_in, j.d_out)


def random_unitary(d: int, seed: Optional[int | np.random.Generator] = None) -> np.ndarray:
    return random_isometry(d, d, np.random.default_rng(seed))


def random_pure_state(d: int, seed: Optional[int | np.random.Generator] = None,
                      label: str = "B0") -> FactoredMatrix:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return FactoredMatrix(np.outer(v, v.conj()), ((label, d),))


def random_density_matrix(d: int, seed: Optional[int | np.random.Generator] = None,
                          rank: Optional[int] = None, label: str = "B0") -> FactoredMatrix:
    """Density matrix ``G G^dagger / Tr`` for a complex Gaussian ``d x rank`` matrix ``G``."""
    rng = np.random.default_rng(seed)
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return FactoredMatrix(rho / np.trace(rho).real, ((label, d),))
