"""Pre-processing / memory / post-processing realizations of supermaps.

A :class:`CombRealization` holds a channel ``pre: B0 -> A0 E0`` and maps
``post_x: A1 E0 -> B1``.  Plugging a map ``E: A0 -> A1`` in between (with the
memory ``E0`` carried alongside) gives the supermap branch
``Theta_x[E] = post_x o (E (x) id_E0) o pre``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import Optional, Sequence

import numpy as np

from .certify import SuperInstrument, build_instrument
from .errors import (
    IndexOutOfRangeError,
    NotCPTNIError,
    NotSuperchannelError,
    NotValidInstrumentError,
    ShapeMismatchError,
)
from .maps import MapChoi, apply_to_factors, choi_from_kraus, classify_map, random_isometry
from .supermap import LABELS, SuperChoi, is_cpp, is_superchannel
from .tensor import (
    FactoredMatrix,
    PureVector,
    isometry_between,
    kron,
    kron_vectors,
    phi_plus,
    phi_plus_vector,
    purify,
)

#: tolerance on the CP / TP / TNI checks of a realization
COMB_ATOL = 1e-7
# the copy of A1 that the post-processing reads
_A1_COPY = "A1~"


@dataclass(frozen=True, eq=False)
class CombRealization:
    pre: MapChoi
    posts: tuple[MapChoi, ...]
    e0_dim: int

    def __post_init__(self):
        posts = tuple(self.posts)
        object.__setattr__(self, "posts", posts)
        if not posts:
            raise ShapeMismatchError("a realization needs at least one post-processing map")
        e0 = self.e0_dim
        if self.pre.d_out % e0 or posts[0].d_in % e0:
            raise ShapeMismatchError(f"memory dimension {e0} does not divide the map dimensions")
        for p in posts:
            if (p.d_in, p.d_out) != (posts[0].d_in, posts[0].d_out):
                raise ShapeMismatchError("post-processing maps have different shapes")
        rep = classify_map(self.pre, atol=COMB_ATOL)
        if not (rep.cp and rep.tp):
            raise NotCPTNIError(f"pre-processing is not a channel (min eig {rep.min_eigenvalue:.2e}, "
                                f"TP deviation {rep.tp_deviation:.2e})")
        for i, p in enumerate(posts):
            rep = classify_map(p, atol=COMB_ATOL)
            if not (rep.cp and rep.tni):
                raise NotCPTNIError(f"post-processing {i} is not CPTNI")
        total = posts[0]
        for p in posts[1:]:
            total = total + p
        if not classify_map(total, atol=COMB_ATOL).tp:
            raise NotValidInstrumentError("post-processing maps do not sum to a channel")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """``(a0, a1, b0, b1)`` of the realized supermap."""
        e0 = self.e0_dim
        return (self.pre.d_out // e0, self.posts[0].d_in // e0, self.pre.d_in, self.posts[0].d_out)

    @property
    def total_post(self) -> MapChoi:
        total = self.posts[0]
        for p in self.posts[1:]:
            total = total + p
        return total


def recompose(c: CombRealization, branch: int = 0) -> SuperChoi:
    """Supermap Choi matrix of branch ``branch``: link ``pre``, a fresh
    maximally entangled pair on ``A1``, and ``posts[branch]``."""
    if not 0 <= branch < len(c.posts):
        raise IndexOutOfRangeError(f"branch {branch} out of range for {len(c.posts)} posts")
    a0, a1, b0, b1 = c.dims
    pre = c.pre.on_factors([("B0", b0)], [("A0", a0), ("E0", c.e0_dim)])
    state = kron(pre, phi_plus("A1", _A1_COPY, a1))
    out = apply_to_factors(state, c.posts[branch], [_A1_COPY, "E0"], [("B1", b1)])
    return SuperChoi.from_factored(out.reorder(LABELS).hermitian_part())


def _pre_from_marginal(phi: SuperChoi) -> tuple[MapChoi, PureVector]:
    """Pre-processing channel and the purification ``xi`` of ``J^{AB0}`` it induces.

    ``xi`` lives on ``A0, B0, A1, A1~, E0``.
    """
    a0, a1, b0, _ = phi.dims
    psi = purify(phi.marginal("A0", "B0") / a1, "E0")
    e0 = psi.dims[-1]
    pre_choi = psi.density().reorder(["B0", "A0", "E0"]).hermitian_part()
    pre = MapChoi.from_array(pre_choi.data, b0, a0 * e0)
    xi = kron_vectors(psi, phi_plus_vector("A1", _A1_COPY, a1))
    return pre, xi.reorder(["A0", "A1", "B0", _A1_COPY, "E0"])


def _kraus_from_isometry(v: np.ndarray, out_dims: Sequence[int]) -> list[np.ndarray]:
    """Split an isometry with output ``(kept, discarded...)`` into Kraus operators."""
    t = v.reshape(out_dims[0], -1, v.shape[1])
    return [t[:, k, :] for k in range(t.shape[1])]


def decompose_superchannel(phi: SuperChoi, tol: float = COMB_ATOL) -> CombRealization:
    """Realize a superchannel with one pre- and one post-processing channel.

    The memory dimension is the rank of ``J^{A0B0} / a1``.
    """
    rep = is_superchannel(phi, tol=tol)
    if not rep.holds:
        raise NotSuperchannelError(f"not a superchannel (max residual {rep.max_residual:.3e})")
    a0, a1, b0, b1 = phi.dims
    pre, xi = _pre_from_marginal(phi)
    e0 = xi.dims[-1]
    chi = purify(phi.j, "G0", min_aux_dim=ceil(a1 * e0 / b1))
    v, _, e2 = isometry_between(xi, chi, ["A0", "A1", "B0"], atol=1e-6)
    post = choi_from_kraus(_kraus_from_isometry(v, [b1]))
    return CombRealization(pre, (post,), e0)


def decompose_super_instrument(inst: SuperInstrument, tol: float = COMB_ATOL) -> CombRealization:
    """Common pre-processing plus one post-processing map per branch.

    The branches are purified jointly with a classical register ``X1``; the
    isometry from the pre-processing purification onto it yields a
    post-processing instrument whose ``x``-th outcome reproduces branch ``x``.
    """
    branches = inst.branches
    for i, b in enumerate(branches):
        if not is_cpp(b):
            raise NotValidInstrumentError(f"branch {i} is not CPP")
    total = inst.total
    rep = is_superchannel(total, tol=tol)
    if not rep.holds:
        raise NotValidInstrumentError(f"branches do not sum to a superchannel "
                                      f"(max residual {rep.max_residual:.3e})")
    a0, a1, b0, b1 = total.dims
    nx = len(branches)
    pre, xi = _pre_from_marginal(total)
    e0 = xi.dims[-1]
    d = total.j.dim
    joint = np.zeros((nx * d, nx * d), dtype=complex)
    for x, b in enumerate(branches):
        joint[x * d:(x + 1) * d, x * d:(x + 1) * d] = b.data
    joint_m = FactoredMatrix(joint, (("X1", nx),) + total.j.factors)
    varphi = purify(joint_m, "F0", min_aux_dim=ceil(a1 * e0 / (b1 * nx)))
    varphi = varphi.reorder(["A0", "A1", "B0", "B1", "X1", "F0"])
    w, _, e2 = isometry_between(xi, varphi, ["A0", "A1", "B0"], atol=1e-6)
    f0 = e2[-1][1]
    t = w.reshape(b1, nx, f0, a1 * e0)
    posts = tuple(choi_from_kraus([t[:, x, f, :] for f in range(f0)]) for x in range(nx))
    return CombRealization(pre, posts, e0)


def random_comb(dims, seed: Optional[int | np.random.Generator] = None, e0_dim: int = 2,
                n_outcomes: int = 1, kraus_rank: int = 2) -> CombRealization:
    """Random pre-processing channel and a random ``n_outcomes``-branch post instrument."""
    a0, a1, b0, b1 = dims
    rng = np.random.default_rng(seed)
    # a Stinespring isometry needs at least as many outputs as inputs
    r_pre = max(kraus_rank, ceil(b0 / (a0 * e0_dim)))
    v_pre = random_isometry(b0, a0 * e0_dim * r_pre, rng)
    pre = choi_from_kraus(_kraus_from_isometry(v_pre, [a0 * e0_dim]))
    d_in = a1 * e0_dim
    r_post = max(kraus_rank, ceil(d_in / (b1 * n_outcomes)))
    v_post = random_isometry(d_in, b1 * n_outcomes * r_post, rng)
    t = v_post.reshape(b1, n_outcomes, r_post, d_in)
    posts = tuple(choi_from_kraus([t[:, x, k, :] for k in range(r_post)])
                  for x in range(n_outcomes))
    return CombRealization(pre, posts, e0_dim)


def random_superchannel(dims=(2, 2, 2, 2), seed: Optional[int | np.random.Generator] = None,
                        e0_dim: int = 2) -> SuperChoi:
    return recompose(random_comb(dims, seed, e0_dim=e0_dim))


def random_super_instrument(dims=(2, 2, 2, 2), seed: Optional[int | np.random.Generator] = None,
                            n_outcomes: int = 2, e0_dim: int = 2) -> SuperInstrument:
    c = random_comb(dims, seed, e0_dim=e0_dim, n_outcomes=n_outcomes)
    return build_instrument([recompose(c, x) for x in range(n_outcomes)])
