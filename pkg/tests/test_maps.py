import numpy as np
import pytest

from qsupermaps.errors import DimensionMismatchError, NotCPTNIError, ShapeMismatchError
from qsupermaps.maps import (
    MapChoi,
    apply_map,
    apply_to_factors,
    choi_from_function,
    choi_from_kraus,
    classify_map,
    complete_map_to_channel,
    identity_channel,
    kraus_from_choi,
    random_channel,
    random_density_matrix,
)
from qsupermaps.tensor import FactoredMatrix

from oracles import (
    PAULI_Y,
    apply_choi_loops,
    choi_via_kraus_on_phi,
    kraus_apply,
    phi_plus,
    random_density,
    random_kraus,
)


def test_identity_kraus_gives_phi_plus():
    j = choi_from_kraus([np.eye(2)])
    assert np.allclose(j.data, phi_plus(2))
    assert abs(np.trace(j.data) - 2) < 1e-12


def test_amplitude_damping_limit():
    k0 = np.array([[1, 0], [0, 0]])
    k1 = np.array([[0, 1], [0, 0]])
    j = choi_from_kraus([k0, k1])
    assert np.allclose(j.data, np.kron(np.eye(2), np.diag([1, 0])))


def test_pauli_y_kraus_matches_conjugated_phi_plus():
    j = choi_from_kraus([PAULI_Y])
    yy = np.kron(np.eye(2), PAULI_Y)
    assert np.allclose(j.data, yy @ phi_plus(2) @ yy.conj().T)


def test_choi_matches_kraus_on_entangled_vector():
    rng = np.random.default_rng(0)
    ks = random_kraus(3, 2, 3, rng)
    assert np.allclose(choi_from_kraus(ks).data, choi_via_kraus_on_phi(ks, 3))


def test_kraus_shape_errors():
    with pytest.raises(ShapeMismatchError):
        choi_from_kraus([])
    with pytest.raises(ShapeMismatchError):
        choi_from_kraus([np.eye(2), np.eye(3)])


def test_apply_identity_channel():
    rho = np.diag([1.0, 0.0])
    assert np.allclose(apply_map(identity_channel(2), rho).data, rho)


def test_apply_constant_channel():
    j = MapChoi.from_array(np.kron(np.eye(2), np.eye(2) / 2), 2, 2)
    rng = np.random.default_rng(1)
    assert np.allclose(apply_map(j, random_density(2, rng)).data, np.eye(2) / 2)


def test_apply_matches_kraus_and_loops():
    rng = np.random.default_rng(2)
    ks = random_kraus(2, 3, 4, rng)
    j = choi_from_kraus(ks)
    rho = random_density(2, rng)
    want = kraus_apply(ks, rho)
    assert np.abs(apply_map(j, rho).data - want).max() <= 1e-10
    assert np.abs(apply_choi_loops(j.data, rho, 2, 3) - want).max() <= 1e-10


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        apply_map(identity_channel(2), np.eye(3))


def test_apply_is_bilinear():
    rng = np.random.default_rng(3)
    j1, j2 = random_channel(2, 2, 2, seed=1), random_channel(2, 2, 3, seed=2)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    a, b = 0.3, -1.7
    lhs = apply_map(a * j1 + b * j2, r1).data
    assert np.allclose(lhs, a * apply_map(j1, r1).data + b * apply_map(j2, r1).data, atol=1e-10)
    lhs = apply_map(j1, a * r1 + b * r2).data
    assert np.allclose(lhs, a * apply_map(j1, r1).data + b * apply_map(j1, r2).data, atol=1e-10)


def test_apply_to_factors_acts_locally():
    rng = np.random.default_rng(4)
    ks = random_kraus(2, 2, 2, rng)
    j = choi_from_kraus(ks)
    a, b = random_density(2, rng), random_density(3, rng)
    state = FactoredMatrix(np.kron(a, b), (("X", 2), ("Y", 3)))
    out = apply_to_factors(state, j, ["X"], [("Z", 2)])
    assert out.labels == ("Y", "Z")
    assert np.allclose(out.data, np.kron(b, kraus_apply(ks, a)))


def test_classify_examples():
    rep = classify_map(MapChoi.from_array(phi_plus(2), 2, 2))
    assert rep.cp and rep.tp and rep.tni
    rep = classify_map(MapChoi.from_array(0.5 * phi_plus(2), 2, 2))
    assert rep.cp and not rep.tp and rep.tni
    rep = classify_map(MapChoi.from_array(np.diag([1, -0.1, 1, 1]), 2, 2))
    assert not rep.cp
    assert abs(rep.min_eigenvalue + 0.1) < 1e-12


def test_classify_trace_increasing():
    rep = classify_map(MapChoi.from_array(2 * phi_plus(2), 2, 2))
    assert rep.cp and not rep.tp and not rep.tni
    assert abs(rep.tni_min_eigenvalue + 1) < 1e-12


def test_random_channel_is_cptp_and_deterministic():
    j = random_channel(2, 2, 1, seed=5)
    rep = classify_map(j)
    assert rep.cp and rep.tp
    full = random_channel(2, 2, 4, seed=5)
    assert np.abs(full.marginal_in() - np.eye(2)).max() <= 1e-10
    assert np.array_equal(random_channel(3, 2, 2, seed=9).data, random_channel(3, 2, 2, seed=9).data)


def test_random_channel_unit_trace_outputs():
    rng = np.random.default_rng(6)
    for s in range(5):
        j = random_channel(2, 3, 2, seed=s)
        for _ in range(20):
            rho = random_density_matrix(2, seed=rng)
            assert abs(np.trace(apply_map(j, rho).data) - 1) <= 1e-9


def test_kraus_extraction_roundtrip():
    j = random_channel(3, 2, 3, seed=11)
    back = choi_from_kraus(kraus_from_choi(j))
    assert np.linalg.norm(back.data - j.data) <= 1e-8


def test_choi_from_function_matches_kraus():
    rng = np.random.default_rng(8)
    ks = random_kraus(2, 2, 2, rng)
    j = choi_from_function(lambda r: kraus_apply(ks, r), 2, 2)
    assert np.allclose(j.data, choi_from_kraus(ks).data)


def test_completion_of_channel_is_zero():
    j = random_channel(2, 2, 2, seed=0)
    assert np.abs(complete_map_to_channel(j).data).max() <= 1e-10


def test_completion_of_half_identity():
    j = MapChoi.from_array(0.5 * phi_plus(2), 2, 2)
    comp = complete_map_to_channel(j)
    assert np.allclose(comp.data, np.kron(0.5 * np.eye(2), np.eye(2) / 2))
    rep = classify_map(j + comp)
    assert rep.cp and rep.tp


def test_completion_of_scaled_random_channel():
    for s in range(5):
        j = 0.3 * random_channel(2, 3, 2, seed=s)
        comp = complete_map_to_channel(j)
        rep_c = classify_map(comp)
        assert rep_c.cp and rep_c.tni
        assert classify_map(j + comp).tp


def test_completion_rejects_trace_increasing():
    with pytest.raises(NotCPTNIError):
        complete_map_to_channel(MapChoi.from_array(2 * phi_plus(2), 2, 2))
