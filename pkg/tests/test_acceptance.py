"""End-to-end acceptance checks.

Every test prints one ``criterion N: PASS|FAIL`` line with the measured
quantity, then asserts.  Run standalone with ``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from qsupermaps.certify import (
    build_instrument,
    complete_cptni_value,
    complete_to_superchannel,
    cptni_seesaw_value,
    outcome_statistics,
)
from qsupermaps.comb import (
    decompose_super_instrument,
    decompose_superchannel,
    random_comb,
    random_super_instrument,
    random_superchannel,
    recompose,
)
from qsupermaps.errors import NotCompletelyCPTNIError
from qsupermaps.maps import MapChoi, apply_map, classify_map, random_channel, random_density_matrix
from qsupermaps.sdp import SdpProblem, Status, hermitian_basis, lambda_max_problem, solve_sdp
from qsupermaps.supermap import (
    SuperChoi,
    apply_supermap,
    counterexample_supermap,
    is_cpp,
    is_superchannel,
    marginal_from_realization,
    pairing,
    realize_marginal_M,
)
from qsupermaps.tensor import FactoredMatrix, psd_projection

from oracles import (
    choi_via_kraus_on_phi,
    kraus_apply,
    random_density,
    random_hermitian,
    random_kraus,
    random_psd,
    singlet,
)

QUBITS = (2, 2, 2, 2)
N_SUPERCHANNELS = 20

# instances shared between criteria 1-3
_values: dict[str, list] = {}


def report(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


def _counterexample_value():
    if "ce" not in _values:
        t0 = time.perf_counter()
        val = complete_cptni_value(counterexample_supermap())
        seesaw = cptni_seesaw_value(counterexample_supermap(), restarts=32, seed=0)
        _values["ce"] = [val, seesaw, time.perf_counter() - t0]
    return _values["ce"]


def _superchannel_values():
    if "phi" not in _values:
        _values["phi"] = [complete_cptni_value(random_superchannel(QUBITS, seed=s))
                          for s in range(N_SUPERCHANNELS)]
    return _values["phi"]


def test_criterion_1_counterexample_separation(capsys):
    val, seesaw, elapsed = _counterexample_value()
    ok = (abs(val.alpha - 2) <= 1e-6 and 1 - 1e-3 <= seesaw.value <= 1 + 1e-6
          and elapsed < 10)
    report(capsys, 1, ok, f"alpha={val.alpha:.10f} seesaw={seesaw.value:.10f} "
                          f"time={elapsed:.2f}s")


def test_criterion_2_superchannel_normalization(capsys):
    vals = _superchannel_values()
    alpha_err = max(abs(v.alpha - 1) for v in vals)
    rng = np.random.default_rng(2)
    pair_err = 0.0
    for s in range(N_SUPERCHANNELS):
        phi = random_superchannel(QUBITS, seed=s)
        for _ in range(20):
            j_n = random_channel(2, 2, int(rng.integers(1, 5)), seed=rng)
            rho = random_density(2, rng)
            pair_err = max(pair_err, abs(pairing(phi, j_n, rho) - 1))
    ok = alpha_err <= 1e-6 and pair_err <= 1e-8
    report(capsys, 2, ok, f"max|alpha-1|={alpha_err:.2e} max|pairing-1|={pair_err:.2e}")


def test_criterion_3_strong_duality(capsys):
    vals = [_counterexample_value()[0]] + _superchannel_values()
    gap = max(abs(v.beta - v.alpha) for v in vals)
    report(capsys, 3, gap <= 1e-6, f"max|beta-alpha|={gap:.2e} over {len(vals)} instances")


def test_criterion_4_completion_sufficiency(capsys):
    worst_alpha = worst_resid = worst_prime = -np.inf
    count = 0
    for s in range(10):
        comb = random_comb(QUBITS, seed=100 + s, n_outcomes=2)
        for x in range(2):
            theta = recompose(comb, x)
            worst_alpha = max(worst_alpha, complete_cptni_value(theta).alpha)
            prime = complete_to_superchannel(theta)
            assert is_cpp(prime)
            rep = is_superchannel(theta + prime, tol=1e-6)
            worst_resid = max(worst_resid, rep.max_residual)
            worst_prime = max(worst_prime, complete_cptni_value(prime).alpha)
            count += 1
    ok = (count == 20 and worst_alpha <= 1 + 1e-6 and worst_resid <= 1e-6
          and worst_prime <= 1 + 1e-6)
    report(capsys, 4, ok, f"{count} branches, max alpha={worst_alpha:.8f} "
                          f"max residual={worst_resid:.2e} max alpha'={worst_prime:.8f}")


def test_criterion_5_completion_necessity(capsys):
    theta = counterexample_supermap()
    try:
        complete_to_superchannel(theta)
        raised = False
    except NotCompletelyCPTNIError:
        raised = True
    rng = np.random.default_rng(5)
    accepted = 0
    for k in range(50):
        if k % 2 == 0:
            part = random_psd(16, rng, rank=int(rng.integers(1, 17)))
            part *= rng.uniform(0.1, 2.0) / np.trace(part).real * 4
            partner = SuperChoi.from_array(part, QUBITS)
        else:
            # closest CPP guess at "superchannel minus theta"
            phi = random_superchannel(QUBITS, seed=int(rng.integers(1 << 30)))
            partner = SuperChoi.from_factored(psd_projection((phi - theta).j))
        total = theta + partner
        assert is_cpp(total, atol=1e-9)
        if is_superchannel(total, tol=1e-7).holds:
            accepted += 1
    ok = raised and accepted == 0
    report(capsys, 5, ok, f"raised={raised} partners accepted={accepted}/50")


def test_criterion_6_comb_roundtrip(capsys):
    worst = 0.0
    for s in range(20):
        phi = random_superchannel(QUBITS, seed=200 + s)
        worst = max(worst, float(np.linalg.norm(recompose(decompose_superchannel(phi)).data
                                                - phi.data)))
    inst_worst, tp_worst = 0.0, 0.0
    for s in range(5):
        inst = random_super_instrument(QUBITS, seed=300 + s, n_outcomes=2 + s % 2)
        comb = decompose_super_instrument(inst)
        for x, branch in enumerate(inst.branches):
            inst_worst = max(inst_worst, float(np.linalg.norm(recompose(comb, x).data
                                                              - branch.data)))
        rep = classify_map(comb.total_post, atol=1e-7)
        assert rep.cp and rep.tp
        tp_worst = max(tp_worst, rep.tp_deviation)
    ok = worst <= 1e-6 and inst_worst <= 1e-6 and tp_worst <= 1e-7
    report(capsys, 6, ok, f"superchannel max={worst:.2e} instrument max={inst_worst:.2e} "
                          f"sum-of-posts TP residual={tp_worst:.2e}")


def test_criterion_7_choi_action_oracles(capsys):
    rng = np.random.default_rng(7)
    map_err = 0.0
    for _ in range(100):
        d_in, d_out, n = (int(v) for v in rng.integers(1, 4, size=3))
        n = max(n, -(-d_in // d_out))      # enough Kraus operators for an isometry
        kraus = random_kraus(d_in, d_out, n, rng)
        j = MapChoi.from_array(choi_via_kraus_on_phi(kraus, d_in), d_in, d_out)
        rho = random_density(d_in, rng)
        map_err = max(map_err, float(np.abs(apply_map(j, rho).data - kraus_apply(kraus, rho)).max()))
    pair_err = 0.0
    for _ in range(100):
        theta = SuperChoi.from_array(random_psd(16, rng) / 16, QUBITS)
        j_n = random_channel(2, 2, 2, seed=rng)
        rho = random_density(2, rng)
        direct = pairing(theta, j_n, rho)
        via = np.trace(apply_map(apply_supermap(theta, j_n), rho).data).real
        pair_err = max(pair_err, abs(direct - via))
    ok = map_err <= 1e-10 and pair_err <= 1e-10
    report(capsys, 7, ok, f"apply_map vs Kraus={map_err:.2e} pairing consistency={pair_err:.2e}")


def test_criterion_8_marginal_realization(capsys):
    labels = (("A0", 2), ("A1", 2), ("B0", 2))
    cases = []
    for s in range(20):
        j = random_channel(2, 2, 2, seed=400 + s)
        rho = random_density_matrix(2, seed=500 + s)
        cases.append(FactoredMatrix(np.kron(j.data, rho.data), labels))
    cases.append(FactoredMatrix(np.kron(np.eye(2), singlet()), labels))
    rng = np.random.default_rng(8)
    for s in range(20):
        j = random_channel(4, 2, 2, seed=600 + s)
        rho_rb = FactoredMatrix(random_density(4, rng), (("R0", 2), ("B0", 2)))
        cases.append(marginal_from_realization(j, rho_rb, 2, 2))
    worst = max(realize_marginal_M(m).residual for m in cases)
    report(capsys, 8, worst <= 1e-7, f"{len(cases)} marginals, max residual={worst:.2e}")


def test_criterion_9_sdp_sanity(capsys):
    rng = np.random.default_rng(9)
    lam_err = inv_err = 0.0
    for n in range(1, 17):
        c = random_hermitian(n, rng)
        sol = solve_sdp(lambda_max_problem(c))
        assert sol.status is Status.OPTIMAL
        lam_err = max(lam_err, abs(sol.primal_value - np.linalg.eigvalsh(c)[-1]))
        u, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        turned = solve_sdp(lambda_max_problem(u @ c @ u.conj().T)).primal_value
        inv_err = max(inv_err, abs(turned - sol.primal_value))
    for d in (2, 3, 4):
        c = random_hermitian(2 * d, rng)
        cons = [(np.kron(np.eye(2), h), float(np.trace(h).real)) for h in hermitian_basis(d)]
        base = solve_sdp(SdpProblem.from_constraints(c, cons)).primal_value
        u, _ = np.linalg.qr(rng.standard_normal((2 * d,) * 2) + 1j * rng.standard_normal((2 * d,) * 2))
        rot = [(u @ a @ u.conj().T, b) for a, b in cons]
        turned = solve_sdp(SdpProblem.from_constraints(u @ c @ u.conj().T, rot)).primal_value
        inv_err = max(inv_err, abs(turned - base))
    ok = lam_err <= 1e-8 and inv_err <= 1e-8
    report(capsys, 9, ok, f"lambda_max error={lam_err:.2e} conjugation drift={inv_err:.2e}")


def test_criterion_10_instrument_statistics(capsys):
    rng = np.random.default_rng(10)
    insts = [random_super_instrument(QUBITS, seed=700 + s, n_outcomes=2 + s % 3) for s in range(10)]
    sum_err, neg = 0.0, np.inf
    for k in range(100):
        inst = insts[k % len(insts)]
        p = outcome_statistics(inst, random_channel(2, 2, int(rng.integers(1, 5)), seed=rng),
                               random_density(2, rng))
        sum_err = max(sum_err, abs(p.sum() - 1))
        neg = min(neg, float(p.min()))
    phi = random_superchannel(QUBITS, seed=11)
    halves = build_instrument([0.5 * phi, 0.5 * phi])
    half_err = 0.0
    for _ in range(20):
        p = outcome_statistics(halves, random_channel(2, 2, 2, seed=rng), random_density(2, rng))
        half_err = max(half_err, float(np.abs(p - 0.5).max()))
    ok = sum_err <= 1e-9 and neg >= -1e-9 and half_err <= 1e-9
    report(capsys, 10, ok, f"max|sum-1|={sum_err:.2e} min p={neg:.2e} "
                           f"halves deviation={half_err:.2e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
