from dataclasses import replace

import numpy as np
import pytest

from cqlqg.core.closedloop import (
    GramianSet,
    assemble,
    ccr_preservation_residual,
    closed_loop,
    cost_identities,
    covariance_positivity,
    gramians,
    lqg_cost,
    lqg_cost_vectorized,
)
from cqlqg.core.exceptions import UnstableSystemError
from cqlqg.core.matlib import ccr_block
from cqlqg.core.model import ControllerParams, realize_controller

from helpers import perturbed


def test_example8_optimal_cost(plant8, u8):
    cost = lqg_cost(plant8, u8)
    assert cost.stabilizing
    assert cost.value == pytest.approx(12.1026, abs=5e-3)


def test_example10_optimal_cost_and_spectrum(plant10, u10):
    cost = lqg_cost(plant10, u10)
    assert cost.value == pytest.approx(2.0418, abs=5e-3)

    _, sys = closed_loop(plant10, u10)
    expected = np.array([-0.0852 - 0.0485j, -0.0852 + 0.0485j, -0.0245 - 0.1019j, -0.0245 + 0.1019j])
    eigs = sys.sorted_eigenvalues()
    assert np.allclose(eigs.real, expected.real, atol=5e-4)
    assert np.allclose(eigs.imag, expected.imag, atol=5e-4)


def test_example9_optimal_cost(plant9, u9):
    assert lqg_cost(plant9, u9).value == pytest.approx(274.0419, abs=5e-2)


def test_zero_controller_is_not_stabilizing(plant8):
    u = ControllerParams.zeros(plant8.n, plant8.m2, plant8.p1)
    cost = lqg_cost(plant8, u)
    assert not cost.stabilizing
    assert cost.value == float("inf")

    _, sys = closed_loop(plant8, u)
    with pytest.raises(UnstableSystemError) as info:
        gramians(sys)
    assert info.value.spectral_abscissa == pytest.approx(sys.spectral_abscissa)
    with pytest.raises(UnstableSystemError):
        lqg_cost_vectorized(plant8, u)


def test_cost_expressions_agree(examples, rng):
    for plant, u_opt in examples.values():
        u = perturbed(plant, u_opt, rng, 0.01)
        _, sys = closed_loop(plant, u)
        values = cost_identities(sys, gramians(sys))
        reference = lqg_cost(plant, u).value
        for value in values.values():
            assert value == pytest.approx(reference, rel=1e-9)
        assert lqg_cost_vectorized(plant, u).value == pytest.approx(reference, rel=1e-9)


def test_lyapunov_backends_give_same_cost(plant8, u8):
    kron = lqg_cost(plant8, u8, method="kron").value
    schur = lqg_cost(plant8, u8, method="schur").value
    assert schur == pytest.approx(kron, rel=1e-10)


def test_gramian_blocks(plant8, u8):
    _, sys = closed_loop(plant8, u8)
    gram = gramians(sys)
    assert gram.P.shape == (4, 4)
    assert np.array_equal(gram.block("P", 2, 1), gram.P[2:, :2])
    assert np.allclose(gram.H, gram.Q @ gram.P)
    assert np.min(np.linalg.eigvalsh(gram.P)) > 0


def test_closed_loop_preserves_ccr(plant10, u10):
    _, sys = closed_loop(plant10, u10)
    assert ccr_preservation_residual(sys) < 1e-12


def test_quantum_covariance_is_positive(plant10, u10, rng):
    for u in (u10, perturbed(plant10, u10, rng, 0.01)):
        _, sys = closed_loop(plant10, u)
        min_eig, passed = covariance_positivity(gramians(sys), sys.theta)
        assert passed, min_eig


def test_ccr_preservation_detects_stale_output_matrix(plant10, u10, rng):
    real = realize_controller(plant10, u10)
    assert ccr_preservation_residual(assemble(plant10, real)) < 1e-12

    stale = replace(real, b=real.b + 0.05 * rng.standard_normal(real.b.shape))
    assert ccr_preservation_residual(assemble(plant10, stale)) > 1e-3


def test_covariance_positivity_at_the_boundary():
    theta = ccr_block(2)
    gram = GramianSet(P=np.eye(2), Q=np.eye(2), H=np.eye(2), n=1)
    # eigenvalues of I + iJ are 0 and 2
    min_eig, passed = covariance_positivity(gram, theta)
    assert min_eig == pytest.approx(0.0, abs=1e-12)
    assert passed

    min_eig, passed = covariance_positivity(replace(gram, P=0.5 * np.eye(2)), theta)
    assert min_eig == pytest.approx(-0.5)
    assert not passed
