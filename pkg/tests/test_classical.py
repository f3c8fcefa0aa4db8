import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povm_merit import classical
from povm_merit.classical import (
    GridDistribution,
    bandwidth,
    bin_distribution,
    binned_entropy,
    eigenmodes,
    outcome_collision_entropy,
    outcome_shannon_entropy,
    posterior_frequency,
    posterior_time,
    single_photon_block,
    total_bandwidth,
    uncertainty_check,
    uncertainty_rhs,
)
from povm_merit.exceptions import BinTooFine, NoSinglePhotonSector, ZeroBandwidth, ZeroTraceElement
from povm_merit.hilbert import FrequencyGrid, ModeBasis, ModeFunction, TimeWindow, enumerate_fock
from povm_merit.models import ideal_pnr, on_off
from povm_merit.povm import Povm, PovmElement

from conftest import random_psd


def _el(m, label="k"):
    return PovmElement(label, 1, m)


def test_block_of_single_photon_projector(modes2):
    b = enumerate_fock(modes2, 2)
    m = np.zeros((b.dimension, b.dimension))
    k = b.fock_index(1, 1)
    m[k, k] = 1
    block = single_photon_block(_el(m), b)
    np.testing.assert_array_equal(block.matrix, [[0, 0], [0, 1]])


def test_block_of_identity(modes4):
    b = enumerate_fock(modes4, 2)
    np.testing.assert_array_equal(single_photon_block(_el(np.eye(b.dimension)), b).matrix, np.eye(4))


def test_block_ignores_vacuum_term(modes2):
    b = enumerate_fock(modes2, 2)
    eta, pd = 0.7, 0.05
    m = np.zeros((b.dimension, b.dimension))
    k = b.fock_index(0, 1)
    m[k, k] = eta
    m[0, 0] = pd
    block = single_photon_block(_el(m), b)
    expected = np.zeros((2, 2))
    expected[0, 0] = eta
    np.testing.assert_array_equal(block.matrix, expected)


def test_no_single_photon_sector(modes1):
    b = enumerate_fock(modes1, 0)
    with pytest.raises(NoSinglePhotonSector):
        single_photon_block(_el(np.eye(1)), b)


def test_bandwidth_examples(modes2, modes4):
    b = enumerate_fock(modes2, 1)
    # single pixel sensitive to one mode with probability p
    p = 0.3
    m = np.zeros((3, 3))
    m[b.fock_index(0, 1), b.fock_index(0, 1)] = p
    assert bandwidth(single_photon_block(_el(m), b)) == pytest.approx(p)
    b4 = enumerate_fock(modes4, 1)
    assert bandwidth(single_photon_block(_el(np.eye(5)), b4)) == pytest.approx(4)
    m = np.zeros((3, 3))
    m[b.fock_index(0, 1), b.fock_index(0, 1)] = 0.9
    m[b.fock_index(1, 1), b.fock_index(1, 1)] = 0.4
    assert bandwidth(single_photon_block(_el(m), b)) == pytest.approx(1.3)


def test_total_bandwidth(modes4, modes1):
    assert total_bandwidth(ideal_pnr(enumerate_fock(modes4, 1))) == pytest.approx(4)
    assert total_bandwidth(on_off(enumerate_fock(modes1, 3), 0, 0.65, 0.0)) == pytest.approx(0.65)
    assert total_bandwidth(Povm(enumerate_fock(modes1, 2), ())) == 0.0


def test_total_bandwidth_equals_trace_of_summed_block(modes4, rng):
    from conftest import random_povm_matrices

    b = enumerate_fock(modes4, 1)
    mats = random_povm_matrices(rng, b.dimension, 3)
    povm = Povm(b, tuple(_el(m, f"k{i}") for i, m in enumerate(mats)))
    assert total_bandwidth(povm) == pytest.approx(np.trace(classical.summed_block(povm)).real)


def test_eigenmodes_diagonal(modes2):
    block = classical.SinglePhotonBlock("k", np.diag([0.2, 0.5]).astype(complex))
    d = eigenmodes(block, modes2)
    np.testing.assert_allclose(d.weights, [0.5, 0.2])
    # eigenmodes are the basis modes up to a phase
    assert abs(abs(np.vdot(d.modes[0].amplitudes, modes2[1].amplitudes)) * modes2.grid.d_omega - 1) < 1e-12
    assert abs(abs(np.vdot(d.modes[1].amplitudes, modes2[0].amplitudes)) * modes2.grid.d_omega - 1) < 1e-12


def test_eigenmodes_superposition(modes2):
    plus = np.array([1, 1]) / np.sqrt(2)
    block = classical.SinglePhotonBlock("k", 0.5 * np.outer(plus, plus).astype(complex))
    d = eigenmodes(block, modes2)
    np.testing.assert_allclose(d.weights, [0.5, 0.0], atol=1e-14)
    target = modes2.synthesize(plus)
    ov = np.vdot(target.amplitudes, d.modes[0].amplitudes) * modes2.grid.d_omega
    assert abs(ov) == pytest.approx(1.0, abs=1e-12)


def test_eigen_weights_sum_to_bandwidth(modes4, rng):
    m = random_psd(rng, 4)
    m = 0.9 * m / np.linalg.eigvalsh(m)[-1]
    block = classical.SinglePhotonBlock("k", m)
    d = eigenmodes(block, modes4)
    assert d.bandwidth == pytest.approx(bandwidth(block), abs=1e-8)
    assert np.all(d.weights >= -1e-9) and np.all(d.weights <= 1 + 1e-9)


def test_outcome_entropies():
    v = np.array([1, 2j, 0.5])
    rank1 = classical.SinglePhotonBlock("r", np.outer(v, v.conj()))
    assert outcome_shannon_entropy(rank1) == pytest.approx(0, abs=1e-9)
    assert outcome_collision_entropy(rank1) == pytest.approx(0, abs=1e-12)
    flat2 = classical.SinglePhotonBlock("f", 0.3 * np.eye(2))
    assert outcome_shannon_entropy(flat2) == pytest.approx(1.0)
    flat4 = classical.SinglePhotonBlock("f", 0.3 * np.eye(4))
    assert outcome_collision_entropy(flat4) == pytest.approx(2.0)
    # -(0.5 log 0.5 + 2 * 0.25 log 0.25) = 0.5 + 1.0
    mixed = classical.SinglePhotonBlock("m", np.diag([0.4, 0.2, 0.2]))
    assert outcome_shannon_entropy(mixed) == pytest.approx(1.5)
    with pytest.raises(ZeroTraceElement):
        outcome_shannon_entropy(classical.SinglePhotonBlock("z", np.zeros((2, 2))))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_collision_below_shannon(m, seed):
    a = random_psd(np.random.default_rng(seed), m, rank=max(1, m - 1))
    block = classical.SinglePhotonBlock("k", a)
    assert outcome_collision_entropy(block) <= outcome_shannon_entropy(block) + 1e-9


def test_posterior_frequency_single_mode(modes2):
    block = classical.SinglePhotonBlock("k", np.diag([0.0, 0.6]).astype(complex))
    dist = posterior_frequency(eigenmodes(block, modes2))
    np.testing.assert_allclose(dist.density, modes2[1].intensity(), atol=1e-12)
    assert dist.total() == pytest.approx(1.0, abs=1e-6)


def test_posterior_frequency_disjoint_mixture():
    grid = FrequencyGrid(0.0, 10.0, 100)
    a = np.zeros(100)
    b = np.zeros(100)
    a[10:20] = 1.0
    b[60:80] = 1.0
    modes = ModeBasis([ModeFunction(grid, a).normalized(), ModeFunction(grid, b).normalized()])
    block = classical.SinglePhotonBlock("k", 0.3 * np.eye(2, dtype=complex))
    dist = posterior_frequency(eigenmodes(block, modes))
    expected = 0.5 * modes[0].intensity() + 0.5 * modes[1].intensity()
    np.testing.assert_allclose(dist.density, expected, atol=1e-12)


def test_posterior_normalization_random(modes4, rng):
    window = TimeWindow.for_basis(modes4)
    for _ in range(5):
        block = classical.SinglePhotonBlock("k", random_psd(rng, 4))
        d = eigenmodes(block, modes4)
        assert posterior_frequency(d).total() == pytest.approx(1.0, abs=1e-6)
        assert posterior_time(d, window).total() >= 0.999


def test_posterior_time_gaussian(modes1):
    block = classical.SinglePhotonBlock("k", np.eye(1, dtype=complex))
    window = TimeWindow(-4.0, 4.0, 1600)
    dist = posterior_time(eigenmodes(block, modes1), window)
    t = dist.centers
    np.testing.assert_allclose(dist.density, np.sqrt(2 / np.pi) * np.exp(-2 * t**2), atol=1e-8)


def test_posterior_zero_bandwidth(modes2):
    d = eigenmodes(classical.SinglePhotonBlock("k", np.zeros((2, 2), dtype=complex)), modes2)
    with pytest.raises(ZeroBandwidth):
        posterior_frequency(d)


def test_bin_uniform_and_point_mass():
    uniform = GridDistribution(0.0, 0.1, np.full(40, 0.25))
    b = bin_distribution(uniform, 1.0)
    np.testing.assert_allclose(b.probabilities, [0.25] * 4)
    np.testing.assert_array_equal(b.indices, [1, 2, 3, 4])
    assert binned_entropy(b) == pytest.approx(2.0)
    dens = np.zeros(40)
    dens[12:15] = 1 / 0.3
    point = bin_distribution(GridDistribution(0.0, 0.1, dens), 1.0)
    assert point.probabilities.max() == pytest.approx(1.0)
    assert binned_entropy(point) == pytest.approx(0.0, abs=1e-12)


def test_bin_too_fine():
    with pytest.raises(BinTooFine):
        bin_distribution(GridDistribution(0.0, 0.1, np.ones(10)), 0.15)


def test_bin_split_cells_and_origin():
    # one cell of mass 1 on [0, 1) split by a bin edge at 0.25 (origin -0.75, delta 2)
    dist = GridDistribution(0.0, 1.0, np.array([1.0, 0.0, 0.0]))
    b = bin_distribution(dist, 2.0, origin=-1.75)
    assert b.first_index == 1
    np.testing.assert_allclose(b.probabilities, [0.25, 0.75, 0.0])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0, 10), min_size=4, max_size=60).filter(lambda x: sum(x) > 1e-6),
    st.floats(0.25, 5.0),
    st.floats(-3, 3),
)
def test_bin_conserves_mass(values, delta, origin):
    dist = GridDistribution(1.0, 0.1, np.array(values))
    b = bin_distribution(dist, delta, origin)
    assert b.probabilities.sum() == pytest.approx(1.0, abs=1e-6)
    assert b.captured_mass == pytest.approx(dist.total())


def test_uncertainty_rhs():
    assert uncertainty_rhs(2 * math.pi, 1.0) == pytest.approx(math.log2(math.e) - 1)
    assert uncertainty_rhs(1.0, 1.0) - uncertainty_rhs(2.0, 2.0) == pytest.approx(2.0)
    check = uncertainty_check(1.0, 1.0, 2 * math.pi, 1.0)
    assert check.satisfied and check.rhs == pytest.approx(0.4426950408889634)


def test_uncertainty_gaussian_nearly_tight(modes1):
    povm = on_off(enumerate_fock(modes1, 1), 0, 1.0, 0.0)
    ps = classical.PosteriorSet(povm)
    d_w, d_t = 0.1, 0.05
    lhs = ps.averaged("freq", d_w) + ps.averaged("time", d_t)
    rhs = uncertainty_rhs(d_w, d_t)
    assert 0 < lhs - rhs < 0.05


def test_averaged_entropies_single_and_pair(modes2):
    b = enumerate_fock(modes2, 1)
    single = on_off(b, 0, 1.0, 0.0)
    ps = classical.PosteriorSet(single)
    h_w, h_t = classical.averaged_entropies(single, 0.2, 0.1, ps.window)
    assert h_w == pytest.approx(ps.entropies("freq", 0.2)[0])
    assert h_t == pytest.approx(ps.entropies("time", 0.1)[0])
    # two outcomes with equal bandwidth: plain mean
    pnr = ideal_pnr(b)
    ps2 = classical.PosteriorSet(pnr)
    e = ps2.entropies("freq", 0.2)
    np.testing.assert_allclose(ps2.fractions, [0.5, 0.5])
    assert ps2.averaged("freq", 0.2) == pytest.approx(e.mean())


def test_averaged_entropies_zero_bandwidth(modes1):
    with pytest.raises(ZeroBandwidth):
        classical.averaged_entropies(Povm(enumerate_fock(modes1, 1), ()), 0.1, 0.1)
