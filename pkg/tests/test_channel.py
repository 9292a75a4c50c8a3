import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from minlut.channel import (
    LlrQuantizer,
    channel_information,
    channel_pmf,
    design_llr_quantizer,
    fine_llr_density,
    fine_grid_edges,
    sample_llr_label,
    sample_llr_labels,
    sigma_to_snr,
    snr_to_sigma,
    uniform_llr_quantizer,
)
from minlut.mi_quantizer import mutual_information, reproducer_values


def test_snr_to_sigma_examples():
    assert snr_to_sigma(0.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert snr_to_sigma(4.0, 13 / 16) == pytest.approx(0.4950, abs=5e-5)
    assert snr_to_sigma(300.0, 0.5) < 1e-10


def test_snr_to_sigma_rejects_bad_rate():
    with pytest.raises(ValueError):
        snr_to_sigma(1.0, 0.0)
    with pytest.raises(ValueError):
        snr_to_sigma(1.0, -0.5)
    with pytest.raises(ValueError):
        snr_to_sigma(float("nan"), 0.5)


@given(st.floats(-5, 15), st.floats(0.05, 1.0))
def test_snr_sigma_round_trip(gamma, rate):
    assert sigma_to_snr(snr_to_sigma(gamma, rate), rate) == pytest.approx(gamma, abs=1e-9)


def test_fine_density_symmetric_and_normalized():
    fine = fine_llr_density(1.0, grid_size=500)
    assert fine.symmetric
    assert fine.p0.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(fine.p0, fine.p1[::-1])


def test_fine_density_mean_llr():
    sigma = 0.5
    fine = fine_llr_density(sigma, grid_size=1000, clip=40)
    edges = fine_grid_edges(1000, 40)
    centres = 0.5 * (edges[:-1] + edges[1:])
    mean = float(np.dot(fine.p0, centres))
    assert mean == pytest.approx(2 / sigma**2, rel=0.01)


def test_fine_density_matches_numeric_integration():
    # one interior bin against direct quadrature of the LLR density
    sigma = 0.8
    fine = fine_llr_density(sigma, grid_size=200, clip=20)
    edges = fine_grid_edges(200, 20)
    mu, sd = 2 / sigma**2, 2 / sigma
    k = 120
    mass, _ = integrate.quad(lambda t: stats.norm.pdf(t, mu, sd), edges[k], edges[k + 1])
    mass_mirror, _ = integrate.quad(lambda t: stats.norm.pdf(t, -mu, sd), -edges[k + 1], -edges[k])
    assert fine.p0[k] == pytest.approx(0.5 * (mass + mass_mirror), rel=1e-8)


def test_fine_density_uninformative_at_large_sigma():
    fine = fine_llr_density(1e4, grid_size=200)
    assert mutual_information(fine) < 1e-6


def test_fine_density_rejects_bad_inputs():
    with pytest.raises(ValueError):
        fine_llr_density(0.0)
    with pytest.raises(ValueError):
        fine_llr_density(1.0, grid_size=10)
    with pytest.raises(ValueError):
        fine_llr_density(1.0, clip=0)


def test_design_quantizer_two_levels_cuts_at_zero():
    q = design_llr_quantizer(fine_llr_density(0.7, grid_size=400), 2)
    assert q.num_levels == 2
    np.testing.assert_array_equal(q.boundaries, [0.0])


def test_design_quantizer_full_size_preserves_mi():
    fine = fine_llr_density(0.7, grid_size=100, clip=10)
    q = design_llr_quantizer(fine, 100, clip=10)
    assert q.num_levels == 100
    assert channel_information(q, 0.7) == pytest.approx(mutual_information(fine), abs=1e-12)


def test_design_quantizer_rejects_odd_levels():
    with pytest.raises(ValueError):
        design_llr_quantizer(fine_llr_density(0.7, grid_size=100), 7)


def test_design_quantizer_beats_uniform_step():
    sigma = 0.83
    designed = design_llr_quantizer(fine_llr_density(sigma), 8)
    uniform = uniform_llr_quantizer(8, 0.5)
    assert channel_information(designed, sigma) >= channel_information(uniform, sigma)


def test_quantizer_invariants():
    q = design_llr_quantizer(fine_llr_density(0.6), 8)
    b, r = q.boundaries, q.reproducers
    np.testing.assert_allclose(b, -b[::-1], atol=1e-9)
    assert b[len(b) // 2] == 0.0
    assert np.all(np.diff(b) > 0)
    assert np.all(np.diff(r) > 0)
    np.testing.assert_allclose(r, -r[::-1], atol=1e-9)


def test_llr_quantizer_validation():
    with pytest.raises(ValueError):
        LlrQuantizer([-1.0, 0.0], [-2, 0, 2])  # odd level count
    with pytest.raises(ValueError):
        LlrQuantizer([-1.0, 0.0, 2.0], [-3, -1, 1, 3])  # not anti-symmetric
    with pytest.raises(ValueError):
        LlrQuantizer([1.0, 0.0, -1.0], [-3, -1, 1, 3])  # decreasing


def test_channel_pmf_limits():
    q = design_llr_quantizer(fine_llr_density(0.5), 8)
    sharp = channel_pmf(q, 1e-3)
    assert sharp.p0[-1] == pytest.approx(1.0)
    flat = channel_pmf(q, 1e4)
    np.testing.assert_allclose(flat.p0, flat.p1, atol=1e-3)


def test_channel_pmf_reproducers_antisymmetric():
    sigma = 0.4950
    q = design_llr_quantizer(fine_llr_density(sigma), 4)
    pmf = channel_pmf(q, sigma)
    assert pmf.symmetric
    r, _ = reproducer_values(pmf)
    np.testing.assert_allclose(r + r[::-1], 0.0, atol=1e-9)


def test_channel_mi_non_increasing_in_sigma():
    q = design_llr_quantizer(fine_llr_density(0.6), 8)
    mis = [channel_information(q, s) for s in np.linspace(0.2, 2.0, 25)]
    assert all(b <= a + 1e-12 for a, b in zip(mis, mis[1:]))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 1.5), st.sampled_from([2, 4, 8, 16]))
def test_quantization_is_degradation(sigma, levels):
    fine = fine_llr_density(sigma, grid_size=400)
    q = design_llr_quantizer(fine, levels)
    assert channel_information(q, sigma) <= mutual_information(fine) + 1e-12


def test_sample_noiseless_is_top_label():
    q = design_llr_quantizer(fine_llr_density(0.5), 8)
    rng = np.random.default_rng(0)
    assert all(sample_llr_label(0, 1e-9, q, rng) == 7 for _ in range(20))
    assert all(sample_llr_label(1, 1e-9, q, rng) == 0 for _ in range(20))


def test_sample_deterministic_given_seed():
    q = design_llr_quantizer(fine_llr_density(0.8), 8)
    bits = np.zeros(1000, dtype=int)
    a = sample_llr_labels(bits, 0.8, q, np.random.default_rng(5))
    b = sample_llr_labels(bits, 0.8, q, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_sample_statistics_match_pmf():
    sigma, n = 0.8, 10**6
    q = design_llr_quantizer(fine_llr_density(sigma), 8)
    pmf = channel_pmf(q, sigma)
    rng = np.random.default_rng(2024)
    for bit, p in ((0, pmf.p0), (1, pmf.p1)):
        labels = sample_llr_labels(np.full(n, bit), sigma, q, rng)
        freq = np.bincount(labels, minlength=8) / n
        se = np.sqrt(p * (1 - p) / n)
        assert np.all(np.abs(freq - p) <= 3 * se + 1e-12)
