"""Aliased energy spectrum, its peak bound, and the lag-domain cross-check."""

import numpy as np
import pytest
from scipy.integrate import trapezoid

import oracles
from ancsim import (
    ContinuousStateSpace,
    DimensionError,
    PlantSpecificationError,
    build_wiener,
    discretize_lifted,
    dtft,
    fh_step,
    parseval_check,
    spectral_bound,
    u_spectrum,
    zoh_frequency_response,
)
from ancsim.config import SimConfig
from ancsim.tolerances import TOL


def lag(pole=1.0):
    return ContinuousStateSpace(A=[[-pole]], B=[[1.0]], C=[[1.0]])


def record_u(secondary, xd_samples, h, L):
    """Open-loop regressor blocks for a given reference sequence."""
    lift = discretize_lifted(secondary, h, L)
    eta = np.zeros(secondary.nstates)
    out = np.empty((len(xd_samples), L))
    for n, x in enumerate(xd_samples):
        eta, out[n] = fh_step(lift, eta, x)
    return out


# ---------------------------------------------------------------------------
# hold response and transforms


def test_hold_response_closed_form():
    h = 0.7
    assert abs(zoh_frequency_response(0.0, h) - h) < 1e-15
    om = np.array([0.3, 1.0, 4.0, -2.2])
    want = (1.0 - np.exp(-1j * om * h)) / (1j * om)
    got = zoh_frequency_response(om, h)
    assert np.abs(got - want).max() < 1e-14


def test_hold_response_zeros_at_sampling_multiples():
    h = 1.0
    om = 2.0 * np.pi * np.array([1.0, 2.0, 5.0])
    assert np.abs(zoh_frequency_response(om, h)).max() < 1e-15


def test_dtft_impulse_and_shift():
    om = np.linspace(-2.0, 2.0, 9)
    h = 1.0
    assert np.abs(dtft([1.0], om, h) - 1.0).max() < 1e-15
    shifted = dtft([0.0, 0.0, 1.0], om, h)
    want = np.exp(-2j * om * h)
    assert np.abs(shifted - want).max() < 1e-14
    with pytest.raises(ValueError):
        dtft([], om, h)


def test_regressor_spectrum_is_product():
    sys = lag(1.0)
    om = np.array([0.0, 0.5, 2.0])
    got = u_spectrum(sys, 1.0, om, 1.0)
    want = (1.0 / (1j * om + 1.0)) * zoh_frequency_response(om, 1.0)
    assert np.abs(got - want).max() < 1e-14


def test_regressor_spectrum_matches_time_domain_transform():
    """u_spectrum equals the numerically transformed held impulse response."""
    sys = lag(1.0)
    h, refine, n_periods = 1.0, 256, 60
    x_held = np.zeros(n_periods)
    x_held[0] = 1.0
    y = oracles.held_output_fine(sys, x_held, h, refine)
    t = np.arange(y.size) * (h / refine)
    for w in (0.3, 1.0, 2.4):
        ref = trapezoid(y * np.exp(-1j * w * t), t)
        got = u_spectrum(sys, 1.0, np.array([w]), h)[0]
        assert abs(got - ref) < 1e-5


# ---------------------------------------------------------------------------
# aliased energy density


def test_bound_impulse_reference_near_dc():
    """Unit impulse through the unit-gain lag: S approaches 1 at DC."""
    bound = spectral_bound(lag(1.0), [1.0], h=1.0, grid_size=4096, n_alias=64)
    i0 = int(np.argmin(np.abs(bound.omegas)))
    assert abs(bound.values[i0] - 1.0) < 1e-4
    assert bound.peak <= 1.0 + 1e-12
    assert abs(bound.mu_limit - 2.0 / bound.peak) < 1e-12


def test_bound_silent_record():
    bound = spectral_bound(lag(), np.zeros(8), h=1.0)
    assert bound.peak == 0.0
    assert bound.mu_limit == np.inf


def test_bound_grid_is_midpoint_partition():
    bound = spectral_bound(lag(), [1.0], h=2.0, grid_size=64, n_alias=4)
    assert bound.omegas.size == 64
    assert abs(bound.spacing - 2.0 * np.pi / 2.0 / 64) < 1e-15
    # symmetric midpoints, no endpoint duplication
    assert abs(bound.omegas[0] + np.pi / 2.0 - 0.5 * bound.spacing) < 1e-12
    assert abs(bound.omegas[-1] - (np.pi / 2.0 - 0.5 * bound.spacing)) < 1e-12


def test_bound_alias_sum_dominates_single_term():
    sys = lag(0.7)
    om_probe = 1.3
    bound = spectral_bound(sys, [1.0], h=1.0, grid_size=512, n_alias=32)
    i = int(np.argmin(np.abs(bound.omegas - om_probe)))
    w = bound.omegas[i]
    single = np.abs(u_spectrum(sys, 1.0, np.array([w]), 1.0)[0]) ** 2
    assert bound.values[i] >= single - 1e-15


def test_bound_alias_truncation_converged(default_config):
    sec = default_config.secondary()
    rng = np.random.default_rng(51)
    xd = rng.normal(size=40)
    lo = spectral_bound(sec, xd, h=1.0, grid_size=1024, n_alias=64)
    hi = spectral_bound(sec, xd, h=1.0, grid_size=1024, n_alias=128)
    assert np.abs(lo.values - hi.values).max() < TOL.alias_truncation * hi.peak


def test_bound_input_validation():
    withfeed = ContinuousStateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]], D=[[1.0]])
    with pytest.raises(PlantSpecificationError):
        spectral_bound(withfeed, [1.0], h=1.0)
    mimo = ContinuousStateSpace(A=-np.eye(2), B=np.eye(2), C=np.eye(2))
    with pytest.raises(DimensionError):
        spectral_bound(mimo, [1.0], h=1.0)
    with pytest.raises(ValueError):
        spectral_bound(lag(), [1.0], h=0.0)
    with pytest.raises(ValueError):
        spectral_bound(lag(), [1.0], h=1.0, grid_size=1)
    with pytest.raises(ValueError):
        spectral_bound(lag(), [1.0], h=1.0, n_alias=-1)


def test_gram_eigenvalues_below_spectral_peak(default_config):
    """Blocked Gram tops out below the aliased-energy peak (decayed record)."""
    sec = default_config.secondary()
    gen = default_config.with_overrides(noise_decay_rates=(0.15,) * 4).make_generator()
    h, L, n_steps = 1.0, 8, 100
    xd = gen.sample_grid(h, n_steps)
    u_blocks = record_u(sec, xd, h, L)
    d_dummy = np.zeros((n_steps, L))
    problem = build_wiener(u_blocks, d_dummy, 8, float(n_steps), h, L)
    bound = spectral_bound(sec, xd, h)
    lam_top = float(np.linalg.eigvalsh(problem.Phi)[-1])
    assert lam_top <= bound.peak + 1e-9 * bound.peak


# ---------------------------------------------------------------------------
# lag-domain consistency


def decayed_problem_and_bound(grid_size=4096, n_alias=64, L=8):
    config = SimConfig().with_overrides(noise_decay_rates=(0.15,) * 4)
    sec = config.secondary()
    gen = config.make_generator()
    h, n_steps = config.h, config.n_steps
    xd = gen.sample_grid(h, n_steps)
    u_blocks = record_u(sec, xd, h, L)
    problem = build_wiener(u_blocks, np.zeros((n_steps, L)), 8, config.T, h, L)
    bound = spectral_bound(sec, xd, h, grid_size=grid_size, n_alias=n_alias)
    return problem, bound


def test_parseval_lag_zero_entry():
    problem, bound = decayed_problem_and_bound()
    report = parseval_check(problem, bound)
    assert report.entry00_rel < TOL.parseval
    assert report.phi_spectral.shape == problem.Phi.shape
    # spectral reconstruction is a symmetric Toeplitz table
    assert np.abs(report.phi_spectral - report.phi_spectral.T).max() == 0.0


def test_parseval_improves_with_refinement():
    _, coarse_bound = decayed_problem_and_bound()
    coarse_problem, _ = decayed_problem_and_bound()
    coarse = parseval_check(coarse_problem, coarse_bound)
    fine_problem, fine_bound = decayed_problem_and_bound(
        grid_size=8192, n_alias=128, L=16
    )
    fine = parseval_check(fine_problem, fine_bound)
    assert fine.entry00_rel < coarse.entry00_rel
