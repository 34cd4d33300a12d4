"""Tone frequency estimators: classical, grid posterior, mean-field refinements."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from trellis.freq import (
    FreqPrior,
    dft_grid,
    fitz_estimate,
    freq_posterior,
    kay_estimate,
    kay_weights,
    periodogram,
    periodogram_ml,
    tvb_freq,
    tvb_u12,
    vb_freq,
)

PRIOR = FreqPrior(mu_a=1.0, r_a=0.1)


def _tone(n, omega, amp=1.0, noise=0.0, seed=0):
    i = np.arange(1, n + 1)
    x = amp * np.sin(omega * i)
    if noise > 0.0:
        x = x + np.sqrt(noise) * np.random.default_rng(seed).standard_normal(n)
    return x


def test_dft_grid():
    g = dft_grid(64, pad=8)
    assert g.shape == (256,)
    assert g[0] == 0.0
    assert_allclose(np.diff(g), 2.0 * np.pi / 512)
    assert g[-1] < np.pi
    with pytest.raises(ValueError):
        dft_grid(1)


def test_kay_weights_sum_to_one():
    for n in range(2, 1025):
        assert abs(kay_weights(n).sum() - 1.0) < 1e-12


def test_kay_noiseless_exact():
    omega = 0.7
    n = 32
    x = np.exp(1j * omega * np.arange(n))
    assert abs(kay_estimate(x) - omega) < 1e-10
    two = np.exp(1j * omega * np.arange(2))
    assert abs(kay_estimate(two) - omega) < 1e-14


def test_kay_input_validation():
    with pytest.raises(ValueError):
        kay_estimate(np.array([1.0 + 0j]))
    with pytest.raises(ValueError):
        kay_estimate(np.array([1.0, 0.0, 1.0], dtype=complex))


def test_fitz_noiseless_exact():
    # lag-m phases are m * omega, so keep L * omega below pi
    x = np.exp(1j * 0.1 * np.arange(24))
    assert abs(fitz_estimate(x) - 0.1) < 1e-10
    y = np.exp(1j * 0.45 * np.arange(24))
    assert abs(fitz_estimate(y, L=6) - 0.45) < 1e-10


def test_fitz_display_norm_equivalent():
    rng = np.random.default_rng(81)
    x = np.exp(1j * 0.15 * np.arange(16)) + 0.05 * (
        rng.standard_normal(16) + 1j * rng.standard_normal(16))
    assert fitz_estimate(x, L=15) == fitz_estimate(x, display_norm=True)


def test_fitz_wrap_warning():
    x = np.exp(1j * 3.0 * np.arange(12))
    with pytest.warns(UserWarning):
        fitz_estimate(x)
    with pytest.raises(ValueError):
        fitz_estimate(x, L=12)


def test_periodogram_peak_on_bin():
    n = 64
    grid = dft_grid(n, pad=1)
    omega = grid[5]
    x = _tone(n, omega)
    p = periodogram(x, grid)
    assert int(np.argmax(p)) == 5
    assert periodogram_ml(x, grid) == omega


def test_periodogram_batched():
    n = 16
    grid = dft_grid(n, pad=2)
    X = np.stack([_tone(n, grid[3]), _tone(n, grid[7])])
    p = periodogram(X, grid)
    assert p.shape == (2, grid.size)
    assert np.array_equal(np.argmax(p, axis=1), [3, 7])


def test_posterior_matches_quadrature():
    n, r_e = 24, 0.2
    rng = np.random.default_rng(82)
    x = _tone(n, 0.9, noise=r_e, seed=5)
    grid = dft_grid(n, pad=4)
    post = freq_posterior(x, PRIOR, grid, r_e)
    assert np.all(post.r > 0)
    assert_allclose(post.marginal.sum(), 1.0, atol=1e-12)
    idx = rng.choice(grid.size, size=5, replace=False)
    i = np.arange(1, n + 1)

    def joint_slice(omega):
        def f(a):
            resid = x - a * np.sin(omega * i)
            return np.exp(-0.5 * np.sum(resid ** 2) / r_e
                          - 0.5 * (a - PRIOR.mu_a) ** 2 / PRIOR.r_a)
        # integrand peaks around exp(-40); force pure relative control
        val, _ = integrate.quad(f, -30.0, 30.0, epsabs=0.0, epsrel=1e-10)
        return val

    quad_vals = np.array([joint_slice(grid[k]) for k in idx])
    got = post.marginal[idx]
    assert_allclose(got / got.sum(), quad_vals / quad_vals.sum(), rtol=1e-6)


def test_posterior_mean_and_map_live_on_grid():
    n, r_e = 32, 0.1
    x = _tone(n, 1.1, noise=r_e, seed=6)
    grid = dft_grid(n, pad=8)
    post = freq_posterior(x, PRIOR, grid, r_e)
    assert post.marginal_map in grid
    assert post.joint_map_omega in grid
    assert grid[0] <= post.post_mean <= grid[-1]


def test_vb_shaping_scalars_settle():
    n, r_e = 64, 0.05
    x = _tone(n, 1.08, noise=r_e, seed=7)
    grid = dft_grid(n, pad=8)
    four = vb_freq(x, PRIOR, grid, r_e, cycles=4)
    five = vb_freq(x, PRIOR, grid, r_e, cycles=5)
    assert abs(five.alpha1 - four.alpha1) < 1e-6
    assert abs(five.alpha2 - four.alpha2) < 1e-6
    assert abs(five.omega_hat - four.omega_hat) < 1e-6


def test_vb_state_consistency():
    n, r_e = 64, 0.05
    x = _tone(n, 1.08, noise=r_e, seed=8)
    grid = dft_grid(n, pad=8)
    res = vb_freq(x, PRIOR, grid, r_e)
    assert np.all(res.ftilde >= 0)
    assert_allclose(res.ftilde.sum(), 1.0, atol=1e-12)
    assert_allclose(res.mu1, float(res.ftilde @ res.posterior.mu), atol=1e-5)
    assert_allclose(res.sigma1_sq, float(res.ftilde @ res.posterior.r), atol=1e-5)
    assert_allclose(res.omega_hat, float(res.ftilde @ grid), atol=1e-12)


def test_shear_coefficient_is_curvature_ratio():
    # independent check: finite-difference cross and amplitude curvatures
    # of the negative log joint at the grid joint MAP
    n, r_e = 48, 0.1
    x = _tone(n, 0.95, noise=r_e, seed=9)
    grid = dft_grid(n, pad=16)
    post = freq_posterior(x, PRIOR, grid, r_e)
    i = np.arange(1, n + 1)

    def F(a, w):
        return (0.5 * np.sum((x - a * np.sin(w * i)) ** 2) / r_e
                + 0.5 * (a - PRIOR.mu_a) ** 2 / PRIOR.r_a)

    a0, w0 = post.joint_map_amp, post.joint_map_omega
    ha, hw = 1e-5, 1e-6
    h12 = (F(a0 + ha, w0 + hw) - F(a0 + ha, w0 - hw)
           - F(a0 - ha, w0 + hw) + F(a0 - ha, w0 - hw)) / (4 * ha * hw)
    h11 = (F(a0 + ha, w0) - 2 * F(a0, w0) + F(a0 - ha, w0)) / ha ** 2
    u12 = tvb_u12(x, post, r_e)
    assert_allclose(u12, h12 / h11, rtol=1e-4)
    # the conditional-mean ridge has slope -h12/h11, so the sheared mean
    # mu + u12 * Omega is flat at the peak
    def mu_of(w):
        s = np.sin(w * i)
        r = 1.0 / (np.sum(s ** 2) / r_e + 1.0 / PRIOR.r_a)
        return r * (s @ x / r_e + PRIOR.mu_a / PRIOR.r_a)

    h = 1e-6
    slope = (mu_of(w0 + h) - mu_of(w0 - h)) / (2 * h)
    assert_allclose(u12 + slope, 0.0, atol=abs(u12) * 1e-4)


def test_tvb_reduces_to_vb_without_shear(monkeypatch):
    n, r_e = 64, 0.05
    x = _tone(n, 1.08, noise=r_e, seed=10)
    grid = dft_grid(n, pad=8)
    monkeypatch.setattr("trellis.freq.tvb_u12", lambda x, post, r_e: 0.0)
    tv = tvb_freq(x, PRIOR, grid, r_e)
    vb = vb_freq(x, PRIOR, grid, r_e)
    assert tv.u12 == 0.0
    assert_allclose(tv.ftilde, vb.ftilde, atol=1e-12)
    assert_allclose(tv.omega_hat, vb.omega_hat, atol=1e-12)
    assert_allclose(tv.beta1, vb.alpha1, atol=1e-12)
    assert_allclose(tv.beta2, vb.alpha2, atol=1e-12)
    assert_allclose(tv.amp_mean, tv.mu2, atol=1e-15)


def test_tvb_state_consistency():
    n, r_e = 64, 0.05
    x = _tone(n, 1.08, noise=r_e, seed=11)
    grid = dft_grid(n, pad=8)
    res = tvb_freq(x, PRIOR, grid, r_e)
    assert np.all(res.ftilde >= 0)
    assert_allclose(res.ftilde.sum(), 1.0, atol=1e-12)
    assert res.u12 != 0.0
    assert_allclose(res.amp_mean, res.mu2 - res.u12 * res.omega_hat, atol=1e-14)
    # both refinements stay within half a padded bin of the truth here
    assert abs(res.omega_hat - 1.08) < np.pi / 512


def test_single_point_grid():
    n, r_e = 16, 0.1
    x = _tone(n, 0.8, noise=r_e, seed=12)
    grid = np.array([0.8])
    res = vb_freq(x, PRIOR, grid, r_e)
    assert_allclose(res.ftilde, [1.0])
    assert res.omega_hat == 0.8
