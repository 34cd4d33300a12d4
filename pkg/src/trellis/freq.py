"""Single-tone frequency estimation in white Gaussian noise.

Classical estimators (periodogram peak, weighted phase increments,
autocorrelation phase averaging) work on complex samples. The Bayesian
path models real samples x_i = a sin(Omega i) + z_i: the amplitude is
eliminated analytically, Omega lives on a shared zero-padded DFT grid,
and two approximations (plain mean-field and the sheared-variable
variant) refine the marginal. All grid marginals are discrete pmfs.
"""

import warnings
from collections import namedtuple

import numpy as np

from .numerics import log_normalize

FreqPrior = namedtuple("FreqPrior", ["mu_a", "r_a"])

FreqPosteriorGrid = namedtuple(
    "FreqPosteriorGrid",
    ["grid", "r", "mu", "marginal", "post_mean", "marginal_map", "joint_map_omega", "joint_map_amp"],
)

VbFreqState = namedtuple(
    "VbFreqState", ["omega_hat", "ftilde", "mu1", "sigma1_sq", "alpha1", "alpha2", "posterior"]
)

TvbFreqState = namedtuple(
    "TvbFreqState",
    ["omega_hat", "ftilde", "u12", "mu2", "sigma2_sq", "beta1", "beta2", "amp_mean", "posterior"],
)


def dft_grid(n, pad=8):
    """Zero-padded DFT bins covering [0, pi)."""
    if n < 2:
        raise ValueError("need n >= 2")
    G = pad * n
    return 2.0 * np.pi * np.arange(G // 2) / G


def periodogram(x, grid):
    x = np.asarray(x)
    n = x.shape[-1]
    ph = np.exp(-1j * np.outer(np.asarray(grid), np.arange(n)))
    return np.abs(x @ ph.T) ** 2


def periodogram_ml(x, grid):
    """Grid frequency with the largest periodogram value."""
    grid = np.asarray(grid)
    return float(grid[int(np.argmax(periodogram(x, grid)))])


def kay_weights(n):
    k = np.arange(1, n)
    return 1.5 * n / (n ** 2 - 1.0) * (1.0 - ((2.0 * k - n) / n) ** 2)


def kay_estimate(x):
    """Weighted average of successive phase increments (complex samples)."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("need n >= 2")
    if np.any(x == 0):
        raise ValueError("zero sample has no phase")
    inc = np.angle(x[1:] * np.conj(x[:-1]))
    return float(kay_weights(n) @ inc)


def fitz_estimate(x, L=None, display_norm=False):
    """Average autocorrelation phase slope (complex samples).

    R[m] is the lag-m sample autocorrelation; the estimate divides the
    summed phases by the triangular count. display_norm forces the
    L = n-1 window written with the equivalent 2/(n(n-1)) factor.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if display_norm:
        L = n - 1
    if L is None:
        L = n - 1
    if not 1 <= L <= n - 1:
        raise ValueError("L must be in 1..n-1")
    phases = np.empty(L)
    for m in range(1, L + 1):
        R = np.sum(x[m:] * np.conj(x[:-m])) / (n - m)
        phases[m - 1] = np.angle(R)
    if np.any(np.abs(phases) > 0.95 * np.pi):
        warnings.warn("autocorrelation phase near +-pi; estimate may wrap", stacklevel=2)
    if display_norm:
        return float(2.0 / (n * (n - 1.0)) * phases.sum())
    return float(2.0 / (L * (L + 1.0)) * phases.sum())


def _design(grid, n):
    i = np.arange(1, n + 1)
    ang = np.outer(np.asarray(grid), i)
    return np.sin(ang), np.cos(ang), i


def freq_posterior(x, prior, grid, r_e):
    """Closed-form amplitude elimination on the grid.

    Per grid point: 1/r = sum sin^2(Omega i)/r_e + 1/r_a and
    mu = r (sum x_i sin(Omega i)/r_e + mu_a/r_a). The grid marginal is
    proportional to exp(mu^2/(2r)) sqrt(r); the joint MAP maximizes
    exp(mu^2/(2r)) alone and carries amplitude mu at that point.
    """
    x = np.asarray(x, dtype=float)
    grid = np.asarray(grid)
    n = x.shape[-1]
    sinT, _, _ = _design(grid, n)
    s2 = (sinT ** 2).sum(axis=1)
    r = 1.0 / (s2 / r_e + 1.0 / prior.r_a)
    mu = r * (sinT @ x / r_e + prior.mu_a / prior.r_a)
    half = mu ** 2 / (2.0 * r)
    marginal = log_normalize(half + 0.5 * np.log(r))
    post_mean = float(marginal @ grid)
    marginal_map = float(grid[int(np.argmax(marginal))])
    jm = int(np.argmax(half))
    return FreqPosteriorGrid(grid, r, mu, marginal, post_mean, marginal_map, float(grid[jm]), float(mu[jm]))


def vb_freq(x, prior, grid, r_e, cycles=5, post=None):
    """Mean-field refinement of the grid marginal, fixed cycle count.

    Amplitude moments are matched to grid expectations of mu and r;
    the grid factor is then exp((alpha1 mu + alpha2)/(2r)), renormalized.
    """
    if post is None:
        post = freq_posterior(x, prior, grid, r_e)
    # warm start at the exact grid marginal; a flat start anchors the
    # first moment mid-grid and the fixed cycle budget cannot recover
    ftilde = post.marginal.copy()
    mu1 = sigma1_sq = alpha1 = alpha2 = 0.0
    for _ in range(cycles):
        mu1 = float(ftilde @ post.mu)
        sigma1_sq = float(ftilde @ post.r)
        alpha1 = 2.0 * mu1
        alpha2 = -(mu1 ** 2 + sigma1_sq)
        ftilde = log_normalize((alpha1 * post.mu + alpha2) / (2.0 * post.r))
    omega_hat = float(ftilde @ post.grid)
    return VbFreqState(omega_hat, ftilde, mu1, sigma1_sq, alpha1, alpha2, post)


def tvb_u12(x, post, r_e):
    """Shear coefficient at the joint MAP.

    Ratio of the amplitude-frequency cross curvature to the amplitude
    curvature of the negative log joint, both at the peak. The amplitude
    curvature is 1/r there, so u12 = -r * sum i cos(Omega i)(x_i -
    2 a sin(Omega i))/r_e. This slope makes the sheared conditional mean
    mu + u12 Omega stationary at the peak, which keeps the refinement
    anchored instead of dragging it along the amplitude ridge.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    i = np.arange(1, n + 1)
    w, a = post.joint_map_omega, post.joint_map_amp
    r_hat = post.r[int(np.argmax(post.mu ** 2 / (2.0 * post.r)))]
    return float(-r_hat * np.sum(i * np.cos(w * i) * (x - 2.0 * a * np.sin(w * i))) / r_e)


def tvb_freq(x, prior, grid, r_e, cycles=5, post=None):
    """Mean-field refinement after shearing amplitude along Omega.

    The sheared mean is mu0 = mu + u12 Omega. Cycles match the shaping
    mean to the grid expectation of mu and the spread to that of r, then
    renormalize exp((beta1 mu0 + beta2)/(2r)) times the constant extra
    factor exp((mu^2 - mu0^2)/(2r)). The Omega marginal transforms back
    unchanged; the amplitude mean picks up -u12 * omega_hat. u12 = 0
    reduces exactly to vb_freq.
    """
    if post is None:
        post = freq_posterior(x, prior, grid, r_e)
    u12 = tvb_u12(x, post, r_e)
    mu0 = post.mu + u12 * post.grid
    extra = (post.mu ** 2 - mu0 ** 2) / (2.0 * post.r)
    ftilde = post.marginal.copy()
    mu2 = sigma2_sq = beta1 = beta2 = 0.0
    for _ in range(cycles):
        mu2 = float(ftilde @ post.mu)
        sigma2_sq = float(ftilde @ post.r)
        beta1 = 2.0 * mu2
        beta2 = -(mu2 ** 2 + sigma2_sq)
        ftilde = log_normalize((beta1 * mu0 + beta2) / (2.0 * post.r) + extra)
    omega_hat = float(ftilde @ post.grid)
    amp_mean = mu2 - u12 * omega_hat
    return TvbFreqState(omega_hat, ftilde, u12, mu2, sigma2_sq, beta1, beta2, amp_mean, post)
