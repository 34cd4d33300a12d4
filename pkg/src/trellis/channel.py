"""Symbol transmission models: constellations, noise, flat-fading quantization.

Everything is complex baseband with unit energy per bit, so a linear
per-bit SNR fixes the noise level as N0 = 1/snr. Fading is handled by
quantizing the Rayleigh gain into K equiprobable cells and treating the
cell index as a second Markov label chain, independent of the source
chain; the product chain is one bigger label chain with MK states
(channel-major index: aug = channel * M + source).
"""

from collections import namedtuple
from math import isqrt

import numpy as np

from .numerics import (adaptive_simpson_1d, adaptive_simpson_2d,
                       bessel_i0_log, bessel_j0, safe_log)


class QamConstellation:
    """Square QAM (or antipodal M=2) with per-axis reflected Gray bits.

    Points are scaled to unit average energy per bit. Symbol index is
    row-major over (in-phase level, quadrature level).
    """

    def __init__(self, M):
        M = int(M)
        if M == 2:
            levels = np.array([-1.0, 1.0])
            self.points = levels.astype(complex)
            self.bits = np.array([[0], [1]], dtype=np.uint8)
        else:
            L = isqrt(M)
            if L * L != M or L < 2 or (L & (L - 1)) != 0:
                raise ValueError("M must be 2 or an even power of two")
            b_axis = L.bit_length() - 1
            d = np.sqrt(3.0 * np.log2(M) / (2.0 * (M - 1)))
            amp = d * (2 * np.arange(L) - (L - 1))
            gray = np.arange(L) ^ (np.arange(L) >> 1)
            axis_bits = (gray[:, None] >> np.arange(b_axis - 1, -1, -1)[None, :]) & 1
            ai, aq = np.divmod(np.arange(M), L)
            self.points = amp[ai] + 1j * amp[aq]
            self.bits = np.concatenate([axis_bits[ai], axis_bits[aq]], axis=1).astype(np.uint8)
        self.M = M
        self.bits_per_symbol = self.bits.shape[1]
        x = self.bits[:, None, :] ^ self.bits[None, :, :]
        self.bit_distance = x.sum(axis=2).astype(np.int64)


def random_source(M, rng):
    """Uniform-random left-stochastic transition matrix and flat prior."""
    T = rng.random((M, M))
    T /= T.sum(axis=0, keepdims=True)
    return T, np.full(M, 1.0 / M)


def snr_to_n0(ebn0_db):
    return 10.0 ** (-float(ebn0_db) / 10.0)


def gaussian_psi(x, means, n0):
    """Row-rescaled Gaussian observation likelihoods.

    x (..., n) complex, means (M,) complex -> (..., n, M). Each row is
    divided by its peak (a shared per-row factor, so every inference
    method is unaffected), keeping exponentials in range at high SNR.
    """
    d2 = np.abs(np.asarray(x)[..., None] - np.asarray(means)) ** 2
    e = -d2 / float(n0)
    e -= e.max(axis=-1, keepdims=True)
    return np.exp(e)


def sample_chain(T, p, u):
    """Markov labels from per-step uniforms via CDF inversion.

    u is (B, n); returns 0-based labels (B, n). Column k of T is the
    next-state pmf from state k.
    """
    B, n = u.shape
    M = T.shape[0]
    labels = np.empty((B, n), dtype=np.int64)
    c0 = np.cumsum(p)
    labels[:, 0] = np.minimum((c0[None, :] <= u[:, :1]).sum(axis=1), M - 1)
    C = np.cumsum(T, axis=0)
    for i in range(1, n):
        cdfs = C.T[labels[:, i - 1]]
        labels[:, i] = np.minimum((cdfs <= u[:, i : i + 1]).sum(axis=1), M - 1)
    return labels


def awgn_observe(symbols, n0, normals):
    """symbols (B, n) complex plus circular noise built from (B, 2n) normals."""
    B, n = symbols.shape
    scale = np.sqrt(n0 / 2.0)
    return symbols + scale * (normals[:, :n] + 1j * normals[:, n:])


def rho_from_doppler(fd_ts):
    """Gain correlation over one symbol at normalized Doppler fd*Ts."""
    return float(bessel_j0(2.0 * np.pi * float(fd_ts)))


QuantizerSpec = namedtuple("QuantizerSpec", ["thresholds", "levels", "sigma2"])


def rayleigh_quantizer(K, sigma2=0.5):
    """Equiprobable K-cell quantizer for a Rayleigh gain.

    Interior thresholds invert the CDF at k/K; the top cell is cut off
    at five times the RMS of the underlying pair of Gaussians. Each
    representative level is the cell's conditional mean.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be positive")
    s2 = float(sigma2)
    thr = np.empty(K + 1)
    thr[0] = 0.0
    k = np.arange(1, K)
    thr[1:K] = np.sqrt(-2.0 * s2 * np.log(1.0 - k / K))
    thr[K] = 5.0 * np.sqrt(2.0 * s2)

    def g_pdf_weighted(g):
        return g * (g / s2) * np.exp(-(g ** 2) / (2.0 * s2))

    levels = np.empty(K)
    for c in range(K):
        levels[c] = K * adaptive_simpson_1d(g_pdf_weighted, thr[c], thr[c + 1])
    return QuantizerSpec(thr, levels, s2)


def rayleigh_pair_logpdf(gi, gj, rho, sigma2):
    """Log joint density of two correlated Rayleigh gains (rho in [0, 1))."""
    s2 = float(sigma2)
    r = float(rho)
    if not 0.0 <= r < 1.0:
        raise ValueError("rho must be in [0, 1)")
    q = 1.0 - r * r
    out = safe_log(gi) + safe_log(gj) - np.log(s2 * s2 * q)
    out = out - (gi ** 2 + gj ** 2) / (2.0 * s2 * q)
    if r > 0.0:
        out = out + bessel_i0_log(gi * gj * r / (s2 * q))
    return out


def channel_transition_matrix(K, rho, sigma2=0.5, quantizer=None):
    """Column-stochastic K x K gain-cell transition matrix.

    Cell-pair masses of the bivariate Rayleigh density are integrated
    over the quantizer rectangles and columns are renormalized (the
    top cell is truncated, so the raw masses fall slightly short).
    """
    q = quantizer if quantizer is not None else rayleigh_quantizer(K, sigma2)
    thr = q.thresholds
    # near rho = 1 the density rides a diagonal ridge of conditional width
    # sqrt(s2 (1 - rho^2)); tile wide cells down to that scale so each
    # tile's interval doubling resolves it
    ridge = np.sqrt(float(sigma2) * (1.0 - float(rho) ** 2))

    def f(gi, gj):
        return np.exp(rayleigh_pair_logpdf(gi, gj, rho, sigma2))

    def axis_knots(lo, hi):
        pieces = max(1, int(np.ceil((hi - lo) / (12.0 * ridge))))
        return np.linspace(lo, hi, pieces + 1)

    def cell(ci, cj):
        xs = axis_knots(thr[ci], thr[ci + 1])
        ys = axis_knots(thr[cj], thr[cj + 1])
        total = 0.0
        for ax, bx in zip(xs[:-1], xs[1:]):
            for ay, by in zip(ys[:-1], ys[1:]):
                total += adaptive_simpson_2d(f, ax, bx, ay, by, atol=1e-12)
        return total

    Tc = np.empty((K, K))
    for ci in range(K):
        for cj in range(K):
            Tc[ci, cj] = K * cell(ci, cj)
    Tc /= Tc.sum(axis=0, keepdims=True)
    return Tc


AugmentedModel = namedtuple(
    "AugmentedModel", ["T", "p", "means", "M", "K", "constellation", "quantizer"]
)


def augmented_model(T_s, constellation, T_c, quantizer):
    """Product chain of an M-state source and a K-cell gain channel."""
    M = constellation.M
    K = T_c.shape[0]
    T = np.kron(T_c, T_s)
    p = np.full(M * K, 1.0 / (M * K))
    means = (quantizer.levels[:, None] * constellation.points[None, :]).ravel()
    return AugmentedModel(T, p, means, M, K, constellation, quantizer)


def source_part(aug_labels, M):
    return np.asarray(aug_labels) % M


def channel_part(aug_labels, M):
    return np.asarray(aug_labels) // M


def bit_errors(true_sym, est_sym, constellation):
    """Total wrong bits between two 0-based symbol label arrays."""
    return int(constellation.bit_distance[np.asarray(true_sym), np.asarray(est_sym)].sum())


def op_count_proxy(method, n, M, nu=1.0):
    """Dominant-term operation tallies per method for one trial.

    nu is the effective cycle count for the iterative methods. The
    totals give the cost ordering fcvb < va < fb < vb for M >= 2.
    """
    n = float(n)
    M = float(M)
    nu = float(nu)
    if method == "ml":
        ops = {"max": n * M}
    elif method == "fb":
        ops = {"mul": 2 * n * M * M, "add": 2 * n * M * M, "max": n * M}
    elif method == "va":
        ops = {"add": n * M * M, "max": n * M * M}
    elif method == "vb":
        ops = {"exp": n * M * nu, "mul": 2 * n * M * M * nu, "add": 2 * n * M * M * nu, "max": n * M}
    elif method == "fcvb":
        ops = {"add": n * M * nu, "max": n * M * nu}
    else:
        raise ValueError("unknown method %r" % (method,))
    ops["total"] = sum(ops.values())
    return ops
