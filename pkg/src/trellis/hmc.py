"""Exact inference for a known-parameter homogeneous hidden Markov chain.

Transition matrices are left-stochastic: column k holds the next-state
distribution given current state k. Labels are 1-based at the public
API; everything internal is 0-based. Ties in any argmax/argmin resolve
to the smallest index, uniformly (including the brute-force oracles),
so label comparisons can be exact.
"""

from collections import namedtuple

import numpy as np

from .numerics import LOG0, safe_log

BRUTE_GUARD = 10 ** 6


class DegenerateObservation(ValueError):
    """A recursion normalizer collapsed to zero."""


class HmcModel:
    def __init__(self, T, p, Psi, tol=1e-9):
        T = np.asarray(T, dtype=float)
        p = np.asarray(p, dtype=float)
        Psi = np.asarray(Psi, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("T must be square")
        M = T.shape[0]
        if p.shape != (M,):
            raise ValueError("p length must match T")
        if Psi.ndim != 2 or Psi.shape[1] != M:
            raise ValueError("Psi must be n x M")
        if np.any(T < 0) or np.max(np.abs(T.sum(axis=0) - 1.0)) > tol:
            raise ValueError("T columns must sum to one")
        if np.any(p < 0) or abs(p.sum() - 1.0) > tol:
            raise ValueError("p must be a simplex vector")
        if np.any(Psi < 0):
            raise ValueError("Psi entries must be non-negative")
        if np.any(Psi.max(axis=1) <= 0):
            raise ValueError("each Psi row needs at least one positive entry")
        self.T = T
        self.p = p
        self.Psi = Psi
        self.M = M
        self.n = Psi.shape[0]


SmoothingResult = namedtuple("SmoothingResult", ["alpha", "beta", "gamma", "labels"])
ViterbiTrace = namedtuple("ViterbiTrace", ["lam", "kappa", "labels"])
ProfileResult = namedtuple("ProfileResult", ["profiles", "labels"])
PosteriorChainFactors = namedtuple("PosteriorChainFactors", ["A", "B"])


def _norm_rows(v):
    z = v.sum()
    if z <= 0.0:
        raise DegenerateObservation("zero normalizer in recursion")
    return v / z


def fb_algorithm(model):
    """Filtering, backward and smoothing statistics plus marginal-MAP labels."""
    T, p, Psi = model.T, model.p, model.Psi
    n, M = model.n, model.M
    alpha = np.empty((n, M))
    alpha[0] = _norm_rows(Psi[0] * p)
    for i in range(1, n):
        alpha[i] = _norm_rows(Psi[i] * (T @ alpha[i - 1]))
    beta = np.empty((n, M))
    beta[n - 1] = np.full(M, 1.0 / M)
    for i in range(n - 2, -1, -1):
        beta[i] = _norm_rows(T.T @ (Psi[i + 1] * beta[i + 1]))
    gamma = np.empty((n, M))
    for i in range(n):
        gamma[i] = _norm_rows(beta[i] * alpha[i])
    labels = np.argmax(gamma, axis=1) + 1
    return SmoothingResult(alpha, beta, gamma, labels)


def viterbi(model):
    """Joint-MAP trajectory via the log-domain min-recursion plus back-tracking."""
    n, M = model.n, model.M
    logPsi = safe_log(model.Psi)
    logT = safe_log(model.T)
    lam = np.empty((n, M))
    kappa = np.ones((n, M), dtype=int)
    lam[0] = -(logPsi[0] + safe_log(model.p))
    for i in range(1, n):
        # metric(j,k) = -(log Psi_{j,i} + log T(j,k)) + lam_{k,i-1}
        tot = lam[i - 1][None, :] - logT
        kappa[i] = np.argmin(tot, axis=1) + 1
        lam[i] = tot[np.arange(M), kappa[i] - 1] - logPsi[i]
    labels = np.empty(n, dtype=int)
    labels[n - 1] = np.argmin(lam[n - 1]) + 1
    for i in range(n - 1, 0, -1):
        labels[i - 1] = kappa[i, labels[i] - 1]
    return ViterbiTrace(lam, kappa, labels)


def bidirectional_viterbi(model):
    """Per-time profile distributions from two max-recursions.

    The profile at i is the normalized maximum of the trajectory
    posterior over all labels except l_i; its argmax sequence matches
    the back-tracked joint MAP.
    """
    T, p, Psi = model.T, model.p, model.Psi
    n, M = model.n, model.M
    fwd = np.empty((n, M))
    fwd[0] = _norm_rows(Psi[0] * p)
    for i in range(1, n):
        fwd[i] = _norm_rows(Psi[i] * np.max(T * fwd[i - 1][None, :], axis=1))
    bwd = np.empty((n, M))
    bwd[n - 1] = np.full(M, 1.0 / M)
    for i in range(n - 2, -1, -1):
        bwd[i] = _norm_rows(np.max((Psi[i + 1] * bwd[i + 1])[:, None] * T, axis=0))
    profiles = np.empty((n, M))
    for i in range(n):
        profiles[i] = _norm_rows(fwd[i] * bwd[i])
    labels = np.argmax(profiles, axis=1) + 1
    return ProfileResult(profiles, labels)


def ml_detect(Psi):
    """Per-time maximum-likelihood labels, smallest index on ties."""
    return np.argmax(np.asarray(Psi), axis=1) + 1


def posterior_chain_factors(model, smoothing):
    """Backward (A_i) and forward (B_i) transition factors of the posterior.

    Row k of A_i is the distribution of l_i given l_{i+1} = k and the
    data up to i; column k of B_i is the distribution of l_{i+1} given
    l_i = k and the data after i.
    """
    T, Psi = model.T, model.Psi
    n = model.n
    alpha, beta = smoothing.alpha, smoothing.beta
    A = []
    B = []
    for i in range(n - 1):
        Ai = T * alpha[i][None, :]
        A.append(Ai / Ai.sum(axis=1, keepdims=True))
        Bi = (Psi[i + 1] * beta[i + 1])[:, None] * T
        B.append(Bi / Bi.sum(axis=0, keepdims=True))
    return PosteriorChainFactors(A, B)


class BruteForcePosterior:
    """Full normalized joint posterior over all M^n trajectories."""

    def __init__(self, model):
        n, M = model.n, model.M
        if M ** n > BRUTE_GUARD:
            raise ValueError("brute force exceeds the %d-trajectory guard" % BRUTE_GUARD)
        w = np.ones((M,) * n)
        w *= (model.p * model.Psi[0]).reshape((M,) + (1,) * (n - 1))
        for i in range(1, n):
            f = (model.Psi[i][:, None] * model.T).T  # axes (l_{i-1}, l_i)
            w = w * f.reshape((1,) * (i - 1) + (M, M) + (1,) * (n - 1 - i))
        z = w.sum()
        if z <= 0:
            raise DegenerateObservation("joint posterior has zero mass")
        self.table = w / z
        self.n = n
        self.M = M

    def marginal(self, i):
        """Marginal of l_i (1-based time index)."""
        axes = tuple(ax for ax in range(self.n) if ax != i - 1)
        return self.table.sum(axis=axes)

    def map_labels(self):
        """Joint argmax, smallest (lexicographic) trajectory on ties, 1-based."""
        flat = np.argmax(self.table)
        return np.array(np.unravel_index(flat, self.table.shape)) + 1

    def prob(self, labels):
        return float(self.table[tuple(np.asarray(labels) - 1)])


def brute_force_posterior(model):
    return BruteForcePosterior(model)
