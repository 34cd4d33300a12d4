"""Trial-vectorized inference kernels for Monte Carlo runs.

Every function here takes a (B, n, M) likelihood block sharing one
transition matrix and replicates the scalar recursions in hmc/vb
trial-by-trial, with the same update order and tie rules. Labels are
0-based here; the experiment layer converts at its edges. The scalar
modules stay the reference: equivalence is pinned by tests.
"""

import numpy as np

from .numerics import safe_log


def _norm(v):
    z = v.sum(axis=-1, keepdims=True)
    if np.any(z <= 0.0):
        raise FloatingPointError("zero normalizer in batch recursion")
    return v / z


def batch_fb(T, p0, Psi):
    """Filtering and smoothing rows for every trial.

    Returns (alpha, gamma, labels); alpha is kept because the
    divergence computation reuses it.
    """
    B, n, M = Psi.shape
    alpha = np.empty((B, n, M))
    alpha[:, 0] = _norm(Psi[:, 0] * p0[None, :])
    for i in range(1, n):
        alpha[:, i] = _norm(Psi[:, i] * (alpha[:, i - 1] @ T.T))
    beta = np.full((B, M), 1.0 / M)
    gamma = np.empty((B, n, M))
    gamma[:, n - 1] = _norm(alpha[:, n - 1] * beta)
    for i in range(n - 2, -1, -1):
        beta = _norm((Psi[:, i + 1] * beta) @ T)
        gamma[:, i] = _norm(alpha[:, i] * beta)
    return alpha, gamma, np.argmax(gamma, axis=2)


def batch_viterbi(logT, logp0, logPsi):
    """Joint-MAP labels for every trial (min-metric form, smallest-index ties)."""
    B, n, M = logPsi.shape
    lam = -(logPsi[:, 0] + logp0[None, :])
    kappa = np.empty((B, n, M), dtype=np.int32)
    for i in range(1, n):
        tot = lam[:, None, :] - logT[None, :, :]
        am = np.argmin(tot, axis=2)
        kappa[:, i] = am
        lam = np.take_along_axis(tot, am[:, :, None], axis=2)[:, :, 0] - logPsi[:, i]
        lam -= lam.min(axis=1, keepdims=True)  # shift only; argmins unchanged
    labels = np.empty((B, n), dtype=np.int64)
    labels[:, n - 1] = np.argmin(lam, axis=1)
    rows = np.arange(B)
    for i in range(n - 1, 0, -1):
        labels[:, i - 1] = kappa[rows, i, labels[:, i]]
    return labels


def batch_ml(Psi):
    return np.argmax(Psi, axis=2)


def batch_kld(T, alpha, p):
    """Divergence of factored marginals p from each trial's posterior.

    alpha are the normalized filtering rows from batch_fb. Works off
    the chain decomposition, so nothing of size (B, M, M) per step is
    stored. One-hot p rows give minus the log posterior of that
    trajectory.
    """
    B, n, M = p.shape
    logT = safe_log(T)
    out = np.einsum("bik,bik->b", p, safe_log(p))
    out -= np.einsum("bk,bk->b", p[:, n - 1], safe_log(alpha[:, n - 1]))
    for i in range(n - 1):
        out -= np.einsum("bk,kl,bl->b", p[:, i + 1], logT, p[:, i])
        out -= np.einsum("bl,bl->b", p[:, i], safe_log(alpha[:, i]))
        out += np.einsum("bk,bk->b", p[:, i + 1], safe_log(alpha[:, i] @ T.T))
    return out


def batch_ivb(T, p0, Psi, init, xi=0.01, max_cycles=100, accelerated=False):
    """Mean-field marginal sweeps across all trials at once.

    Returns (p, nu_c, nu_e, converged). Trials leave the active set as
    they converge, freezing their rows, so results match per-trial
    scalar runs.
    """
    B, n, M = Psi.shape
    logPsi = safe_log(Psi)
    logT = safe_log(T)
    logp0 = safe_log(p0)
    p = np.array(init, dtype=float)
    if p.shape != (B, n, M):
        raise ValueError("init must be B x n x M")
    tau = np.ones((B, n), dtype=bool)
    active = np.ones(B, dtype=bool)
    updates = np.zeros(B, dtype=np.int64)
    nu_c = np.full(B, max_cycles, dtype=np.int64)
    converged = np.zeros(B, dtype=bool)
    for nu in range(1, max_cycles + 1):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        worst = np.zeros(B)
        for i in range(n):
            rows = act[tau[act, i]] if accelerated else act
            if rows.size == 0:
                continue
            s = logPsi[rows, i] + (p[rows, i - 1] @ logT.T if i > 0 else logp0[None, :])
            if i + 1 < n:
                s = s + p[rows, i + 1] @ logT
            s -= s.max(axis=1, keepdims=True)
            new = np.exp(s)
            new /= new.sum(axis=1, keepdims=True)
            ks = np.max(np.abs(np.cumsum(new, axis=1) - np.cumsum(p[rows, i], axis=1)), axis=1)
            p[rows, i] = new
            updates[rows] += 1
            if accelerated:
                hot = rows[ks > xi]
                if i > 0:
                    tau[hot, i - 1] = True
                if i + 1 < n:
                    tau[hot, i + 1] = True
                tau[rows[ks <= xi], i] = False
            else:
                np.maximum.at(worst, rows, ks)
        done = active & (~tau.any(axis=1) if accelerated else (worst <= xi))
        nu_c[done] = nu
        converged[done] = True
        active &= ~done
    return p, nu_c, updates / n, converged


def batch_fcvb(T, p0, Psi, init_labels, max_cycles=100, accelerated=False):
    """Point-mass mean-field sweeps across all trials at once.

    init_labels is (B, n), 0-based. Returns (labels, nu_c, nu_e,
    converged); plain mode counts the confirming change-free cycle.
    """
    B, n, M = Psi.shape
    logPsi = safe_log(Psi)
    logT = safe_log(T)
    logp0 = safe_log(p0)
    k = np.array(init_labels, dtype=np.int64)
    if k.shape != (B, n):
        raise ValueError("init_labels must be B x n")
    tau = np.ones((B, n), dtype=bool)
    active = np.ones(B, dtype=bool)
    updates = np.zeros(B, dtype=np.int64)
    nu_c = np.full(B, max_cycles, dtype=np.int64)
    converged = np.zeros(B, dtype=bool)
    for nu in range(1, max_cycles + 1):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        changed_any = np.zeros(B, dtype=bool)
        for i in range(n):
            rows = act[tau[act, i]] if accelerated else act
            if rows.size == 0:
                continue
            s = logPsi[rows, i].copy()
            if n == 1:
                s += logp0[None, :]
            elif i == 0:
                s += logT[k[rows, 1]] + logp0[None, :]
            elif i == n - 1:
                s += logT.T[k[rows, i - 1]]
            else:
                s += logT[k[rows, i + 1]] + logT.T[k[rows, i - 1]]
            new = np.argmax(s, axis=1)
            moved = new != k[rows, i]
            k[rows, i] = new
            updates[rows] += 1
            hot = rows[moved]
            changed_any[hot] = True
            if accelerated:
                if i > 0:
                    tau[hot, i - 1] = True
                if i + 1 < n:
                    tau[hot, i + 1] = True
                tau[rows[~moved], i] = False
        done = active & (~tau.any(axis=1) if accelerated else ~changed_any)
        nu_c[done] = nu
        converged[done] = True
        active &= ~done
    return k, nu_c, updates / n, converged
