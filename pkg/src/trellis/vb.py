"""Variational label inference on a known-parameter hidden Markov chain.

Two mean-field schemes over the label chain: independent marginal
updates (ivb_run, distributions per time step) and the functionally
constrained point-mass variant (fcvb_run, hard labels per time step).
Both sweep i = 1..n repeatedly, support an accelerated scheduler that
skips steps whose neighbourhood did not move, and report cycle counts:
nu_c counts full sweeps, nu_e is total single-step updates divided by n.
"""

from collections import namedtuple

import numpy as np

from .hmc import fb_algorithm, posterior_chain_factors
from .numerics import safe_log


class StoppingConfig:
    def __init__(self, xi=0.01, max_cycles=100, accelerated=False):
        if xi < 0:
            raise ValueError("xi must be non-negative")
        if max_cycles < 1:
            raise ValueError("max_cycles must be positive")
        self.xi = float(xi)
        self.max_cycles = int(max_cycles)
        self.accelerated = bool(accelerated)


VbResult = namedtuple(
    "VbResult", ["p", "labels", "nu_c", "nu_e", "converged", "tau", "kld_trace"]
)
FcvbResult = namedtuple(
    "FcvbResult", ["labels", "nu_c", "nu_e", "converged", "tau", "theta_precomputed"]
)


def ks_distance(p, q):
    """Max absolute CDF gap between two pmfs over states 1..M."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("pmf length mismatch")
    return float(np.max(np.abs(np.cumsum(p) - np.cumsum(q))))


def init_shaping(mode, Psi):
    """Initial per-step marginals: 'uniform' rows or row-normalized 'ml'."""
    Psi = np.asarray(Psi, dtype=float)
    n, M = Psi.shape
    if mode == "uniform":
        return np.full((n, M), 1.0 / M)
    if mode == "ml":
        z = Psi.sum(axis=1, keepdims=True)
        if np.any(z <= 0):
            raise ValueError("ml shaping needs a positive mass in every row")
        return Psi / z
    raise ValueError("unknown init mode %r" % (mode,))


def _softmax(s):
    s = s - s.max()
    e = np.exp(s)
    return e / e.sum()


# Float sweeps can wander forever in the last bit of a pmf entry, which
# would keep the xi=0 stopping rule from ever firing. Movement at or
# below this KS resolution counts as none and leaves the stored pmf
# untouched, so a reached fixed point stays bit-exact.
KS_RESOLUTION = 1e-13


def kld_vb(model, smoothing, chain, p):
    """Divergence of the factored approximation from the exact posterior.

    Uses the chain decomposition of the posterior, so no joint table is
    needed; with one-hot rows this equals minus the log posterior of
    the encoded trajectory.
    """
    p = np.asarray(p, dtype=float)
    n = model.n
    if p.shape != (n, model.M):
        raise ValueError("p must be n x M")
    ent = float(np.sum(p * safe_log(p)))
    cross = float(np.sum(p[n - 1] * safe_log(smoothing.alpha[n - 1])))
    for i in range(n - 1):
        logA = safe_log(chain.A[i])
        cross += float(p[i + 1] @ logA @ p[i])
    return ent - cross


def ivb_run(model, init, cfg=None, track_kld=False):
    """Mean-field marginal updates, plain or accelerated sweeps.

    init is an n x M array of starting pmfs (see init_shaping). With
    track_kld, one divergence value is recorded after every completed
    cycle (this runs the exact smoother once up front).
    """
    if cfg is None:
        cfg = StoppingConfig()
    n, M = model.n, model.M
    p = np.array(init, dtype=float)
    if p.shape != (n, M):
        raise ValueError("init must be n x M")
    if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
        raise ValueError("init rows must be simplex vectors")
    logPsi = safe_log(model.Psi)
    logT = safe_log(model.T)
    logp0 = safe_log(model.p)

    smoothing = chain = None
    kld_trace = [] if track_kld else None
    if track_kld:
        smoothing = fb_algorithm(model)
        chain = posterior_chain_factors(model, smoothing)

    tau = np.ones(n, dtype=bool)
    total_updates = 0
    nu_c = cfg.max_cycles
    converged = False
    for nu in range(1, cfg.max_cycles + 1):
        worst = 0.0
        for i in range(n):
            if cfg.accelerated and not tau[i]:
                continue
            s = logPsi[i].copy()
            if i + 1 < n:
                s += logT.T @ p[i + 1]
            if i == 0:
                s += logp0
            else:
                s += logT @ p[i - 1]
            new = _softmax(s)
            ks = ks_distance(new, p[i])
            if ks <= KS_RESOLUTION:
                ks = 0.0
            else:
                p[i] = new
            total_updates += 1
            if cfg.accelerated:
                if ks > cfg.xi:
                    if i > 0:
                        tau[i - 1] = True
                    if i + 1 < n:
                        tau[i + 1] = True
                else:
                    tau[i] = False
            elif ks > worst:
                worst = ks
        if track_kld:
            kld_trace.append(kld_vb(model, smoothing, chain, p))
        done = (not tau.any()) if cfg.accelerated else (worst <= cfg.xi)
        if done:
            nu_c = nu
            converged = True
            break
    labels = np.argmax(p, axis=1) + 1
    return VbResult(p, labels, nu_c, total_updates / n, converged, tau, kld_trace)


def fcvb_run(model, init_labels, cfg=None):
    """Point-mass mean-field updates, plain or accelerated sweeps.

    init_labels are 1-based starting labels (ml_detect output works).
    Plain mode stops after the first change-free cycle, which is
    included in nu_c.
    """
    if cfg is None:
        cfg = StoppingConfig()
    n, M = model.n, model.M
    k = np.asarray(init_labels, dtype=int) - 1
    if k.shape != (n,):
        raise ValueError("init_labels must have length n")
    if np.any(k < 0) or np.any(k >= M):
        raise ValueError("init labels out of range")
    k = k.copy()
    logPsi = safe_log(model.Psi)
    logT = safe_log(model.T)
    logp0 = safe_log(model.p)
    # pairwise score of state k between fixed neighbours a (next), b (prev)
    precompute = M ** 3 <= n * M
    theta = None
    if precompute:
        theta = logT.T[:, :, None] + logT[:, None, :]  # [k, a, b]

    tau = np.ones(n, dtype=bool)
    total_updates = 0
    nu_c = cfg.max_cycles
    converged = False
    for nu in range(1, cfg.max_cycles + 1):
        changed_any = False
        for i in range(n):
            if cfg.accelerated and not tau[i]:
                continue
            s = logPsi[i].copy()
            if n == 1:
                s += logp0
            elif i == 0:
                s += logT[k[1]] + logp0
            elif i == n - 1:
                s += logT[:, k[i - 1]]
            elif precompute:
                s += theta[:, k[i + 1], k[i - 1]]
            else:
                s += logT[k[i + 1]] + logT[:, k[i - 1]]
            new = int(np.argmax(s))
            total_updates += 1
            moved = new != k[i]
            if moved:
                k[i] = new
                changed_any = True
            if cfg.accelerated:
                if moved:
                    if i > 0:
                        tau[i - 1] = True
                    if i + 1 < n:
                        tau[i + 1] = True
                else:
                    tau[i] = False
        done = (not tau.any()) if cfg.accelerated else (not changed_any)
        if done:
            nu_c = nu
            converged = True
            break
    return FcvbResult(k + 1, nu_c, total_updates / n, converged, tau, precompute)
