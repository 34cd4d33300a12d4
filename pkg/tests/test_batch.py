"""Vectorized kernels against their scalar reference implementations."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from trellis.batch import (
    batch_fb,
    batch_fcvb,
    batch_ivb,
    batch_kld,
    batch_ml,
    batch_viterbi,
)
from trellis.hmc import (
    HmcModel,
    fb_algorithm,
    ml_detect,
    posterior_chain_factors,
    viterbi,
)
from trellis.numerics import safe_log
from trellis.vb import StoppingConfig, fcvb_run, init_shaping, ivb_run, kld_vb


def _shared_setup(seed, B=40, M=3, n=7):
    rng = np.random.default_rng(seed)
    T = rng.random((M, M)) + 0.05
    T /= T.sum(axis=0, keepdims=True)
    p0 = rng.random(M) + 0.05
    p0 /= p0.sum()
    Psi = rng.random((B, n, M)) + 1e-3
    models = [HmcModel(T, p0, Psi[b]) for b in range(B)]
    return T, p0, Psi, models


def test_batch_fb_matches_scalar():
    T, p0, Psi, models = _shared_setup(301)
    alpha, gamma, labels = batch_fb(T, p0, Psi)
    for b, model in enumerate(models):
        sm = fb_algorithm(model)
        assert_allclose(alpha[b], sm.alpha, atol=1e-12)
        assert_allclose(gamma[b], sm.gamma, atol=1e-12)
        assert np.array_equal(labels[b] + 1, sm.labels)


def test_batch_viterbi_matches_scalar():
    T, p0, Psi, models = _shared_setup(302)
    labels = batch_viterbi(safe_log(T), safe_log(p0), safe_log(Psi))
    for b, model in enumerate(models):
        assert np.array_equal(labels[b] + 1, viterbi(model).labels)


def test_batch_ml_matches_scalar():
    _, _, Psi, models = _shared_setup(303)
    labels = batch_ml(Psi)
    for b, model in enumerate(models):
        assert np.array_equal(labels[b] + 1, ml_detect(model.Psi))


def test_batch_kld_matches_scalar():
    T, p0, Psi, models = _shared_setup(304, B=25)
    rng = np.random.default_rng(9)
    B, n, M = Psi.shape
    p = rng.random((B, n, M)) + 0.05
    p /= p.sum(axis=2, keepdims=True)
    alpha, _, _ = batch_fb(T, p0, Psi)
    got = batch_kld(T, alpha, p)
    for b, model in enumerate(models):
        sm = fb_algorithm(model)
        chain = posterior_chain_factors(model, sm)
        assert_allclose(got[b], kld_vb(model, sm, chain, p[b]), atol=1e-9)


def test_batch_kld_one_hot():
    T, p0, Psi, models = _shared_setup(305, B=15, n=5)
    rng = np.random.default_rng(10)
    B, n, M = Psi.shape
    lab = rng.integers(0, M, size=(B, n))
    p = np.zeros((B, n, M))
    p[np.arange(B)[:, None], np.arange(n)[None, :], lab] = 1.0
    alpha, _, _ = batch_fb(T, p0, Psi)
    got = batch_kld(T, alpha, p)
    for b, model in enumerate(models):
        sm = fb_algorithm(model)
        chain = posterior_chain_factors(model, sm)
        assert_allclose(got[b], kld_vb(model, sm, chain, p[b]), atol=1e-9)


@pytest.mark.parametrize("accelerated", [False, True])
def test_batch_ivb_matches_scalar(accelerated):
    T, p0, Psi, models = _shared_setup(306)
    init = Psi / Psi.sum(axis=2, keepdims=True)
    p, nu_c, nu_e, converged = batch_ivb(
        T, p0, Psi, init, xi=0.01, max_cycles=100, accelerated=accelerated)
    for b, model in enumerate(models):
        res = ivb_run(model, init_shaping("ml", model.Psi),
                      StoppingConfig(xi=0.01, max_cycles=100,
                                     accelerated=accelerated))
        assert_allclose(p[b], res.p, atol=1e-9)
        assert nu_c[b] == res.nu_c
        assert nu_e[b] == res.nu_e
        assert converged[b] == res.converged


@pytest.mark.parametrize("accelerated", [False, True])
def test_batch_fcvb_matches_scalar(accelerated):
    T, p0, Psi, models = _shared_setup(307)
    start = batch_ml(Psi)
    labels, nu_c, nu_e, converged = batch_fcvb(
        T, p0, Psi, start, max_cycles=100, accelerated=accelerated)
    for b, model in enumerate(models):
        res = fcvb_run(model, ml_detect(model.Psi),
                       StoppingConfig(max_cycles=100, accelerated=accelerated))
        assert np.array_equal(labels[b] + 1, res.labels)
        assert nu_c[b] == res.nu_c
        assert nu_e[b] == res.nu_e
        assert converged[b] == res.converged


def test_batch_single_step():
    T, p0, Psi, models = _shared_setup(308, n=1)
    _, gamma, _ = batch_fb(T, p0, Psi)
    labels = batch_viterbi(safe_log(T), safe_log(p0), safe_log(Psi))
    for b, model in enumerate(models):
        assert_allclose(gamma[b], fb_algorithm(model).gamma, atol=1e-12)
        assert np.array_equal(labels[b] + 1, viterbi(model).labels)


def test_batch_ivb_rejects_bad_init():
    T, p0, Psi, _ = _shared_setup(309, B=4)
    with pytest.raises(ValueError):
        batch_ivb(T, p0, Psi, np.full((4, 2, 3), 1.0 / 3))
    with pytest.raises(ValueError):
        batch_fcvb(T, p0, Psi, np.zeros((4, 3), dtype=int))


def test_batch_fb_degenerate_trial():
    M, n = 2, 3
    T = np.full((M, M), 0.5)
    p0 = np.array([1.0, 0.0])
    Psi = np.ones((3, n, M))
    Psi[1, 0] = [0.0, 1.0]  # only reachable from the zero-mass start state
    with pytest.raises(FloatingPointError):
        batch_fb(T, p0, Psi)
