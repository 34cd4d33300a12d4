import numpy as np

from trellis.factors import Factor, FactorModel, VariableSpace
from trellis.hmc import HmcModel

# acceptance tests append their "[criterion k] PASS/FAIL ..." lines here;
# echoed as one block after the run so capture mode cannot hide them
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_VERDICTS:
        terminalreporter.write_line(line)


def random_hmc(rng, M=None, n=None):
    """Random valid chain model; Psi rows kept away from zero."""
    if M is None:
        M = int(rng.integers(2, 5))
    if n is None:
        n = int(rng.integers(1, 9))
    T = rng.random((M, M)) + 0.05
    T /= T.sum(axis=0, keepdims=True)
    p = rng.random(M) + 0.05
    p /= p.sum()
    Psi = rng.random((n, M)) + 1e-3
    return HmcModel(T, p, Psi)


def random_factor_model(rng, sr, m_max=6, M_max=3, n_max=6):
    """Random factor model covering its universe, tables drawn by the semiring."""
    m = int(rng.integers(1, m_max + 1))
    M = int(rng.integers(2, M_max + 1))
    n = int(rng.integers(1, n_max + 1))
    omegas = []
    for _ in range(n):
        k = int(rng.integers(1, m + 1))
        omegas.append(list(rng.choice(np.arange(1, m + 1), size=k, replace=False)))
    covered = set().union(*(set(o) for o in omegas))
    for v in range(1, m + 1):
        if v not in covered:
            omegas[int(rng.integers(0, n))].append(int(v))
    factors = []
    for o in omegas:
        shape = (M,) * len(o)
        factors.append(Factor(o, sr.sample(rng, shape), M, tail_dims=sr.tail_dims))
    return FactorModel(VariableSpace(m, M), factors)
