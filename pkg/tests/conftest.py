import numpy as np
import pytest

from robustcs.core_model import SensingProblem


def gmm_instance(seed, m=30, n=60, k=5, snr_db=20.0, p=0.1, kappa=100.0):
    """Sparse vector measured through a Gaussian matrix with contaminated Gaussian noise."""
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((m, n)) / np.sqrt(m)
    x = np.zeros(n)
    x[rng.choice(n, k, replace=False)] = rng.standard_normal(k) * 2.0
    clean = phi @ x
    sigma = np.sqrt(np.mean(clean ** 2) / 10 ** (snr_db / 10) / (1 - p + p * kappa))
    scale = np.where(rng.random(m) < p, sigma * np.sqrt(kappa), sigma)
    return SensingProblem(phi, clean + scale * rng.standard_normal(m)), x, sigma


@pytest.fixture
def instance():
    return gmm_instance(0)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
