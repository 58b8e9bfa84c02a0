import numpy as np
import pytest

from multiverse import _backend

# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture(params=_backend.available())
def kernels(request):
    """Each available kernel backend in turn."""
    return _backend.get(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, d, cond=100.0):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    w = np.geomspace(1.0, cond, d)
    A = (Q * w) @ Q.T
    return 0.5 * (A + A.T)


def central_diff(fn, X, h):
    """Central-difference gradient of scalar ``fn`` with respect to array ``X``."""
    X = np.array(X, dtype=np.float64)
    G = np.empty_like(X)
    for idx in np.ndindex(X.shape):
        old = X[idx]
        X[idx] = old + h
        up = fn(X)
        X[idx] = old - h
        down = fn(X)
        X[idx] = old
        G[idx] = (up - down) / (2.0 * h)
    return G


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def ce_instance(seed, c=5, d=8, n=64):
    r = np.random.default_rng(seed)
    return (r.normal(size=(d, c)), r.normal(size=c), r.normal(size=(d, n)),
            r.integers(0, c, size=n))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
