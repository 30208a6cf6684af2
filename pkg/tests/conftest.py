import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def central_difference(f, params, h=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. each parameter tensor's data."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p.data[idx]
            p.data[idx] = old + h
            up = f()
            p.data[idx] = old - h
            down = f()
            p.data[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(a, n, floor=1e-6):
    a, n = np.asarray(a), np.asarray(n)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion outcome for the end-of-run summary."""
    def record(number, ok, detail=""):
        ACCEPTANCE[number] = (bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
