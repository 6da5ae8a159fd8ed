import numpy as np
import pytest

from infodelay.transfer_core import RationalTransfer

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def _random_roots(rng, count, lo, hi):
    """Real roots or conjugate pairs with modulus in ``[lo, hi]``."""
    roots = []
    while len(roots) < count:
        r = rng.uniform(lo, hi)
        if count - len(roots) >= 2 and rng.random() < 0.5:
            th = rng.uniform(0.1, np.pi - 0.1)
            roots += [r * np.exp(1j * th), r * np.exp(-1j * th)]
        else:
            roots.append(r * rng.choice([-1.0, 1.0]))
    return roots


def random_outer(rng, max_deg=4, lo=1.1, hi=5.0) -> RationalTransfer:
    """Invertible rational filter normalized to one at ``z = 1``."""
    zeros = _random_roots(rng, int(rng.integers(0, max_deg + 1)), lo, hi)
    poles = _random_roots(rng, int(rng.integers(0, max_deg + 1)), lo, hi)
    return RationalTransfer.from_roots(zeros, poles)


def random_blaschke_zeros(rng, max_count=3, hi=0.9) -> list:
    return _random_roots(rng, int(rng.integers(1, max_count + 1)), 0.05, hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
