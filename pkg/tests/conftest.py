import numpy as np
import pytest

from opineq.ensembles import complex_gaussian, haar_unitary, substream


@pytest.fixture
def rng():
    return substream(2024, "tests", 0)


def random_hermitian(rng, n, scale=1.0):
    g = complex_gaussian(rng, (n, n)) * scale
    return (g + g.conj().T) / 2


def random_posdef(rng, n, lo=0.5, hi=5.0):
    u = haar_unitary(n, rng=rng)
    return (u * rng.uniform(lo, hi, n)) @ u.conj().T


def reference_matrices():
    return np.diag([1.0, 4.0]), np.diag([4.0, 1.0]), np.array([[5.0, 3.0], [3.0, 5.0]])


# acceptance criteria register their outcome here; the terminal summary
# prints one line per criterion
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[0].split("[")[0]), s)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
