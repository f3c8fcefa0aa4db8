import numpy as np
import pytest

from povm_merit.hilbert import FrequencyGrid, enumerate_fock
from povm_merit.models import gaussian_basis


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid(30.0, 70.0, 800)


@pytest.fixture(scope="session")
def modes4(grid):
    return gaussian_basis(grid, 4, 50.0, 1.0)


@pytest.fixture(scope="session")
def modes2(grid):
    return gaussian_basis(grid, 2, 50.0, 1.0)


@pytest.fixture(scope="session")
def modes1(grid):
    return gaussian_basis(grid, 1, 50.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return a @ a.conj().T


def random_povm_matrices(rng, d, k, scale=0.95):
    """k PSD matrices whose sum has spectrum <= scale."""
    parts = [random_psd(rng, d) for _ in range(k)]
    s = sum(parts)
    w, v = np.linalg.eigh(s)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    return [scale * inv_sqrt @ p @ inv_sqrt for p in parts]


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
