import numpy as np
import pytest

from hpde.grid import GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def small_grid():
    return GridSpec(1.0, 1.2, 0.5, 8, 8, 6)


@pytest.fixture
def verdict_line(capsys):
    """Print one PASS/FAIL line that survives output capture."""

    def emit(label: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{label}] {'PASS' if ok else 'FAIL'}: {detail}")

    return emit
