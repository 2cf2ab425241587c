import numpy as np
import pytest

from modelt.graph import build_gnp_connected

_ACCEPTANCE = []


def random_connected_graph(rng: np.random.Generator, n_lo: int, n_hi: int):
    n = int(rng.integers(n_lo, n_hi + 1))
    p = float(rng.uniform(0.25, 0.9))
    return build_gnp_connected(n, p, int(rng.integers(0, 2**63 - 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_line():
    def record(label: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((label, ok, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
