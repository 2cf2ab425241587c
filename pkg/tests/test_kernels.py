import numpy as np
import pytest

from modelt import _kernels
from modelt._accel import NUMBA_AVAILABLE
from modelt.graph import laplacian, star

from conftest import random_connected_graph

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")


@pytest.mark.parametrize("n", [2, 3, 4, 7, 10])
def test_round_robin_covers_each_pair_once(n):
    ps, qs = _kernels.round_robin_pairs(n)
    seen = []
    for p_row, q_row in zip(ps, qs):
        live = [(int(p), int(q)) for p, q in zip(p_row, q_row) if p >= 0 and q >= 0]
        used = [x for pq in live for x in pq]
        assert len(used) == len(set(used))  # disjoint within a round
        seen += [tuple(sorted(pq)) for pq in live]
    assert sorted(seen) == [(i, j) for i in range(n) for j in range(i + 1, n)]


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_jacobi_vs_eigvalsh(backend, rng):
    for _ in range(10):
        n = int(rng.integers(2, 25))
        a = rng.standard_normal((n, n))
        a = a + a.T
        ev, off, sweeps = _kernels.jacobi_eigenvalues(a, backend=backend)
        assert sweeps > 0
        assert off <= 1e-12 * np.linalg.norm(a)
        assert np.allclose(ev, np.linalg.eigvalsh(a), atol=1e-10 * np.linalg.norm(a))


def test_jacobi_diagonal_input_needs_no_sweep():
    ev, off, sweeps = _kernels.jacobi_eigenvalues(np.diag([3.0, -1.0, 2.0]))
    assert ev.tolist() == [-1.0, 2.0, 3.0] and off == 0.0


def test_jacobi_budget_exhaustion():
    a = np.array([[1.0, 1.0], [1.0, 2.0]])
    _, _, sweeps = _kernels.jacobi_eigenvalues(a, max_sweeps=0)
    assert sweeps == -1


@needs_numba
def test_jacobi_backends_bit_identical(rng):
    for _ in range(5):
        lap = laplacian(random_connected_graph(rng, 5, 40)).astype(float)
        a = _kernels.jacobi_eigenvalues(lap, backend="numba")
        b = _kernels.jacobi_eigenvalues(lap, backend="numpy")
        assert a[0].tobytes() == b[0].tobytes() and a[2] == b[2]


@needs_numba
def test_power_backends_agree(rng):
    g = random_connected_graph(rng, 20, 60)
    x0 = rng.standard_normal(g.n)
    indptr, indices = g.csr
    a = _kernels.power_lambda_max(indptr, indices, g.degrees, x0, backend="numba")
    b = _kernels.power_lambda_max(indptr, indices, g.degrees, x0, backend="numpy")
    assert a[0] == pytest.approx(b[0], rel=1e-13)


def test_power_budget_exhaustion():
    g = star(50)
    indptr, indices = g.csr
    x0 = np.random.default_rng(0).standard_normal(g.n)
    assert _kernels.power_lambda_max(indptr, indices, g.degrees, x0, max_iter=1)[1] == -1


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.jacobi_eigenvalues(np.eye(2), backend="cuda")
