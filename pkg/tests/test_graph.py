import numpy as np
import pytest

from modelt.errors import (
    DenseCapExceeded,
    GraphNotConnected,
    InvalidGraph,
    InvalidInput,
    InvalidSize,
    ParseError,
)
from modelt.graph import (
    DENSE_CAP,
    Graph,
    build_family,
    build_gnp_connected,
    complete,
    cycle,
    from_edge_list,
    is_connected,
    laplacian,
    largest_eigenvalue,
    neighborhood_union_bound,
    path,
    spectrum,
    star,
    to_edge_list,
)

from conftest import random_connected_graph


class TestFamilies:
    def test_star_edges(self):
        g = build_family("star", 5)
        assert g.edge_list() == [(1, 2), (1, 3), (1, 4), (1, 5)]
        assert g.m == 4

    def test_complete(self):
        g = complete(4)
        assert g.m == 6
        assert list(g.degrees) == [3, 3, 3, 3]

    def test_path_two(self):
        assert path(2).edge_list() == [(1, 2)]

    def test_cycle(self):
        g = cycle(5)
        assert g.m == 5
        assert set(g.degrees) == {2}

    @pytest.mark.parametrize("kind", ["star", "complete", "path", "cycle"])
    def test_too_small(self, kind):
        with pytest.raises(InvalidSize):
            build_family(kind, 1)

    def test_two_cycle_rejected(self):
        with pytest.raises(InvalidSize):
            cycle(2)

    def test_unknown_family(self):
        with pytest.raises(InvalidInput):
            build_family("wheel", 5)


class TestGraphInvariants:
    def test_self_loop_rejected(self):
        with pytest.raises(InvalidGraph):
            Graph(3, [(0, 0)])

    def test_duplicate_rejected_regardless_of_orientation(self):
        with pytest.raises(InvalidGraph):
            Graph(3, [(0, 1), (1, 0)])

    def test_out_of_range(self):
        with pytest.raises(InvalidGraph):
            Graph(3, [(0, 3)])

    def test_symmetry_and_handshake(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng, 3, 15)
            assert g.degrees.sum() == 2 * g.m
            for u, v in g.edges:
                assert v in g.neighbors(u) and u in g.neighbors(v)
            for i in range(g.n):
                assert len(g.neighbors(i)) == g.degrees[i]
                assert i not in g.neighbors(i)

    def test_immutable_arrays(self):
        g = star(4)
        with pytest.raises(ValueError):
            g.edges[0, 0] = 3
        with pytest.raises(ValueError):
            g.degrees[0] = 0


class TestGnp:
    def test_p_one_two_vertices(self):
        assert build_gnp_connected(2, 1.0, 123).edge_list() == [(1, 2)]

    def test_p_one_is_complete(self):
        assert build_gnp_connected(5, 1.0, 9) == complete(5)

    def test_deterministic(self):
        a = build_gnp_connected(8, 0.5, 42)
        b = build_gnp_connected(8, 0.5, 42)
        assert a.connected
        assert np.array_equal(a.edges, b.edges)

    def test_seeds_differ(self):
        graphs = {build_gnp_connected(10, 0.4, s).edges.tobytes() for s in range(10)}
        assert len(graphs) > 1

    def test_bad_p(self):
        with pytest.raises(InvalidInput):
            build_gnp_connected(5, 0.0, 1)
        with pytest.raises(InvalidInput):
            build_gnp_connected(5, 1.5, 1)

    def test_bad_n(self):
        with pytest.raises(InvalidSize):
            build_gnp_connected(1, 0.5, 1)


class TestEdgeList:
    def test_path(self):
        assert from_edge_list("1 2\n2 3") == path(3)

    def test_self_loop(self):
        with pytest.raises(InvalidGraph):
            from_edge_list("1 1")

    def test_duplicate(self):
        with pytest.raises(InvalidGraph):
            from_edge_list("1 2\n1 2")

    def test_comments_blank_and_header(self):
        g = from_edge_list("# a comment\n\nn 4\n1 2\n  \n# another\n2 3\n")
        assert g.n == 4
        assert not g.connected

    def test_header_out_of_range(self):
        with pytest.raises(InvalidGraph):
            from_edge_list("n 2\n1 3\n")

    @pytest.mark.parametrize("text,line", [("1 2\n2 x\n", 2), ("1\n", 1), ("1 2 3\n", 1),
                                           ("0 1\n", 1), ("1 2\n-1 2\n", 2)])
    def test_malformed(self, text, line):
        with pytest.raises(ParseError) as info:
            from_edge_list(text)
        assert info.value.line == line

    def test_round_trip(self, rng):
        g = random_connected_graph(rng, 3, 20)
        assert from_edge_list(to_edge_list(g)) == g


class TestConnectivity:
    def test_star(self):
        assert is_connected(star(5))

    def test_isolated_vertex(self):
        assert not is_connected(Graph(3, [(0, 1)]))

    def test_complete(self):
        assert is_connected(complete(4))

    def test_analysis_rejects_disconnected(self):
        with pytest.raises(GraphNotConnected):
            spectrum(Graph(4, [(0, 1), (2, 3)]))


class TestLaplacian:
    def test_path_two(self):
        assert np.array_equal(laplacian(path(2)), [[1, -1], [-1, 1]])

    def test_star_three(self):
        assert np.array_equal(laplacian(star(3)), [[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])

    def test_row_sums_zero(self, rng):
        for _ in range(10):
            lap = laplacian(random_connected_graph(rng, 3, 20))
            assert np.array_equal(lap.sum(axis=1), np.zeros(len(lap)))
            assert np.array_equal(lap @ np.ones(len(lap)), np.zeros(len(lap)))


class TestSpectrum:
    def test_path_two(self):
        rep = spectrum(path(2))
        assert rep.eigenvalues == pytest.approx([0.0, 2.0], abs=1e-12)
        assert rep.lambda1 == pytest.approx(2.0, abs=1e-12)
        assert rep.neighborhood_bound == 2

    def test_star_five(self):
        oracle = np.linalg.eigvalsh(laplacian(star(5)))
        assert oracle[-1] == pytest.approx(5.0, abs=1e-12)
        rep = spectrum(star(5))
        assert rep.lambda1 == pytest.approx(5.0, abs=1e-12)
        assert rep.neighborhood_bound == 5

    def test_complete_four(self):
        oracle = np.linalg.eigvalsh(laplacian(complete(4)))
        assert oracle == pytest.approx([0, 4, 4, 4], abs=1e-12)
        assert spectrum(complete(4)).eigenvalues == pytest.approx([0, 4, 4, 4], abs=1e-12)

    def test_against_numpy_oracle(self, rng):
        for _ in range(30):
            g = random_connected_graph(rng, 3, 25)
            rep = spectrum(g)
            assert np.allclose(rep.eigenvalues, np.linalg.eigvalsh(laplacian(g)), atol=1e-10)

    def test_report_invariants(self, rng):
        tol = 1e-9
        for _ in range(30):
            g = random_connected_graph(rng, 3, 20)
            rep = spectrum(g, tol)
            ev = rep.eigenvalues
            assert np.all(np.diff(ev) >= 0)
            assert ev[0] >= -tol and abs(ev[0]) <= tol
            assert ev[1] > tol  # connected: algebraic connectivity positive
            assert rep.lambda1 <= rep.neighborhood_bound + tol
            assert abs(ev.sum() - g.degrees.sum()) <= 1e-9 * g.degrees.sum()
            assert rep.residual <= tol

    def test_union_bound_on_random_graphs(self, rng):
        for _ in range(100):
            g = random_connected_graph(rng, 3, 12)
            assert spectrum(g).lambda1 <= neighborhood_union_bound(g) + 1e-9

    def test_union_bound_brute_force(self, rng):
        g = random_connected_graph(rng, 5, 15)
        brute = max(len(g.neighbors(u) | g.neighbors(v)) for u, v in g.edges.tolist())
        assert neighborhood_union_bound(g) == brute

    @pytest.mark.parametrize("n", [2, 3, 7, 20, 64])
    def test_star_ratio(self, n):
        g = star(n)
        assert spectrum(g).lambda1 / g.m == pytest.approx(n / (n - 1), rel=1e-9)

    def test_dense_cap(self):
        with pytest.raises(DenseCapExceeded):
            spectrum(star(DENSE_CAP + 1))


class TestLargestEigenvalue:
    def test_power_matches_dense(self, rng):
        for _ in range(10):
            g = random_connected_graph(rng, 5, 30)
            dense = largest_eigenvalue(g, method="dense")
            power = largest_eigenvalue(g, method="power")
            # a Rayleigh quotient never overshoots the top eigenvalue
            assert power <= dense * (1 + 1e-12)
            assert power == pytest.approx(dense, rel=1e-6)

    def test_large_star_uses_power(self):
        n = 10_000
        assert largest_eigenvalue(star(n)) == pytest.approx(n, rel=1e-12)

    def test_unknown_method(self):
        with pytest.raises(InvalidInput):
            largest_eigenvalue(star(4), method="lanczos")
