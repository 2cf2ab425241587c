"""Simple undirected graphs, their Laplacian and its spectrum.

Vertices are 0-based inside the library.  The edge-list text format, family
descriptors and everything printed for humans use 1-based labels.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DenseCapExceeded,
    EigensolverFailure,
    GenerationFailed,
    GraphNotConnected,
    InvalidGraph,
    InvalidInput,
    InvalidSize,
    ParseError,
)

DENSE_CAP = 2000
GNP_ATTEMPTS = 10_000
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
POWER_REL_TOL = 1e-10
POWER_MAX_ITER = 100_000

FAMILIES = ("star", "complete", "path", "cycle")


class Graph:
    """Immutable simple undirected graph on vertices ``0 .. n-1``.

    ``edges`` is an ``(m, 2)`` integer array with ``u < v`` in every row,
    sorted lexicographically.
    """

    def __init__(self, n: int, edges):
        n = int(n)
        if n < 1:
            raise InvalidSize(f"graph needs at least one vertex, got n={n}")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InvalidGraph(f"vertex index out of range for n={n}")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise InvalidGraph("self-loops are not allowed")
        arr = np.sort(arr, axis=1)
        arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
        if len(arr) > 1 and np.any(np.all(arr[1:] == arr[:-1], axis=1)):
            raise InvalidGraph("duplicate edges are not allowed")
        arr.setflags(write=False)

        degrees = np.bincount(arr.ravel(), minlength=n).astype(np.int64)
        both = np.concatenate([arr, arr[:, ::-1]])
        both = both[np.lexsort((both[:, 1], both[:, 0]))]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.ascontiguousarray(both[:, 1])
        for a in (degrees, indptr, indices):
            a.setflags(write=False)

        self._n = n
        self._edges = arr
        self._degrees = degrees
        self._indptr = indptr
        self._indices = indices
        self._neighbors = None
        self._connected = None

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        """Number of edges |E|."""
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the symmetric adjacency structure."""
        return self._indptr, self._indices

    def neighbors(self, i: int) -> frozenset:
        if self._neighbors is None:
            self._neighbors = tuple(
                frozenset(self._indices[self._indptr[v]:self._indptr[v + 1]].tolist())
                for v in range(self._n)
            )
        return self._neighbors[i]

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges with 1-based labels."""
        return [(int(u) + 1, int(v) + 1) for u, v in self._edges]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self._n, self._n))
        a[self._edges[:, 0], self._edges[:, 1]] = 1.0
        a[self._edges[:, 1], self._edges[:, 0]] = 1.0
        return a

    @property
    def connected(self) -> bool:
        if self._connected is None:
            self._connected = is_connected(self)
        return self._connected

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._edges, other._edges)

    def __hash__(self):
        return hash((self._n, self._edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self._n}, m={self.m})"


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------

def build_family(kind: str, n: int) -> Graph:
    """Named graph family.  The star's center is vertex 1 (0 internally)."""
    n = int(n)
    if n < 2:
        raise InvalidSize(f"{kind} graph needs n >= 2, got {n}")
    if kind == "star":
        edges = [(0, j) for j in range(1, n)]
    elif kind == "complete":
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "cycle":
        if n < 3:
            raise InvalidSize(f"cycle graph needs n >= 3, got {n}")
        edges = [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]
    else:
        raise InvalidInput(f"unknown graph family {kind!r}; expected one of {FAMILIES}")
    return Graph(n, edges)


def star(n: int) -> Graph:
    return build_family("star", n)


def complete(n: int) -> Graph:
    return build_family("complete", n)


def path(n: int) -> Graph:
    return build_family("path", n)


def cycle(n: int) -> Graph:
    return build_family("cycle", n)


def build_gnp_connected(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) sample, redrawn until connected.

    Every attempt consumes ``n(n-1)/2`` uniforms from one PCG64 stream seeded
    with ``seed``, so the result is a pure function of ``(n, p, seed)``.
    """
    n = int(n)
    if n < 2:
        raise InvalidSize(f"G(n, p) needs n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise InvalidInput(f"p must lie in (0, 1], got {p}")
    try:
        rng = np.random.default_rng(int(seed))
    except ValueError as exc:
        raise InvalidInput(f"bad seed {seed!r}: {exc}") from None
    iu, ju = np.triu_indices(n, 1)
    for _ in range(GNP_ATTEMPTS):
        keep = rng.random(iu.size) < p
        g = Graph(n, np.column_stack([iu[keep], ju[keep]]))
        if g.connected:
            return g
    raise GenerationFailed(
        f"no connected G({n}, {p}) sample within {GNP_ATTEMPTS} attempts (seed {seed})"
    )


def from_edge_list(text: str) -> Graph:
    """Parse the whitespace edge-list format (1-based labels).

    ``#`` lines and blank lines are skipped.  An optional first line
    ``n <count>`` fixes the vertex count; otherwise it is the largest label.
    """
    declared = None
    pairs = []
    seen_content = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if not seen_content and tokens[0] == "n":
            seen_content = True
            if len(tokens) != 2:
                raise ParseError(lineno, f"expected 'n <count>', got {line!r}")
            declared = _parse_label(tokens[1], lineno)
            continue
        seen_content = True
        if len(tokens) != 2:
            raise ParseError(lineno, f"expected two vertex labels, got {line!r}")
        pairs.append((_parse_label(tokens[0], lineno), _parse_label(tokens[1], lineno)))

    if declared is None:
        if not pairs:
            raise InvalidGraph("edge list contains no edges and no 'n' header")
        n = max(max(u, v) for u, v in pairs)
    else:
        n = declared
    for u, v in pairs:
        if u > n or v > n:
            raise InvalidGraph(f"edge ({u}, {v}) exceeds declared n={n}")
    return Graph(n, [(u - 1, v - 1) for u, v in pairs])


def _parse_label(token: str, lineno: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(lineno, f"not an integer: {token!r}") from None
    if value < 1:
        raise ParseError(lineno, f"vertex labels are positive, got {value}")
    return value


def to_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{u} {v}" for u, v in g.edge_list()]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# analysis
# --------------------------------------------------------------------------

def is_connected(g: Graph) -> bool:
    """Breadth-first search from vertex 1."""
    indptr, indices = g.csr
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for u in indices[indptr[v]:indptr[v + 1]]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == g.n


def require_connected(g: Graph) -> None:
    if not g.connected:
        raise GraphNotConnected(f"{g!r} is not connected")


def laplacian(g: Graph) -> np.ndarray:
    """Dense ``diag(d) - A``."""
    lap = -g.adjacency()
    lap[np.diag_indices(g.n)] = g.degrees
    return lap


def neighborhood_union_bound(g: Graph) -> int:
    """``max |N_i ∪ N_j|`` over edges (i, j); an upper bound on the largest
    Laplacian eigenvalue.  Exact integer arithmetic on neighbor sets."""
    best = 0
    for u, v in g.edges:
        nu, nv = g.neighbors(int(u)), g.neighbors(int(v))
        small, large = (nu, nv) if len(nu) <= len(nv) else (nv, nu)
        common = sum(1 for x in small if x in large)
        best = max(best, len(nu) + len(nv) - common)
    return best


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    lambda1: float
    neighborhood_bound: int
    residual: float
    sweeps: int

    def bound_holds(self, tol: float = 1e-9) -> bool:
        return self.lambda1 <= self.neighborhood_bound + tol

    def to_dict(self, tol: float = 1e-9) -> dict:
        return {
            "n": int(len(self.eigenvalues)),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "lambda1": float(self.lambda1),
            "lemma2_bound": int(self.neighborhood_bound),
            "bound_holds": self.bound_holds(tol),
            "residual": float(self.residual),
        }


def spectrum(g: Graph, tol: float = 1e-9, backend: str | None = None) -> SpectralReport:
    """All Laplacian eigenvalues (ascending) by dense cyclic Jacobi.

    ``tol`` bounds the reported off-diagonal residual and is the slack used
    when checking positive semidefiniteness.
    """
    require_connected(g)
    if g.n > DENSE_CAP:
        raise DenseCapExceeded(
            f"dense eigensolver is capped at n={DENSE_CAP}, got n={g.n}; "
            "use largest_eigenvalue for lambda1 alone"
        )
    eigs, off, sweeps = _kernels.jacobi_eigenvalues(
        laplacian(g), JACOBI_REL_TOL, JACOBI_MAX_SWEEPS, backend=backend
    )
    if sweeps < 0:
        raise EigensolverFailure(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-norm {off:.3e})"
        )
    if off > tol:
        raise EigensolverFailure(f"off-diagonal residual {off:.3e} exceeds tol {tol:.3e}")
    eigs.setflags(write=False)
    return SpectralReport(
        eigenvalues=eigs,
        lambda1=float(eigs[-1]),
        neighborhood_bound=neighborhood_union_bound(g),
        residual=off,
        sweeps=sweeps,
    )


def largest_eigenvalue(g: Graph, method: str = "auto", backend: str | None = None) -> float:
    """Largest Laplacian eigenvalue.

    ``auto`` uses the dense solver up to ``DENSE_CAP`` vertices and power
    iteration above it.
    """
    require_connected(g)
    if method == "auto":
        method = "dense" if g.n <= DENSE_CAP else "power"
    if method == "dense":
        return spectrum(g, backend=backend).lambda1
    if method != "power":
        raise InvalidInput(f"unknown eigenvalue method {method!r}")
    if g.n == 1:
        return 0.0
    x0 = np.random.default_rng(0).standard_normal(g.n)
    indptr, indices = g.csr
    lam, its = _kernels.power_lambda_max(
        indptr, indices, g.degrees, x0, POWER_REL_TOL, POWER_MAX_ITER, backend=backend
    )
    if its < 0:
        raise EigensolverFailure(f"power iteration did not settle in {POWER_MAX_ITER} iterations")
    return lam
