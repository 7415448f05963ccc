"""Graph representation, Laplacian, spectral decomposition, and the graph Fourier transform."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionFailed, DimensionMismatch
from .linalg import sign_normalize_columns


@dataclass(frozen=True)
class Graph:
    """Connected weighted undirected graph without self-loops.

    `adjacency` is a symmetric nonnegative matrix with zero diagonal;
    connectivity is verified by breadth-first search at construction.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("adjacency must be symmetric")
        if np.any(a < 0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.abs(np.diag(a)) > 0):
            raise ValueError("self-loops are not allowed")
        object.__setattr__(self, "adjacency", a)
        if not _connected(a):
            raise ValueError("graph must be connected")

    @property
    def n_vertices(self):
        return self.adjacency.shape[0]


def _connected(a):
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in np.nonzero(a[v] > 0)[0]:
            if not seen[u]:
                seen[u] = True
                stack.append(int(u))
    return bool(seen.all())


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian D - A; rows sum to zero."""
    a = g.adjacency
    return np.diag(a.sum(axis=1)) - a


@dataclass(frozen=True)
class SpectralBasis:
    """Full eigendecomposition of a graph Laplacian.

    Eigenvalues are ascending with eigenvalue[0] ~ 0; eigenvector columns are
    orthonormal and sign-normalized (first nonzero entry positive) so that
    derived dictionaries are reproducible across runs and backends.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    laplacian: np.ndarray = field(repr=False)

    @property
    def n_vertices(self):
        return self.eigenvalues.shape[0]


def spectral_basis(lap: np.ndarray) -> SpectralBasis:
    """Eigendecompose a combinatorial Laplacian, ascending order.

    Raises DecompositionFailed if the symmetric eigensolver does not
    converge. Repeated eigenvalues yield an arbitrary orthonormal basis of
    the eigenspace; downstream code must only rely on spectral projectors.
    """
    lap = np.asarray(lap, dtype=float)
    if not np.allclose(lap, lap.T, atol=1e-10):
        raise ValueError("Laplacian must be symmetric")
    if np.abs(lap.sum(axis=1)).max() > 1e-8:
        raise ValueError("Laplacian rows must sum to zero")
    try:
        vals, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailed(str(exc)) from exc
    vecs = sign_normalize_columns(vecs)
    return SpectralBasis(eigenvalues=vals, eigenvectors=vecs, laplacian=lap)


def gft(basis: SpectralBasis, x: np.ndarray) -> np.ndarray:
    """Graph Fourier transform U^T x."""
    x = np.asarray(x)
    if x.shape[0] != basis.n_vertices:
        raise DimensionMismatch(
            f"signal length {x.shape[0]} != {basis.n_vertices} vertices"
        )
    return basis.eigenvectors.T @ x

def igft(basis: SpectralBasis, xhat: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform U xhat."""
    xhat = np.asarray(xhat)
    if xhat.shape[0] != basis.n_vertices:
        raise DimensionMismatch(
            f"coefficient length {xhat.shape[0]} != {basis.n_vertices} vertices"
        )
    return basis.eigenvectors @ xhat


def graph_from_edge_csv(path, index_base=0, n_vertices=None) -> Graph:
    """Load a graph from an edge-list CSV with header ``src,dst,weight``.

    `index_base` selects 0- or 1-based vertex indices in the file. The
    vertex count defaults to the largest index seen.
    """
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    edges = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"src", "dst", "weight"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ValueError("edge CSV must have header src,dst,weight")
        for row in reader:
            edges.append(
                (
                    int(row["src"]) - index_base,
                    int(row["dst"]) - index_base,
                    float(row["weight"]),
                )
            )
    if not edges:
        raise ValueError("edge CSV contains no edges")
    top = max(max(s, d) for s, d, _ in edges) + 1
    n = top if n_vertices is None else n_vertices
    a = np.zeros((n, n))
    for s, d, w in edges:
        if s == d:
            raise ValueError(f"self-loop on vertex {s + index_base}")
        a[s, d] = w
        a[d, s] = w
    return Graph(adjacency=a)
