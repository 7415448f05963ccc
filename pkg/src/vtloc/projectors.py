"""Projection operators on factor and joint vertex-time spaces.

All operators act on signal values; inner products on the time factor and
the joint space carry the quadrature weights, so "Hermitian" always means
Hermitian under the weighted inner product. Symmetrized coordinates
(multiplying by W^{1/2}) turn every such operator into an ordinary
Hermitian matrix, which is how all eigenproblems are solved.

Joint vectors use vertex-major ordering: entry v*M + m holds the value at
vertex v and grid time t_m.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySubset,
    NoConvergence,
    RankDeficient,
    ZeroSignal,
)
from .linalg import eigh_desc, power_iteration, weighted_norm

# Largest joint dimension for which operators are materialized as dense
# matrices; beyond this only factored/basis representations are allowed.
MATERIALIZE_LIMIT = 6000

# Dense eigendecomposition is used for lambda_max up to this dimension,
# power iteration beyond it.
DENSE_EIG_LIMIT = 4000


class Projector:
    """A (near-)projector on a weighted space, in one of four representations.

    diag    -- pointwise mask, stored as a vector
    dense   -- explicit operator matrix on signal values
    basis   -- Q with weighted-orthonormal columns; operator is Q Q^H W
    product -- Kronecker product of a vertex-factor and a time-factor projector

    `idempotency_tol` documents how far ||P^2 - P|| may sit from zero for
    this instance; masks and basis projectors are exact (1e-10), while
    discretized band-limiting operators are genuinely non-idempotent.
    """

    def __init__(self, *, kind, weights, diag=None, matrix=None, basis=None,
                 factors=None, idempotency_tol=1e-10):
        reps = [r is not None for r in (diag, matrix, basis, factors)]
        if sum(reps) != 1:
            raise ValueError("exactly one representation must be given")
        self.kind = kind
        self.weights = np.asarray(weights, dtype=float)
        self._diag = None if diag is None else np.asarray(diag)
        self._matrix = None if matrix is None else np.asarray(matrix)
        self._basis = None if basis is None else np.asarray(basis)
        self._factors = factors
        self.idempotency_tol = idempotency_tol
        if self._diag is not None and self._diag.shape[0] != self.dim:
            raise DimensionMismatch("mask length does not match weights")
        if self._matrix is not None and self._matrix.shape != (self.dim, self.dim):
            raise DimensionMismatch("matrix shape does not match weights")
        if self._basis is not None and self._basis.shape[0] != self.dim:
            raise DimensionMismatch("basis rows do not match weights")

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def is_complex(self):
        if self._matrix is not None:
            return np.iscomplexobj(self._matrix)
        if self._basis is not None:
            return np.iscomplexobj(self._basis)
        if self._factors is not None:
            return any(f.is_complex for f in self._factors)
        return False

    # -- application ---------------------------------------------------

    def apply(self, f):
        f = np.asarray(f)
        if f.shape[0] != self.dim:
            raise DimensionMismatch(f"signal length {f.shape[0]} != {self.dim}")
        if self._diag is not None:
            return self._diag * f
        if self._matrix is not None:
            return self._matrix @ f
        if self._basis is not None:
            q = self._basis
            return q @ (q.conj().T @ (self.weights * f))
        pv, pt = self._factors
        grid = f.reshape(pv.dim, pt.dim)
        rows = np.stack([pt.apply(row) for row in grid])
        cols = np.stack([pv.apply(col) for col in rows.T], axis=1)
        return cols.reshape(self.dim)

    # -- materialization ------------------------------------------------

    def matrix(self, force=False):
        """Dense operator on signal values."""
        if self.dim > MATERIALIZE_LIMIT and not force:
            raise MemoryError(
                f"refusing to materialize a {self.dim}x{self.dim} operator; "
                "pass force=True to override"
            )
        if self._diag is not None:
            return np.diag(self._diag.astype(float))
        if self._matrix is not None:
            return self._matrix
        if self._basis is not None:
            q = self._basis
            return q @ (q.conj().T * self.weights[None, :])
        pv, pt = self._factors
        return np.kron(pv.matrix(force=force), pt.matrix(force=force))

    def symmetrized(self, force=False):
        """W^{1/2} P W^{-1/2}: Hermitian matrix with the same spectrum."""
        sw = np.sqrt(self.weights)
        if self._diag is not None:
            return np.diag(self._diag.astype(float))
        m = self.matrix(force=force)
        s = sw[:, None] * m / sw[None, :]
        return 0.5 * (s + s.conj().T)

    def orthobasis(self, threshold=0.5):
        """Weighted-orthonormal basis of the image.

        For mask/basis projectors this is exact; for a dense near-projector
        the image is read off as the eigenvectors with eigenvalue above
        `threshold`.
        """
        sw = np.sqrt(self.weights)
        if self._basis is not None:
            return self._basis
        if self._diag is not None:
            idx = np.nonzero(self._diag > threshold)[0]
            q = np.zeros((self.dim, idx.size))
            q[idx, np.arange(idx.size)] = 1.0 / sw[idx]
            return q
        if self._factors is not None:
            pv, pt = self._factors
            return np.kron(pv.orthobasis(threshold), pt.orthobasis(threshold))
        vals, vecs = np.linalg.eigh(self.symmetrized())
        keep = vals > threshold
        return vecs[:, keep] / sw[:, None]

    def rounded(self, threshold=0.5):
        """Exactly idempotent projector from eigenvalue rounding.

        Eigenvalues of the symmetrized operator at or above `threshold`
        become 1, the rest 0; eigenvectors are kept. Identity for operators
        that are already exact projectors.
        """
        q = self.orthobasis(threshold)
        return Projector(kind=self.kind, weights=self.weights, basis=q,
                         idempotency_tol=1e-10)

    def complement(self):
        """I - P, same representation family where cheap."""
        if self._diag is not None:
            return Projector(kind="complement", weights=self.weights,
                             diag=1.0 - self._diag,
                             idempotency_tol=self.idempotency_tol)
        m = np.eye(self.dim) - self.matrix()
        return Projector(kind="complement", weights=self.weights, matrix=m,
                         idempotency_tol=self.idempotency_tol)

    # -- diagnostics ----------------------------------------------------

    def rank(self):
        if self._diag is not None:
            return int(np.count_nonzero(self._diag))
        if self._basis is not None:
            return self._basis.shape[1]
        if self._factors is not None:
            return self._factors[0].rank() * self._factors[1].rank()
        return int(round(float(np.real(np.trace(self._matrix)))))

    def trace(self):
        if self._diag is not None:
            return float(self._diag.sum())
        if self._factors is not None:
            return self._factors[0].trace() * self._factors[1].trace()
        if self._basis is not None:
            return float(self._basis.shape[1])
        return float(np.real(np.trace(self._matrix)))

    def idempotency_residual(self):
        """Spectral norm of P^2 - P."""
        if self._diag is not None:
            d = self._diag
            return float(np.abs(d * d - d).max())
        if self._basis is not None:
            q = self._basis
            gram = q.conj().T @ (self.weights[:, None] * q)
            return float(np.abs(gram - np.eye(q.shape[1])).max())
        s = self.symmetrized()
        vals = np.linalg.eigvalsh(s @ s - s)
        return float(np.abs(vals).max())

    def symmetry_residual(self):
        """Relative asymmetry of W P under conjugate transposition."""
        if self._diag is not None:
            return 0.0
        wp = self.weights[:, None] * self.matrix()
        denom = max(1.0, float(np.abs(wp).max()))
        return float(np.abs(wp - wp.conj().T).max() / denom)

    def eigenvalue_range(self):
        s = self.symmetrized()
        vals = np.linalg.eigvalsh(s)
        return float(vals.min()), float(vals.max())


# -- factor-space constructors -----------------------------------------


def vertex_mask(n_vertices, subset) -> Projector:
    """Diagonal 0/1 projector onto a vertex subset (unweighted factor space)."""
    subset = np.asarray(sorted(set(int(v) for v in np.atleast_1d(subset))))
    if subset.size == 0:
        raise EmptySubset("vertex subset is empty")
    if subset.min() < 0 or subset.max() >= n_vertices:
        raise DimensionMismatch("vertex index out of range")
    d = np.zeros(n_vertices)
    d[subset] = 1.0
    return Projector(kind="vertex_mask", weights=np.ones(n_vertices), diag=d)


def spectral_mask(basis, subset) -> Projector:
    """Projector U Sigma U^T onto the span of selected Laplacian eigenvectors."""
    subset = np.asarray(sorted(set(int(k) for k in np.atleast_1d(subset))))
    if subset.size == 0:
        raise EmptySubset("spectral index subset is empty")
    n = basis.n_vertices
    if subset.min() < 0 or subset.max() >= n:
        raise DimensionMismatch("spectral index out of range")
    q = basis.eigenvectors[:, subset]
    return Projector(kind="spectral_mask", weights=np.ones(n), basis=q)


def product_projector(vertex_part: Projector, time_part: Projector) -> Projector:
    """Kronecker product acting on the joint space (vertex-major ordering)."""
    w = np.kron(vertex_part.weights, time_part.weights)
    if vertex_part._diag is not None and time_part._diag is not None:
        return Projector(kind="product", weights=w,
                         diag=np.kron(vertex_part._diag, time_part._diag))
    return Projector(kind="product", weights=w,
                     factors=(vertex_part, time_part),
                     idempotency_tol=max(vertex_part.idempotency_tol,
                                         time_part.idempotency_tol))


# -- spectral queries ----------------------------------------------------


def _same_projector(p, q):
    if p is q:
        return True
    if p.dim != q.dim or not np.allclose(p.weights, q.weights):
        return False
    for a, b in ((p._diag, q._diag), (p._basis, q._basis)):
        if a is not None and b is not None:
            return a.shape == b.shape and bool(np.array_equal(a, b))
    if p._factors is not None and q._factors is not None:
        return all(_same_projector(a, b) for a, b in zip(p._factors, q._factors))
    if p.dim <= MATERIALIZE_LIMIT:
        return bool(np.allclose(p.matrix(), q.matrix(), atol=1e-14))
    return False


def _check_composition(composition):
    ops = list(composition)
    if not ops:
        raise ValueError("empty composition")
    if len(ops) % 2 == 0:
        raise ValueError("composition must have odd length (sandwich form)")
    for i in range(len(ops) // 2):
        if not _same_projector(ops[i], ops[-1 - i]):
            raise ValueError("composition must be a palindrome P Q P")
    dim = ops[0].dim
    for op in ops:
        if op.dim != dim:
            raise DimensionMismatch("composition operators live on different spaces")
        if not np.allclose(op.weights, ops[0].weights):
            raise DimensionMismatch("composition operators carry different weights")
    return ops


def lambda_max(composition, tol=1e-10, max_iter=10000, seed=0):
    """Leading eigenpair of a symmetric sandwich composition P Q P.

    Dense decomposition for joint dimension <= DENSE_EIG_LIMIT, power
    iteration beyond. The eigenvector is returned in the signal-values
    domain (unit weighted norm).
    """
    ops = _check_composition(composition)
    dim = ops[0].dim
    sw = np.sqrt(ops[0].weights)
    if dim <= DENSE_EIG_LIMIT:
        s = ops[0].symmetrized()
        for op in ops[1:]:
            s = s @ op.symmetrized()
        s = 0.5 * (s + s.conj().T)
        vals, vecs = eigh_desc(s)
        val, u = float(vals[0]), vecs[:, 0]
    else:
        def matvec(x):
            y = x
            for op in reversed(ops):
                y = sw * op.apply(y / sw)
            return y

        val, u = power_iteration(matvec, dim, tol=tol, max_iter=max_iter,
                                 seed=seed)
    return val, u / sw


# -- Gaussian heat-kernel subspace ---------------------------------------


@dataclass(frozen=True)
class GaussianSubspace:
    """Separable heat-kernel atoms centered on (vertex, time) pairs."""

    vertex_scale: float
    time_scale: float
    centers: tuple

    def __post_init__(self):
        if self.vertex_scale <= 0 or self.time_scale <= 0:
            raise ValueError("diffusion scales must be strictly positive")
        if not self.centers:
            raise ValueError("at least one center is required")
        object.__setattr__(self, "centers", tuple(
            (int(v), float(t)) for v, t in self.centers))


def heat_atom(basis, axis, center, vertex_scale, time_scale):
    """Joint atom (e^{-tau_v L} delta_v0) x Gaussian(t0, tau_t), grid samples.

    Returned unnormalized, shape (N*M,), vertex-major.
    """
    v0, t0 = center
    lam = basis.eigenvalues
    u = basis.eigenvectors
    hv = u @ (np.exp(-vertex_scale * lam) * u[v0])
    gt = np.exp(-((axis.points - t0) ** 2) / (4.0 * time_scale))
    gt = gt / np.sqrt(4.0 * np.pi * time_scale)
    return np.kron(hv, gt)


def heat_subspace_projector(basis, axis, gs: GaussianSubspace,
                            gram_floor=1e-10) -> Projector:
    """Orthogonal projector onto the span of Gaussian heat-kernel atoms.

    Atoms are renormalized on the grid, then orthonormalized through the
    Gram inverse square root (symmetric treatment, reproducible span).
    Raises RankDeficient when the Gram spectrum dips below `gram_floor`.
    """
    n = basis.n_vertices
    w = np.kron(np.ones(n), axis.weights)
    cols = []
    for center in gs.centers:
        a = heat_atom(basis, axis, center, gs.vertex_scale, gs.time_scale)
        nrm = weighted_norm(a, w)
        if nrm == 0.0:
            raise RankDeficient(f"atom at {center} has zero norm on the grid")
        cols.append(a / nrm)
    a = np.stack(cols, axis=1)
    gram = a.T @ (w[:, None] * a)
    vals, vecs = np.linalg.eigh(gram)
    if vals.min() < gram_floor:
        raise RankDeficient(
            f"Gram eigenvalue {vals.min():.3e} below floor {gram_floor:.1e}"
        )
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    q = a @ inv_sqrt
    return Projector(kind="subspace", weights=w, basis=q)


def spread(f, p_vt: Projector, p_sf: Projector):
    """Energy fractions (alpha, beta) of f inside two subspaces."""
    f = np.asarray(f)
    w = p_vt.weights
    nf = weighted_norm(f, w)
    if nf == 0.0:
        raise ZeroSignal("spread of the zero signal is undefined")
    alpha = weighted_norm(p_vt.apply(f), w) / nf
    beta = weighted_norm(p_sf.apply(f), p_sf.weights) / nf
    return float(alpha), float(beta)
