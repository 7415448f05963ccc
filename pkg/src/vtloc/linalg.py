"""Small shared linear-algebra helpers for weighted inner-product spaces."""

import numpy as np

from .errors import NoConvergence


def weighted_inner(f, g, weights):
    """Inner product sum_i w_i conj(f_i) g_i."""
    return np.sum(weights * np.conj(f) * g)


def weighted_norm(f, weights):
    return float(np.sqrt(np.real(weighted_inner(f, f, weights))))


def eigh_desc(matrix):
    """Hermitian eigendecomposition with eigenvalues sorted descending."""
    vals, vecs = np.linalg.eigh(matrix)
    return vals[::-1], vecs[:, ::-1]


def sign_normalize_columns(matrix, tol=1e-12):
    """Flip column signs so the first entry larger than `tol` in magnitude is positive.

    Gives a deterministic sign convention for eigenvector bases across runs
    and LAPACK backends.
    """
    out = matrix.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.nonzero(np.abs(col) > tol)[0]
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def power_iteration(matvec, dim, tol=1e-10, max_iter=10000, seed=0):
    """Leading eigenpair of a Hermitian PSD operator given as a matvec.

    Converges on the residual test ||A x - lam x|| <= tol * max(|lam|, 1),
    or on machine-level stagnation of the Rayleigh quotient (five
    consecutive increments below tol/100), which handles nearly degenerate
    top clusters where the residual floors at the cluster width while the
    eigenvalue itself is already accurate. Raises NoConvergence when the
    iteration cap is hit without meeting either test.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam_prev = None
    stagnant = 0
    for _ in range(max_iter):
        y = matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # x in the null space; the operator may be zero
            return 0.0, x
        lam = float(np.real(np.vdot(x, y)))
        x = y / ny
        scale = max(abs(lam), 1.0)
        res = np.linalg.norm(matvec(x) - lam * x)
        if res <= tol * scale:
            return lam, x
        if lam_prev is not None and abs(lam - lam_prev) <= 0.01 * tol * scale:
            stagnant += 1
            if stagnant >= 5:
                return lam, x
        else:
            stagnant = 0
        lam_prev = lam
    raise NoConvergence(f"power iteration stalled after {max_iter} iterations")


def polar_factor(matrix):
    """Orthogonal polar factor of a square matrix via SVD.

    Returns (Q, min_singular_value); the caller decides whether a tiny
    singular value invalidates the retraction.
    """
    u, s, vt = np.linalg.svd(matrix)
    return u @ vt, float(s.min())
