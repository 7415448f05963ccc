"""Greedy vertex-subset selection maximizing energy concentration.

The selection score is the upper-bound arc value
cos(acos(sqrt(lam_subset * lam_time)) - acos(beta_prior)); its angle is
clamped at zero because past that corner the bound saturates at 1. The
clamp also makes the score nondecreasing in the subset, which the greedy
loop relies on.
"""

import math

import numpy as np

from .graphs import SpectralBasis
from .region import safe_acos


def concentration_score(lam_subset, lam_time=1.0, beta_product=1.0):
    theta = safe_acos(math.sqrt(min(1.0, max(0.0, lam_subset * lam_time))))
    return math.cos(max(0.0, theta - safe_acos(beta_product)))


def subset_concentration(basis: SpectralBasis, lamset, vset):
    """Largest eigenvalue of the spectral-mask/vertex-mask sandwich."""
    rows = basis.eigenvectors[np.asarray(sorted(vset))][:, np.asarray(sorted(lamset))]
    if rows.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(rows.T @ rows)[-1])


def greedy_vertex_subset(basis: SpectralBasis, lamset, count,
                         lam_time=1.0, beta_product=1.0):
    """Vertices added one at a time, each maximizing the concentration score.

    Ties go to the smallest vertex index. Returns the selection order and
    the score trace (one entry per addition, nondecreasing).
    """
    lamset = sorted(int(k) for k in lamset)
    rows = basis.eigenvectors[:, lamset]
    n = basis.n_vertices
    gram = np.zeros((len(lamset), len(lamset)))
    chosen = []
    scores = []
    for _ in range(min(count, n)):
        best_score, best_v, best_gram = -np.inf, None, None
        for v in range(n):
            if v in chosen:
                continue
            cand = gram + np.outer(rows[v], rows[v])
            lam_v = float(np.linalg.eigvalsh(cand)[-1])
            s = concentration_score(lam_v, lam_time, beta_product)
            if s > best_score + 1e-15:
                best_score, best_v, best_gram = s, v, cand
        chosen.append(best_v)
        scores.append(best_score)
        gram = best_gram
    return chosen, scores
