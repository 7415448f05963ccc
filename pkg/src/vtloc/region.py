"""Feasible localization region, boundary achievers, and spread bounds.

The achievable pairs of vertex-time and spectral-frequency energy
fractions form a region bounded by four circular arcs whose corner
positions are leading eigenvalues of sandwich compositions of the two
projectors and their complements.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrum, DomainError, ZeroSignal
from .graphs import SpectralBasis, gft
from .projectors import (
    Projector,
    lambda_max,
    product_projector,
    spectral_mask,
    vertex_mask,
)
from .timegrid import FrequencyBand, TimeAxis, TimeInterval, band_projector, time_limit

ACOS_SLACK = 1e-9


def safe_acos(x):
    """acos with [0,1] clamping; raises DomainError beyond 1e-9 slack."""
    if x < -ACOS_SLACK or x > 1.0 + ACOS_SLACK:
        raise DomainError(f"inverse-cosine argument {x!r} outside [0, 1]")
    return math.acos(min(1.0, max(0.0, x)))


def _clip01(x):
    return min(1.0, max(0.0, x))


@dataclass
class FeasibleRegion:
    """Achievable (alpha, beta) energy-fraction pairs for a projector pair.

    `corner_eigs` holds the eight sandwich eigenvalues labelling the region
    corners ('c' prefixes mark complements, e.g. "sf.cvt.sf" is the
    spectral-frequency sandwich of the vertex-time complement).
    """

    corner_eigs: dict = field(repr=False)

    @property
    def arc_a(self):
        return self.corner_eigs["sf.vt.sf"]

    @property
    def arc_b(self):
        return self.corner_eigs["sf.cvt.sf"]

    @property
    def arc_c(self):
        return self.corner_eigs["csf.vt.csf"]

    @property
    def arc_d(self):
        return self.corner_eigs["csf.cvt.csf"]

    def boundary(self, alpha):
        """(beta_max, beta_min) admissible at the given alpha in [0, 1]."""
        alpha = _clip01(float(alpha))
        a2 = alpha * alpha
        a, b, c, d = self.arc_a, self.arc_b, self.arc_c, self.arc_d
        if a2 <= 1.0 - b:
            theta = safe_acos(math.sqrt(b)) - safe_acos(math.sqrt(1.0 - a2))
            beta_max = math.cos(max(0.0, theta))
        elif a2 <= a:
            beta_max = 1.0
        else:
            theta = safe_acos(math.sqrt(a)) - safe_acos(alpha)
            beta_max = math.cos(max(0.0, theta))
        if a2 <= 1.0 - d:
            theta = safe_acos(math.sqrt(d)) - safe_acos(math.sqrt(1.0 - a2))
            beta_min = math.sin(theta) if theta > 0 else 0.0
        elif a2 <= c:
            beta_min = 0.0
        else:
            theta = safe_acos(math.sqrt(c)) - safe_acos(alpha)
            beta_min = math.sin(theta) if theta > 0 else 0.0
        return _clip01(beta_max), _clip01(beta_min)

    def contains(self, alpha, beta, tol=1e-9):
        """Membership check via the four arc inequalities."""
        alpha = _clip01(float(alpha))
        beta = _clip01(float(beta))
        ca, cb = safe_acos(alpha), safe_acos(beta)
        cac = safe_acos(math.sqrt(_clip01(1.0 - alpha * alpha)))
        cbc = safe_acos(math.sqrt(_clip01(1.0 - beta * beta)))
        return (
            ca + cb >= safe_acos(math.sqrt(self.arc_a)) - tol
            and cac + cb >= safe_acos(math.sqrt(self.arc_b)) - tol
            and ca + cbc >= safe_acos(math.sqrt(self.arc_c)) - tol
            and cac + cbc >= safe_acos(math.sqrt(self.arc_d)) - tol
        )

    def boundary_table(self, n_points=512):
        """Rows (alpha^2, beta_max^2, beta_min^2) on a uniform alpha^2 grid."""
        rows = []
        for a2 in np.linspace(0.0, 1.0, n_points):
            bmax, bmin = self.boundary(math.sqrt(a2))
            rows.append((float(a2), bmax * bmax, bmin * bmin))
        return rows


def feasible_region(p_vt: Projector, p_sf: Projector) -> FeasibleRegion:
    """Compute all eight corner eigenvalues of the localization region.

    The vertex-time-sandwiched values are computed independently of the
    spectral-frequency-sandwiched ones even though exact projector pairs
    share their nonzero spectra; the redundancy is a cheap cross-check.
    """
    cvt = p_vt.complement()
    csf = p_sf.complement()
    corners = {}
    for sf_name, sf in (("sf", p_sf), ("csf", csf)):
        for vt_name, vt in (("vt", p_vt), ("cvt", cvt)):
            corners[f"{sf_name}.{vt_name}.{sf_name}"] = lambda_max([sf, vt, sf])[0]
            corners[f"{vt_name}.{sf_name}.{vt_name}"] = lambda_max([vt, sf, vt])[0]
    return FeasibleRegion(corner_eigs=corners)


def boundary_achiever(p_vt: Projector, p_sf: Projector, alpha: float):
    """Unit-norm signal achieving the upper-right arc at the given alpha.

    Mixes the leading sandwich eigenvector psi0 with its vertex-time
    projection so that the pair (alpha, beta) satisfies
    acos(alpha) + acos(beta) = acos(sqrt(lambda_max)).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    lam, psi0 = lambda_max([p_sf, p_vt, p_sf])
    if lam <= 1e-10 or lam >= 1.0 - 1e-10:
        raise DegenerateSpectrum(
            f"leading sandwich eigenvalue {lam!r} leaves no boundary arc"
        )
    p = math.sqrt((1.0 - alpha * alpha) / (1.0 - lam))
    q = alpha / math.sqrt(lam) - p
    return p * psi0 + q * p_vt.apply(psi0)


def perfect_localization_test(p_vt: Projector, p_sf: Projector, tol=1e-8):
    """(localizable, witness): whether some signal is fixed by both projectors."""
    lam, vec = lambda_max([p_sf, p_vt, p_sf])
    if lam >= 1.0 - tol:
        return True, vec
    return False, None


# -- product-structure bounds --------------------------------------------


@dataclass
class SpreadBounds:
    """Factor spreads and the product bounds they imply.

    Squared-spread ratios that are undefined (zero-energy slices) are NaN
    in the per-slice arrays and excluded from the min/max bounds. The
    `*_measured` fields are evaluated with the same discretization as the
    factor spreads, so the sandwich inequalities hold exactly.
    """

    alpha_sq_lo: float
    alpha_sq_hi: float
    beta_sq_lo: float
    beta_sq_hi: float
    alpha_time_sq: np.ndarray
    alpha_vertex_sq: np.ndarray
    beta_freq_sq: np.ndarray
    beta_spec_sq: np.ndarray
    alpha_sq_measured: float
    beta_sq_measured: float


def _freq_grid(axis: TimeAxis, n_freq):
    omax = axis.nyquist
    om = np.linspace(-omax, omax, n_freq)
    rho = np.full(n_freq, om[1] - om[0])
    rho[0] = rho[-1] = rho[1] / 2.0
    return om, rho


def product_spread_bounds(f, basis: SpectralBasis, axis: TimeAxis,
                          vset, interval: TimeInterval,
                          lamset, band: FrequencyBand,
                          n_freq=1025) -> SpreadBounds:
    """Per-slice factor spreads and the product bounds on the joint spreads.

    The spectral-frequency side is evaluated on a dense frequency grid
    covering the grid-representable band (the quadrature analogue of the
    continuous transform); spreads are therefore relative to that band,
    not the whole real line.
    """
    n, m = basis.n_vertices, axis.n_points
    grid = np.asarray(f, dtype=float).reshape(n, m)
    w = axis.weights
    total = float(np.sum(w * grid * grid))
    if total == 0.0:
        raise ZeroSignal("cannot evaluate spreads of the zero signal")

    vmask = np.zeros(n, dtype=bool)
    vmask[np.asarray(sorted(set(int(v) for v in vset)))] = True
    tmask = interval.mask(axis)

    # vertex-domain factor spreads
    with np.errstate(invalid="ignore", divide="ignore"):
        t_num = np.sum(w[tmask] * grid[:, tmask] ** 2, axis=1)
        t_den = np.sum(w * grid * grid, axis=1)
        alpha_time_sq = np.where(t_den > 0, t_num / t_den, np.nan)
        v_num = np.sum(grid[vmask] ** 2, axis=0)
        v_den = np.sum(grid * grid, axis=0)
        alpha_vertex_sq = np.where(v_den > 0, v_num / v_den, np.nan)

    # transform-domain factor spreads on a dense frequency grid
    ghat = basis.eigenvectors.T @ grid
    om, rho = _freq_grid(axis, n_freq)
    kernel = np.exp(-1j * np.outer(axis.points, om))
    coeff = (w[:, None] * kernel).T @ ghat.T  # (n_freq, N)
    energy = (np.abs(coeff) ** 2).T * rho[None, :]  # (N, n_freq)
    kmask = np.zeros(n, dtype=bool)
    kmask[np.asarray(sorted(set(int(k) for k in lamset)))] = True
    omask = np.abs(om - band.center) <= band.half_width + 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        f_num = energy[:, omask].sum(axis=1)
        f_den = energy.sum(axis=1)
        beta_freq_sq = np.where(f_den > 0, f_num / f_den, np.nan)
        s_num = energy[kmask].sum(axis=0)
        s_den = energy.sum(axis=0)
        beta_spec_sq = np.where(s_den > 0, s_num / s_den, np.nan)

    alpha_sq = float(np.sum(w[tmask] * grid[np.ix_(vmask, tmask)] ** 2) / total)
    e_total = float(energy.sum())
    beta_sq = float(energy[np.ix_(kmask, omask)].sum() / e_total)

    def _minmax(arr):
        vals = arr[~np.isnan(arr)]
        return float(vals.min()), float(vals.max())

    at_lo, at_hi = _minmax(alpha_time_sq)
    av_lo, av_hi = _minmax(alpha_vertex_sq)
    bf_lo, bf_hi = _minmax(beta_freq_sq)
    bs_lo, bs_hi = _minmax(beta_spec_sq)
    return SpreadBounds(
        alpha_sq_lo=at_lo * av_lo,
        alpha_sq_hi=at_hi * av_hi,
        beta_sq_lo=bf_lo * bs_lo,
        beta_sq_hi=bf_hi * bs_hi,
        alpha_time_sq=alpha_time_sq,
        alpha_vertex_sq=alpha_vertex_sq,
        beta_freq_sq=beta_freq_sq,
        beta_spec_sq=beta_spec_sq,
        alpha_sq_measured=alpha_sq,
        beta_sq_measured=beta_sq,
    )


# -- factor concentration bounds on the joint spread ----------------------


@dataclass
class AlphaSpreadBounds:
    """Scalar bounds on the joint-support spread from factor eigenvalues."""

    upper_concentrated: float
    upper_complement: float
    lower_concentrated: float
    lower_complement: float
    factor_eigs: dict = field(repr=False)

    @property
    def upper(self):
        return min(self.upper_concentrated, self.upper_complement)

    @property
    def lower(self):
        return max(self.lower_concentrated, self.lower_complement)

    def beta_sigma_upper(self, alpha_v_min, alpha_t_min):
        """Matching upper bound on the spectral-frequency spread, given the
        minimal vertex and time factor spreads of the signal."""
        lam = self.factor_eigs["lam.v.lam"] * self.factor_eigs["om.t.om"]
        theta = safe_acos(math.sqrt(lam)) - safe_acos(alpha_v_min * alpha_t_min)
        return math.cos(max(0.0, theta))


def factor_sandwich_eigs(basis: SpectralBasis, axis: TimeAxis, lamset, band,
                         vset, interval):
    """All eight factor sandwich eigenvalues (masks and their complements).

    The frequency side uses the rounded (exactly idempotent) band
    projector so the complement algebra is exact.
    """
    n = basis.n_vertices
    pv = vertex_mask(n, vset)
    pl = spectral_mask(basis, lamset)
    pt = time_limit(axis, interval)
    po = band_projector(axis, band)
    out = {}
    for l_name, l_op in (("lam", pl), ("clam", pl.complement())):
        for v_name, v_op in (("v", pv), ("cv", pv.complement())):
            out[f"{l_name}.{v_name}.{l_name}"] = lambda_max([l_op, v_op, l_op])[0]
    for o_name, o_op in (("om", po), ("com", po.complement())):
        for t_name, t_op in (("t", pt), ("ct", pt.complement())):
            out[f"{o_name}.{t_name}.{o_name}"] = lambda_max([o_op, t_op, o_op])[0]
    return out


def alpha_spread_bounds(basis: SpectralBasis, axis: TimeAxis, lamset,
                        band: FrequencyBand, vset, interval: TimeInterval,
                        beta_lam_min, beta_lam_max,
                        beta_om_min, beta_om_max) -> AlphaSpreadBounds:
    """Upper/lower bounds on the joint-support spread alpha.

    Combines the factor sandwich eigenvalues with prescribed extreme
    spectral/frequency factor spreads. The sin-form lower bounds are
    clamped at zero when their angle goes negative, and upper-bound angles
    are clamped at zero (the bound saturates at 1 past its corner).
    """
    eigs = factor_sandwich_eigs(basis, axis, lamset, band, vset, interval)
    in_min = safe_acos(beta_lam_min * beta_om_min)
    out_max = safe_acos(math.sqrt(_clip01(
        1.0 - (beta_lam_max * beta_om_max) ** 2)))

    def arc_cos(lam_v, lam_t, shift):
        theta = safe_acos(math.sqrt(_clip01(lam_v * lam_t))) - shift
        return math.cos(max(0.0, theta))

    def arc_sin(lam_v, lam_t, shift):
        theta = safe_acos(math.sqrt(_clip01(lam_v * lam_t))) - shift
        return max(0.0, math.sin(theta))

    return AlphaSpreadBounds(
        upper_concentrated=arc_cos(eigs["lam.v.lam"], eigs["om.t.om"], in_min),
        upper_complement=arc_cos(eigs["clam.v.clam"], eigs["com.t.com"], out_max),
        lower_concentrated=arc_sin(eigs["lam.cv.lam"], eigs["om.ct.om"], in_min),
        lower_complement=arc_sin(eigs["clam.cv.clam"], eigs["com.ct.com"], out_max),
        factor_eigs=eigs,
    )


def support_projectors(basis: SpectralBasis, axis: TimeAxis, vset, interval,
                       lamset, band):
    """Joint product projectors (support mask, spectral-frequency mask)."""
    n = basis.n_vertices
    p_s = product_projector(vertex_mask(n, vset), time_limit(axis, interval))
    p_sigma = product_projector(spectral_mask(basis, lamset),
                                band_projector(axis, band))
    return p_s, p_sigma
