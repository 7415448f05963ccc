"""Time-axis discretization, time/frequency limiting, and prolate bases.

The continuous time axis is represented by a uniform grid with trapezoid
quadrature weights. Frequency limiting uses the sinc integral kernel
rather than DFT masking, so no periodicity is imposed; the price is that
the discretized band operator is only approximately idempotent (it is the
compression of the true projector to the grid window). Where exact
projector algebra is needed, `band_projector` rounds its eigenvalues.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptySupport, NyquistViolation, RankExceeded
from .linalg import eigh_desc
from .projectors import Projector

BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class TimeAxis:
    """Strictly increasing grid with positive quadrature weights."""

    points: np.ndarray
    weights: np.ndarray
    span: tuple

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("need at least two grid points")
        if np.any(np.diff(p) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        a, b = self.span
        if p[0] < a - BOUNDARY_SLACK or p[-1] > b + BOUNDARY_SLACK:
            raise ValueError("grid points must lie inside the span")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "span", (float(a), float(b)))

    @classmethod
    def uniform(cls, start, stop, n_points):
        """Uniform grid over [start, stop] with trapezoid weights."""
        t = np.linspace(start, stop, n_points)
        dt = t[1] - t[0]
        w = np.full(n_points, dt)
        w[0] = w[-1] = dt / 2.0
        return cls(points=t, weights=w, span=(start, stop))

    @property
    def n_points(self):
        return self.points.size

    @property
    def delta(self):
        return self.span[1] - self.span[0]

    @property
    def dt(self):
        return float(self.points[1] - self.points[0])

    @property
    def nyquist(self):
        """Largest angular frequency representable on the grid, pi/dt."""
        return np.pi / self.dt


@dataclass(frozen=True)
class TimeInterval:
    """Interval [center - length/2, center + length/2], clamped to the span."""

    center: float
    length: float

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("interval length must be nonnegative")

    def endpoints(self, axis: TimeAxis):
        a, b = axis.span
        lo = max(a, self.center - self.length / 2.0)
        hi = min(b, self.center + self.length / 2.0)
        return lo, hi

    def mask(self, axis: TimeAxis):
        """Boolean grid mask; boundary points count as inside (1e-12 slack)."""
        lo, hi = self.endpoints(axis)
        t = axis.points
        return (t >= lo - BOUNDARY_SLACK) & (t <= hi + BOUNDARY_SLACK)


@dataclass(frozen=True)
class FrequencyBand:
    """Angular-frequency band [center - half_width, center + half_width]."""

    center: float
    half_width: float

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("band half-width must be strictly positive")


def time_limit(axis: TimeAxis, interval: TimeInterval) -> Projector:
    """Diagonal 0/1 mask onto grid points inside the interval."""
    m = interval.mask(axis)
    if not m.any():
        raise EmptySupport(
            f"no grid point falls inside [{interval.endpoints(axis)[0]:g}, "
            f"{interval.endpoints(axis)[1]:g}]"
        )
    return Projector(kind="time_mask", weights=axis.weights,
                     diag=m.astype(float))


def _band_kernel(points, band: FrequencyBand):
    d = points[:, None] - points[None, :]
    dd = np.where(d == 0.0, 1.0, d)
    k = np.where(d == 0.0, band.half_width / np.pi,
                 np.sin(band.half_width * dd) / (np.pi * dd))
    if band.center != 0.0:
        k = np.exp(1j * band.center * d) * k
    return k


def band_limit(axis: TimeAxis, band: FrequencyBand,
               idempotency_tol=1e-3) -> Projector:
    """Frequency-limiting operator from the sinc kernel with quadrature weights.

    The kernel is e^{i w_c (t-s)} sin(W(t-s)) / (pi (t-s)) (real sinc when
    the band is centered at zero). On the finite grid this is the
    compression of the continuous projector, so idempotency holds only
    approximately; `idempotency_tol` records the bound the caller wants to
    work with. Instances whose band is narrow relative to the span exhibit
    transition eigenvalues, where ||P^2 - P|| can reach ~1/4; use
    `band_projector` when exact projector algebra is required.
    """
    if band.half_width >= axis.nyquist:
        raise NyquistViolation(
            f"half-width {band.half_width:g} >= Nyquist rate {axis.nyquist:g}"
        )
    k = _band_kernel(axis.points, band)
    return Projector(kind="frequency_band", weights=axis.weights,
                     matrix=k * axis.weights[None, :],
                     idempotency_tol=idempotency_tol)


def band_projector(axis: TimeAxis, band: FrequencyBand) -> Projector:
    """Exactly idempotent band projector via eigenvalue rounding.

    Keeps the eigenvectors of the sinc compression and rounds eigenvalues
    to {0, 1} at 1/2, yielding the projector onto the grid-representable
    band space.
    """
    return band_limit(axis, band).rounded()


@dataclass(frozen=True)
class PswfBasis:
    """Bandlimited functions maximally concentrated on a time interval.

    Columns of `functions` are orthonormal under the quadrature inner
    product; `concentrations` are the corresponding energy fractions inside
    the interval, nonincreasing and strictly below 1.
    """

    functions: np.ndarray
    concentrations: np.ndarray
    axis: TimeAxis


def pswf(axis: TimeAxis, interval: TimeInterval, band: FrequencyBand,
         count, exact_band=True) -> PswfBasis:
    """Top eigenpairs of the band/time/band sandwich, as grid functions.

    The sandwich is diagonalized in symmetrized coordinates
    (W^{1/2}-conjugation keeps it Hermitian) and eigenvectors are mapped
    back to function samples. With `exact_band` the band operator is
    rounded to an exact projector first, which makes the returned columns
    exactly bandlimited and the concentration identities hold to machine
    precision; the raw compression leaves both only approximately true.
    """
    if count > axis.n_points:
        raise RankExceeded(f"count {count} exceeds grid size {axis.n_points}")
    bl = band_projector(axis, band) if exact_band else band_limit(axis, band)
    if exact_band and count > bl.rank():
        raise RankExceeded(
            f"count {count} exceeds band space rank {bl.rank()}"
        )
    d = time_limit(axis, interval)
    bs = bl.symmetrized()
    s = bs @ np.diag(d._diag) @ bs
    s = 0.5 * (s + s.conj().T)
    vals, vecs = eigh_desc(s)
    lam = vals[:count]
    psi = vecs[:, :count] / np.sqrt(axis.weights)[:, None]
    if np.iscomplexobj(psi) and np.abs(psi.imag).max() < 1e-12:
        psi = psi.real
    return PswfBasis(functions=psi, concentrations=lam, axis=axis)
