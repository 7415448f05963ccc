"""Vertex-time dictionaries: concentrated joint atoms and reference baselines.

Every atom is separable: a vertex vector times a continuous-time function
that can be evaluated at arbitrary timestamps. Bandlimited time factors
are stored as grid samples and interpolated with the Whittaker-Shannon
sinc kernel off-grid (exact at grid points by construction); analytic
factors (Fourier, Gabor, Morlet) evaluate their closed form. Complex
time factors are split into separate real and imaginary atoms so the
downstream solvers stay real-valued.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, RankExceeded
from .graphs import SpectralBasis
from .linalg import eigh_desc, sign_normalize_columns
from .projectors import Projector
from .selection import greedy_vertex_subset
from .timegrid import FrequencyBand, TimeAxis, TimeInterval, pswf


class SampledTimeFunction:
    """Bandlimited function known by its grid samples; sinc-interpolated off-grid."""

    def __init__(self, axis: TimeAxis, samples):
        self.axis = axis
        self.samples = np.asarray(samples, dtype=float)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pts, dt = self.axis.points, self.axis.dt
        idx = np.clip(np.round((t - pts[0]) / dt).astype(int), 0, pts.size - 1)
        on_grid = np.abs(t - pts[idx]) <= 1e-9 * max(1.0, dt)
        out = np.empty(t.shape)
        out[on_grid] = self.samples[idx[on_grid]]
        off = ~on_grid
        if off.any():
            arg = (t[off, None] - pts[None, :]) / dt
            out[off] = np.sinc(arg) @ self.samples
        return out if out.size > 1 else float(out[0])


class AnalyticTimeFunction:
    """Closed-form time factor; grid samples are cached lazily."""

    def __init__(self, fn, axis: TimeAxis):
        self.fn = fn
        self.axis = axis
        self._grid = None

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    @property
    def grid_samples(self):
        if self._grid is None:
            self._grid = np.asarray(self.fn(self.axis.points), dtype=float)
        return self._grid


def _grid_samples(time_fn):
    if isinstance(time_fn, SampledTimeFunction):
        return time_fn.samples
    return time_fn.grid_samples


@dataclass
class Atom:
    """Separable vertex-time atom with provenance metadata."""

    vertex: np.ndarray
    time: object
    meta: dict
    norm: float = 0.0

    def evaluate(self, vertices, times):
        vertices = np.asarray(vertices, dtype=int)
        tvals = np.atleast_1d(self.time(times))
        return self.vertex[vertices] * tvals

    def grid(self):
        return np.kron(self.vertex, _grid_samples(self.time))


@dataclass
class Dictionary:
    """Ordered atom collection over a fixed graph and time grid."""

    atoms: list
    n_vertices: int
    axis: TimeAxis
    manifest: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        w = self.axis.weights
        for atom in self.atoms:
            if not atom.norm:
                g = _grid_samples(atom.time)
                atom.norm = float(np.linalg.norm(atom.vertex)
                                  * np.sqrt(np.sum(w * g * g)))

    def __len__(self):
        return len(self.atoms)

    def evaluate(self, vertices, times):
        """Design matrix: rows are sample points, columns are atoms."""
        cols = [a.evaluate(vertices, times) for a in self.atoms]
        return np.stack(cols, axis=1)

    def grid_matrix(self):
        """All atoms sampled on the full vertex-major grid, one per column."""
        return np.stack([a.grid() for a in self.atoms], axis=1)

    def gram(self):
        m = self.grid_matrix()
        w = np.kron(np.ones(self.n_vertices), self.axis.weights)
        return m.T @ (w[:, None] * m)

    def to_manifest(self):
        return dict(self.manifest)


# -- concentrated joint atoms ---------------------------------------------


@dataclass
class JointAtoms:
    """Orthonormal joint-space atoms with their concentration eigenvalues."""

    vectors: np.ndarray
    concentrations: np.ndarray
    weights: np.ndarray


def slepian_atoms(p_sigma: Projector, p_vt: Projector, count) -> JointAtoms:
    """Most-concentrated orthonormal atoms inside the image of `p_sigma`.

    Eigenvectors of the sandwich restricted to the bandlimited subspace;
    for exact spectral masks the atoms are exactly bandlimited and satisfy
    the diagonal concentration identity to machine precision.
    """
    q = p_sigma.orthobasis()
    r = q.shape[1]
    if count > r:
        raise RankExceeded(f"requested {count} atoms from a rank-{r} subspace")
    w = p_sigma.weights
    wq = w[:, None] * q
    reduced = np.stack([p_vt.apply(q[:, j]) for j in range(r)], axis=1)
    m = wq.conj().T @ reduced
    m = 0.5 * (m + m.conj().T)
    vals, vecs = eigh_desc(m)
    vectors = q @ vecs[:, :count]
    if np.iscomplexobj(vectors) and np.abs(vectors.imag).max() < 1e-12:
        vectors = vectors.real
    return JointAtoms(vectors=vectors, concentrations=vals[:count], weights=w)


def vertex_concentrated_basis(basis: SpectralBasis, lamset, vset, count):
    """Bandlimited vertex vectors most concentrated on a vertex subset.

    Eigenvectors of the spectral/vertex/spectral sandwich restricted to
    the selected eigenvector span; returns (vectors N x count, eigenvalues).
    """
    lamset = sorted(int(k) for k in lamset)
    if count > len(lamset):
        raise RankExceeded(f"requested {count} atoms from rank {len(lamset)}")
    u = basis.eigenvectors[:, lamset]
    mask = np.zeros(basis.n_vertices)
    mask[np.asarray(sorted(set(int(v) for v in vset)))] = 1.0
    m = u.T @ (mask[:, None] * u)
    vals, vecs = eigh_desc(0.5 * (m + m.T))
    phi = sign_normalize_columns(u @ vecs[:, :count])
    return phi, vals[:count]


def product_dictionary(basis: SpectralBasis, axis: TimeAxis, vset, lamset,
                       interval: TimeInterval, band: FrequencyBand,
                       n_vertex_atoms=None, n_time_atoms=4) -> Dictionary:
    """Product dictionary of concentrated vertex vectors and prolate functions.

    Atoms are ordered by decreasing concentration product, ties broken by
    the lower vertex-factor index then time index.
    """
    vset = sorted(set(int(v) for v in vset))
    lamset = sorted(set(int(k) for k in lamset))
    if n_vertex_atoms is None:
        n_vertex_atoms = len(lamset)
    phi, lam_v = vertex_concentrated_basis(basis, lamset, vset, n_vertex_atoms)
    psi = pswf(axis, interval, band, n_time_atoms)
    order = sorted(
        ((k, n) for k in range(n_vertex_atoms) for n in range(n_time_atoms)),
        key=lambda kn: (-lam_v[kn[0]] * psi.concentrations[kn[1]], kn[0], kn[1]),
    )
    atoms = []
    for k, n in order:
        atoms.append(Atom(
            vertex=phi[:, k],
            time=SampledTimeFunction(axis, psi.functions[:, n]),
            meta={"kind": "product", "vertex_index": k, "time_index": n,
                  "concentration": float(lam_v[k] * psi.concentrations[n])},
        ))
    manifest = {
        "builder": "product",
        "params": {
            "vset": vset, "lamset": lamset,
            "interval": {"center": interval.center, "length": interval.length},
            "band": {"center": band.center, "half_width": band.half_width},
            "n_vertex_atoms": int(n_vertex_atoms),
            "n_time_atoms": int(n_time_atoms),
        },
    }
    return Dictionary(atoms=atoms, n_vertices=basis.n_vertices, axis=axis,
                      manifest=manifest)


# -- baselines -------------------------------------------------------------


_REQUIRED_PARAMS = {
    "jft": {"n_vertex", "n_freq"},
    "stvft": {"q_translations", "tau0", "omega0", "rho"},
    "stvwt": {"scales", "a_values", "b_values", "omega0"},
    "negup": {"lamset", "band", "ell", "beta_lam", "n_time_atoms"},
}


@dataclass(frozen=True)
class BaselineSpec:
    """Baseline dictionary family and its knobs."""

    kind: str
    params: dict

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in _REQUIRED_PARAMS:
            raise InvalidSpec(f"unknown baseline kind {self.kind!r}")
        missing = _REQUIRED_PARAMS[kind] - set(self.params)
        if missing:
            raise InvalidSpec(f"{kind} spec missing {sorted(missing)}")
        object.__setattr__(self, "kind", kind)
        for name in ("tau0", "rho", "ell"):
            if name in self.params and self.params[name] <= 0:
                raise InvalidSpec(f"{name} must be positive")
        for name in ("scales", "a_values"):
            if name in self.params and any(s <= 0 for s in self.params[name]):
                raise InvalidSpec(f"all {name} must be positive")


def itersine_window(y):
    """sin(pi/2 * cos^2(pi y)) on [-1/2, 1/2], zero outside."""
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) <= 0.5
    out = np.zeros_like(y)
    out[inside] = np.sin(0.5 * np.pi * np.cos(np.pi * y[inside]) ** 2)
    return out


def itersine_lowpass(x):
    """Decreasing kernel sin(pi/2 * cos^2(pi x / 2)) on [0, 1], zero beyond."""
    x = np.asarray(x, dtype=float)
    inside = (x >= 0) & (x <= 1.0)
    out = np.zeros_like(x)
    out[inside] = np.sin(0.5 * np.pi * np.cos(0.5 * np.pi * x[inside]) ** 2)
    return out


def _spectral_filter_atoms(basis, response):
    """Columns of U diag(response) U^T as localized vertex atoms."""
    u = basis.eigenvectors
    return u @ (response[:, None] * u.T)


def _split_complex_time(fn_real, fn_imag, axis, vertex_atoms, meta_base,
                        include_imag=True):
    atoms = []
    n = vertex_atoms.shape[1]
    for p in range(n):
        col = vertex_atoms[:, p]
        if np.abs(col).max() < 1e-14:
            continue
        atoms.append(Atom(vertex=col, time=AnalyticTimeFunction(fn_real, axis),
                          meta=dict(meta_base, vertex_center=p, part="re")))
        if include_imag:
            atoms.append(Atom(vertex=col,
                              time=AnalyticTimeFunction(fn_imag, axis),
                              meta=dict(meta_base, vertex_center=p, part="im")))
    return atoms


def _jft(basis, axis, n_vertex, n_freq):
    atoms = []
    u = basis.eigenvectors
    const = 1.0 / math.sqrt(2.0 * math.pi)
    for k in range(n_vertex):
        atoms.append(Atom(vertex=u[:, k],
                          time=AnalyticTimeFunction(
                              lambda t, c=const: np.full_like(t, c), axis),
                          meta={"kind": "jft", "vertex_index": k, "freq": 0,
                                "part": "const"}))
        for ell in range(1, n_freq + 1):
            for part, fn in (("cos", np.cos), ("sin", np.sin)):
                atoms.append(Atom(
                    vertex=u[:, k],
                    time=AnalyticTimeFunction(
                        lambda t, l=ell, f=fn: f(l * t) / math.sqrt(math.pi),
                        axis),
                    meta={"kind": "jft", "vertex_index": k, "freq": ell,
                          "part": part}))
    return atoms


def _stvft(basis, axis, q_translations, tau0, omega0, rho,
           m_values=None, n_values=None):
    lam = basis.eigenvalues
    lam_max = max(lam[-1], 1e-12)
    x = lam / lam_max
    atoms = []
    if m_values is None:
        a, b = axis.span
        m_values = range(int(np.floor(a / tau0)), int(np.ceil(b / tau0)) + 1)
    if n_values is None:
        n_values = range(0, 3)
    for q in range(1, q_translations + 1):
        response = itersine_window((x - q / q_translations)
                                   * q_translations / 2.0)
        filt = _spectral_filter_atoms(basis, response)
        for m in m_values:
            for n in n_values:
                def g_re(t, m=m, n=n):
                    env = np.exp(-((t - m * tau0) ** 2) / (2 * rho**2))
                    return env * np.cos(n * omega0 * t) / (math.sqrt(2 * math.pi) * rho)

                def g_im(t, m=m, n=n):
                    env = np.exp(-((t - m * tau0) ** 2) / (2 * rho**2))
                    return env * np.sin(n * omega0 * t) / (math.sqrt(2 * math.pi) * rho)

                atoms.extend(_split_complex_time(
                    g_re, g_im, axis, filt,
                    {"kind": "stvft", "q": q, "m": int(m), "n": int(n)},
                    include_imag=(n != 0)))
    return atoms


def _stvwt(basis, axis, scales, a_values, b_values, omega0):
    lam = basis.eigenvalues
    lam_max = max(lam[-1], 1e-12)
    x = lam / lam_max
    atoms = []
    for s in scales:
        response = itersine_lowpass(s * x)
        filt = _spectral_filter_atoms(basis, response)
        for a in a_values:
            for b in b_values:
                def w_re(t, a=a, b=b):
                    env = np.exp(-((t - b) ** 2) / (2 * a**2)) / math.sqrt(a)
                    return env * np.cos(omega0 * (t - b) / a)

                def w_im(t, a=a, b=b):
                    env = np.exp(-((t - b) ** 2) / (2 * a**2)) / math.sqrt(a)
                    return env * np.sin(omega0 * (t - b) / a)

                atoms.extend(_split_complex_time(
                    w_re, w_im, axis, filt,
                    {"kind": "stvwt", "scale": float(s), "a": float(a),
                     "b": float(b)}))
    return atoms


def _negup(basis, axis, lamset, band, ell, beta_lam, n_time_atoms):
    lamset = sorted(set(int(k) for k in lamset))
    vset, _ = greedy_vertex_subset(basis, lamset, len(lamset),
                                   lam_time=1.0, beta_product=beta_lam)
    a, b = axis.span
    interval = TimeInterval(center=(a + b) / 2.0, length=ell)
    d = product_dictionary(basis, axis, sorted(vset), lamset, interval, band,
                           n_time_atoms=n_time_atoms)
    for atom in d.atoms:
        atom.meta["kind"] = "negup"
    return d.atoms, sorted(vset)


def baseline_dictionary(spec: BaselineSpec, basis: SpectralBasis,
                        axis: TimeAxis) -> Dictionary:
    """Construct one of the four reference dictionaries."""
    p = spec.params
    extra = {}
    if spec.kind == "jft":
        atoms = _jft(basis, axis, p["n_vertex"], p["n_freq"])
    elif spec.kind == "stvft":
        atoms = _stvft(basis, axis, p["q_translations"], p["tau0"],
                       p["omega0"], p["rho"], p.get("m_values"),
                       p.get("n_values"))
    elif spec.kind == "stvwt":
        atoms = _stvwt(basis, axis, p["scales"], p["a_values"],
                       p["b_values"], p["omega0"])
    else:
        band = p["band"]
        if not isinstance(band, FrequencyBand):
            band = FrequencyBand(**band)
        atoms, vset = _negup(basis, axis, p["lamset"], band, p["ell"],
                             p["beta_lam"], p["n_time_atoms"])
        extra["selected_vset"] = [int(v) for v in vset]
    manifest = {"builder": spec.kind, "params": _manifest_params(p), **extra}
    return Dictionary(atoms=atoms, n_vertices=basis.n_vertices, axis=axis,
                      manifest=manifest)


def _manifest_params(params):
    out = {}
    for key, val in params.items():
        if isinstance(val, FrequencyBand):
            out[key] = {"center": val.center, "half_width": val.half_width}
        elif isinstance(val, (range, tuple, np.ndarray)):
            out[key] = [float(v) for v in val]
        elif isinstance(val, list):
            out[key] = [float(v) for v in val]
        else:
            out[key] = val
    return out


def dictionary_from_manifest(manifest, basis: SpectralBasis,
                             axis: TimeAxis) -> Dictionary:
    """Rebuild a dictionary from its JSON manifest (parameters only)."""
    builder = manifest["builder"]
    params = dict(manifest["params"])
    if builder == "product":
        return product_dictionary(
            basis, axis,
            vset=[int(v) for v in params["vset"]],
            lamset=[int(k) for k in params["lamset"]],
            interval=TimeInterval(**params["interval"]),
            band=FrequencyBand(**params["band"]),
            n_vertex_atoms=int(params["n_vertex_atoms"]),
            n_time_atoms=int(params["n_time_atoms"]),
        )
    if builder == "negup":
        params["lamset"] = [int(k) for k in params["lamset"]]
        params["n_time_atoms"] = int(params["n_time_atoms"])
    return baseline_dictionary(BaselineSpec(kind=builder, params=params),
                               basis, axis)
