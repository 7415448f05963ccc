"""Joint energy-concentrated dictionary learning and reconstruction.

Learns the parameters (vertex subset, interval center, interval length) of
a product dictionary from scattered noisy samples by alternating greedy
vertex selection, an L1-regularized coefficient fit, and finite-difference
gradient steps on the interval parameters; reconstructs held-out samples
with the learned dictionary and reports the relative square error.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .dictionaries import Dictionary, product_dictionary
from .errors import InsufficientData, ZeroValidationEnergy
from .graphs import SpectralBasis
from .projectors import lambda_max
from .selection import greedy_vertex_subset
from .timegrid import FrequencyBand, TimeAxis, TimeInterval, band_projector, time_limit

ROLES = ("train", "test", "validation")


@dataclass(frozen=True)
class SampleSet:
    """Scattered (vertex, time, value) observations with a dataset role."""

    vertices: np.ndarray
    times: np.ndarray
    values: np.ndarray
    role: str = "train"
    noise_variance: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=int)
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if not (v.shape == t.shape == y.shape) or v.ndim != 1:
            raise ValueError("vertices, times, values must be equal-length 1-D")
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)

    def __len__(self):
        return self.vertices.size


def samples_to_csv(path, sample_sets):
    """Write sample sets to a ``vertex,time,value,role`` CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "time", "value", "role"])
        for ss in sample_sets:
            for v, t, y in zip(ss.vertices, ss.times, ss.values):
                writer.writerow([v, repr(float(t)), repr(float(y)), ss.role])


def samples_from_csv(path):
    """Read a sample CSV back into one SampleSet per role present."""
    buckets = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            buckets.setdefault(row["role"], []).append(
                (int(row["vertex"]), float(row["time"]), float(row["value"])))
    out = {}
    for role, rows in buckets.items():
        v, t, y = zip(*rows)
        out[role] = SampleSet(vertices=np.array(v), times=np.array(t),
                              values=np.array(y), role=role)
    return out


# -- priors ---------------------------------------------------------------


@dataclass(frozen=True)
class SpectralPrior:
    """Spectral index set and frequency band with their energy fractions."""

    lamset: tuple
    band: FrequencyBand
    beta_lam: float
    beta_om: float

    def __post_init__(self):
        if not (0.0 < self.beta_lam <= 1.0 and 0.0 < self.beta_om <= 1.0):
            raise ValueError("energy fractions must lie in (0, 1]")
        object.__setattr__(self, "lamset",
                           tuple(sorted(int(k) for k in self.lamset)))


def grid_samples(samples: SampleSet, n_vertices, axis: TimeAxis):
    """Scatter samples onto the grid (cell means, zeros where unobserved)."""
    sums = np.zeros((n_vertices, axis.n_points))
    counts = np.zeros((n_vertices, axis.n_points))
    idx = np.clip(np.round((samples.times - axis.points[0]) / axis.dt).astype(int),
                  0, axis.n_points - 1)
    np.add.at(sums, (samples.vertices, idx), samples.values)
    np.add.at(counts, (samples.vertices, idx), 1.0)
    with np.errstate(invalid="ignore"):
        grid = np.where(counts > 0, sums / np.maximum(counts, 1.0), 0.0)
    return grid


def estimate_priors(samples: SampleSet, basis: SpectralBasis, axis: TimeAxis,
                    beta_lam, beta_om, n_freq=512) -> SpectralPrior:
    """Smallest spectral index set and symmetric band holding the requested
    cumulative energy fractions of the (zero-filled) gridded observations.

    Zero-filling missing entries biases the estimate toward broader
    supports; callers with dense observations are unaffected.
    """
    grid = grid_samples(samples, basis.n_vertices, axis)
    if not np.any(grid):
        raise InsufficientData("all sample values are zero")
    ghat = basis.eigenvectors.T @ grid
    energy_k = np.sum(axis.weights * ghat * ghat, axis=1)
    order = np.argsort(-energy_k, kind="stable")
    cum = np.cumsum(energy_k[order])
    take = int(np.searchsorted(cum, beta_lam * cum[-1] - 1e-12)) + 1
    lamset = tuple(sorted(int(k) for k in order[:take]))

    omegas = np.linspace(0.0, 0.99 * axis.nyquist, n_freq)
    kernel = np.exp(-1j * np.outer(axis.points, omegas))
    coeff = (axis.weights[:, None] * kernel).T @ ghat.T  # (n_freq, N)
    power = (np.abs(coeff) ** 2).sum(axis=1)
    sided = power * np.where(omegas > 0, 2.0, 1.0)
    cum_p = np.cumsum(sided)
    j = int(np.searchsorted(cum_p, beta_om * cum_p[-1] - 1e-12))
    half_width = float(omegas[max(j, 1)])
    return SpectralPrior(lamset=lamset, band=FrequencyBand(0.0, half_width),
                         beta_lam=float(beta_lam), beta_om=float(beta_om))


def time_band_concentration(axis: TimeAxis, interval: TimeInterval,
                            band: FrequencyBand) -> float:
    """Largest eigenvalue of the band/interval/band sandwich (exact band)."""
    po = band_projector(axis, band)
    pt = time_limit(axis, interval)
    return lambda_max([po, pt, po])[0]


def greedy_vertex_selection(prior: SpectralPrior, interval: TimeInterval,
                            basis: SpectralBasis, axis: TimeAxis):
    """Vertex subset of size rank(spectral mask), greedily maximizing the
    concentration score for the given interval; returns selection order."""
    lam_time = time_band_concentration(axis, interval, prior.band)
    chosen, _ = greedy_vertex_subset(
        basis, prior.lamset, len(prior.lamset), lam_time=lam_time,
        beta_product=prior.beta_lam * prior.beta_om)
    return chosen


# -- sparse solver ---------------------------------------------------------


@dataclass
class LassoResult:
    coefficients: np.ndarray
    objective: float
    n_iter: int
    converged: bool


def _soft(x, thr):
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def kkt_violation(y, design, mu, x):
    """Largest violation of the L1 subgradient optimality conditions."""
    corr = design.T @ (design @ x - y)
    zeros = np.abs(x) < 1e-12
    worst = 0.0
    if zeros.any():
        worst = max(worst, float(np.maximum(
            np.abs(corr[zeros]) - 0.5 * mu, 0.0).max()))
    active = ~zeros
    if active.any():
        worst = max(worst, float(np.abs(
            corr[active] + 0.5 * mu * np.sign(x[active])).max()))
    return worst


def lasso(y, design, mu, x0=None, tol=1e-8, max_iter=5000,
          kkt_tol=1e-6) -> LassoResult:
    """Minimize ||y - D x||^2 + mu ||x||_1 by accelerated proximal gradient.

    Step size is the reciprocal of the largest squared singular value of
    the design matrix. Convergence requires both a relative objective
    change below `tol` and the subgradient optimality conditions within
    `kkt_tol` (the objective can flatten well before optimality). When the
    iteration cap is hit the best iterate seen is returned with
    `converged=False`. A warm start never yields a worse objective than
    its starting point.
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(design, dtype=float)
    n_atoms = d.shape[1]
    lip = float(np.linalg.norm(d, 2)) ** 2
    lip = max(lip, 1e-15)
    x = np.zeros(n_atoms) if x0 is None else np.asarray(x0, dtype=float).copy()

    def objective(v):
        r = y - d @ v
        return float(r @ r + mu * np.abs(v).sum())

    best_x, best_obj = x.copy(), objective(x)
    z = x.copy()
    t_acc = 1.0
    prev_obj = best_obj
    converged = False
    it = 0
    scale = max(1.0, float(np.abs(d.T @ y).max()))
    for it in range(1, max_iter + 1):
        grad = d.T @ (d @ z - y)
        x_new = _soft(z - grad / lip, 0.5 * mu / lip)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        z = x_new + ((t_acc - 1.0) / t_next) * (x_new - x)
        x, t_acc = x_new, t_next
        obj = objective(x)
        if obj < best_obj:
            best_obj, best_x = obj, x.copy()
        if abs(obj - prev_obj) <= tol * max(1.0, abs(obj)):
            if kkt_violation(y, d, mu, best_x) <= kkt_tol * scale:
                converged = True
                break
        prev_obj = obj
    return LassoResult(coefficients=best_x, objective=best_obj, n_iter=it,
                       converged=converged)


# -- alternating dictionary learning ---------------------------------------


@dataclass
class JecdConfig:
    """Knobs for the alternating learning loop."""

    eta_center: float = 1e-3
    eta_length: float = 1e-3
    tol: float = 1e-8
    max_outer: int = 200
    mu: float = None
    mu_scale: float = 0.01
    n_time_atoms: int = 4
    center0: float = None
    length0: float = None


@dataclass
class JecdState:
    """Learned dictionary parameters with the optimization trace."""

    vertex_subset: list
    center: float
    length: float
    coefficients: np.ndarray
    mu: float
    loss_history: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    converged: bool = False

    def to_dict(self):
        return {
            "vertex_subset": [int(v) for v in self.vertex_subset],
            "center": float(self.center),
            "length": float(self.length),
            "mu": float(self.mu),
            "loss_history": [float(v) for v in self.loss_history],
            "converged": bool(self.converged),
        }


def build_dictionary(basis, axis, prior: SpectralPrior, vset, center, length,
                     n_time_atoms) -> Dictionary:
    return product_dictionary(
        basis, axis, vset=vset, lamset=prior.lamset,
        interval=TimeInterval(center, length), band=prior.band,
        n_time_atoms=n_time_atoms)


def jecd_learn(train: SampleSet, prior: SpectralPrior, basis: SpectralBasis,
               axis: TimeAxis, config: JecdConfig) -> JecdState:
    """Alternate vertex re-selection, sparse coding, and interval updates.

    Per iteration: re-select the vertex subset greedily for the current
    interval (keeping the previous subset when it fits better), refit the
    coefficients, then take clamped gradient steps on the interval center
    and length using central finite differences (one grid step for the
    center, two for the length). Stops when the full objective changes by
    at most `tol` between iterations. The interval length is floored at
    two grid steps so the time mask never empties.
    """
    if len(train) == 0:
        raise ValueError("training sample set is empty")
    lo, hi = axis.span
    delta = axis.delta
    center = config.center0 if config.center0 is not None else (lo + hi) / 2.0
    length = config.length0 if config.length0 is not None else delta / 2.0
    min_length = 2.0 * axis.dt
    y = train.values
    mu = config.mu
    state = JecdState(vertex_subset=[], center=center, length=length,
                      coefficients=np.zeros(0), mu=0.0)

    def fit_value(vset, c, l, x):
        d = build_dictionary(basis, axis, prior, vset, c, l,
                             config.n_time_atoms)
        r = y - d.evaluate(train.vertices, train.times) @ x
        return float(r @ r)

    x = None
    vset = None
    prev_loss = None
    for _ in range(config.max_outer):
        interval = TimeInterval(center, length)
        cand = greedy_vertex_selection(prior, interval, basis, axis)
        cand_sets = [sorted(cand)]
        if vset is not None and sorted(vset) != sorted(cand):
            cand_sets.append(sorted(vset))
        best = None
        for cset in cand_sets:
            d = build_dictionary(basis, axis, prior, cset, center, length,
                                 config.n_time_atoms)
            design = d.evaluate(train.vertices, train.times)
            if mu is None:
                mu = config.mu_scale * float(np.abs(design.T @ y).max())
            warm = x if (x is not None and len(x) == design.shape[1]) else None
            pre = (float(np.sum((y - design @ warm) ** 2))
                   + mu * np.abs(warm).sum()) if warm is not None else float(y @ y)
            res = lasso(y, design, mu, x0=warm)
            if best is None or res.objective < best[2].objective:
                best = (cset, pre, res)
        vset, pre_obj, res = best
        x = res.coefficients
        loss = res.objective
        grad_c = (fit_value(vset, min(center + axis.dt, hi), length, x)
                  - fit_value(vset, max(center - axis.dt, lo), length, x)) / (2 * axis.dt)
        grad_l = (fit_value(vset, center, min(length + 2 * axis.dt, delta), x)
                  - fit_value(vset, center, max(length - 2 * axis.dt, min_length), x)) / (4 * axis.dt)
        center = float(np.clip(center - config.eta_center * grad_c, lo, hi))
        length = float(np.clip(length - config.eta_length * grad_l,
                               min_length, delta))
        state.step_trace.append({
            "vertex_subset": list(vset), "center": center, "length": length,
            "pre_lasso": pre_obj, "post_lasso": loss,
            "grad_center": float(grad_c), "grad_length": float(grad_l),
            "lasso_converged": res.converged,
        })
        state.loss_history.append(loss)
        if prev_loss is not None and abs(loss - prev_loss) <= config.tol:
            state.converged = True
            break
        prev_loss = loss
    state.vertex_subset = list(vset)
    state.center = center
    state.length = length
    state.coefficients = x
    state.mu = mu
    return state


# -- reconstruction ---------------------------------------------------------


@dataclass
class ReconstructionResult:
    grid_estimate: np.ndarray
    rse: float
    coefficients: np.ndarray
    converged: bool


def reconstruct(test: SampleSet, validation: SampleSet, dictionary: Dictionary,
                mu) -> ReconstructionResult:
    """Sparse-fit observed test samples, evaluate on validation points.

    The relative square error compares the dictionary estimate against the
    validation values (ground truth at held-out points).
    """
    design = dictionary.evaluate(test.vertices, test.times)
    res = lasso(test.values, design, mu)
    est_val = dictionary.evaluate(validation.vertices, validation.times) \
        @ res.coefficients
    denom = float(validation.values @ validation.values)
    if denom == 0.0:
        raise ZeroValidationEnergy("validation samples carry no energy")
    rse = float(np.sum((validation.values - est_val) ** 2) / denom)
    n, m = dictionary.n_vertices, dictionary.axis.n_points
    grid = (dictionary.grid_matrix() @ res.coefficients).reshape(n, m)
    return ReconstructionResult(grid_estimate=grid, rse=rse,
                                coefficients=res.coefficients,
                                converged=res.converged)
