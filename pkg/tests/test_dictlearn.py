from itertools import combinations

import numpy as np
import pytest

from conftest import random_connected_graph
from vtloc.dictlearn import (
    JecdConfig,
    SampleSet,
    SpectralPrior,
    build_dictionary,
    estimate_priors,
    greedy_vertex_selection,
    jecd_learn,
    lasso,
    reconstruct,
    samples_from_csv,
    samples_to_csv,
    time_band_concentration,
)
from vtloc.errors import InsufficientData, ZeroValidationEnergy
from vtloc.graphs import laplacian, spectral_basis
from vtloc.selection import concentration_score, subset_concentration
from vtloc.timegrid import FrequencyBand, TimeAxis, TimeInterval


def cd_lasso(y, d, mu, n_sweeps=4000, tol=1e-12):
    """Independent coordinate-descent oracle for ||y - Dx||^2 + mu ||x||_1."""
    n = d.shape[1]
    norms = (d * d).sum(axis=0)
    x = np.zeros(n)
    r = y.copy()
    for _ in range(n_sweeps):
        delta = 0.0
        for i in range(n):
            if norms[i] == 0.0:
                continue
            old = x[i]
            rho = d[:, i] @ r + norms[i] * old
            new = np.sign(rho) * max(abs(rho) - mu / 2.0, 0.0) / norms[i]
            if new != old:
                r += d[:, i] * (old - new)
                delta = max(delta, abs(new - old))
            x[i] = new
        if delta < tol:
            break
    return x


# -- sample sets -------------------------------------------------------------


def test_sample_csv_roundtrip(tmp_path, rng):
    train = SampleSet(vertices=rng.integers(0, 5, 20),
                      times=rng.uniform(0, 1, 20),
                      values=rng.standard_normal(20), role="train")
    test = SampleSet(vertices=rng.integers(0, 5, 7),
                     times=rng.uniform(0, 1, 7),
                     values=rng.standard_normal(7), role="test")
    path = tmp_path / "samples.csv"
    samples_to_csv(path, [train, test])
    loaded = samples_from_csv(path)
    assert set(loaded) == {"train", "test"}
    assert np.array_equal(loaded["train"].vertices, train.vertices)
    assert np.array_equal(loaded["train"].times, train.times)
    assert np.array_equal(loaded["train"].values, train.values)


# -- priors ------------------------------------------------------------------


@pytest.fixture
def prior_instance(rng):
    g = random_connected_graph(8, 0.5, rng)
    basis = spectral_basis(laplacian(g))
    ax = TimeAxis.uniform(0.0, 2.0, 100)
    return basis, ax


def _dense_samples(grid, ax, role="train"):
    n, m = grid.shape
    vv, tt = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    return SampleSet(vertices=vv.ravel(), times=ax.points[tt.ravel()],
                     values=grid.ravel(), role=role)


def test_priors_full_fraction_takes_all_energy(prior_instance, rng):
    basis, ax = prior_instance
    grid = np.outer(basis.eigenvectors[:, 1] + basis.eigenvectors[:, 4],
                    np.sin(3 * ax.points))
    prior = estimate_priors(_dense_samples(grid, ax), basis, ax, 1.0, 0.9)
    assert set(prior.lamset) == {1, 4}


def test_priors_single_component(prior_instance):
    basis, ax = prior_instance
    omega = 6.0
    grid = np.outer(basis.eigenvectors[:, 1], np.sin(omega * ax.points))
    prior = estimate_priors(_dense_samples(grid, ax), basis, ax, 0.95, 0.9)
    assert prior.lamset == (1,)
    assert prior.band.half_width >= omega * 0.8
    assert prior.band.center == 0.0


def test_priors_insufficient_data(prior_instance):
    basis, ax = prior_instance
    empty = SampleSet(vertices=np.array([0, 1]), times=np.array([0.1, 0.5]),
                      values=np.zeros(2))
    with pytest.raises(InsufficientData):
        estimate_priors(empty, basis, ax, 0.9, 0.9)


# -- greedy selection ---------------------------------------------------------


def test_greedy_full_budget_selects_all(prior_instance):
    basis, ax = prior_instance
    prior = SpectralPrior(lamset=range(8), band=FrequencyBand(0.0, 40.0),
                          beta_lam=0.95, beta_om=0.95)
    chosen = greedy_vertex_selection(prior, TimeInterval(1.0, 1.0), basis, ax)
    assert sorted(chosen) == list(range(8))
    assert abs(subset_concentration(basis, range(8), chosen) - 1.0) < 1e-10


def test_greedy_matches_exhaustive(rng):
    ax = TimeAxis.uniform(0.0, 1.0, 40)
    band = FrequencyBand(0.0, 30.0)
    interval = TimeInterval(0.5, 0.6)
    beta = 0.95 * 0.95
    for seed in range(10):
        g = random_connected_graph(8, 0.4, np.random.default_rng(1000 + seed))
        basis = spectral_basis(laplacian(g))
        prior = SpectralPrior(lamset=[0, 1, 2], band=band,
                              beta_lam=0.95, beta_om=0.95)
        chosen = greedy_vertex_selection(prior, interval, basis, ax)
        lam_t = time_band_concentration(ax, interval, band)
        greedy_obj = concentration_score(
            subset_concentration(basis, [0, 1, 2], chosen), lam_t, beta)
        best = max(concentration_score(
            subset_concentration(basis, [0, 1, 2], c), lam_t, beta)
            for c in combinations(range(8), 3))
        assert abs(greedy_obj - best) < 1e-10, f"seed {seed}"


def test_greedy_scores_monotone(rng):
    from vtloc.selection import greedy_vertex_subset

    ax = TimeAxis.uniform(0.0, 1.0, 30)
    for seed in range(20):
        g = random_connected_graph(10, 0.4, np.random.default_rng(2000 + seed))
        basis = spectral_basis(laplacian(g))
        _, scores = greedy_vertex_subset(basis, [0, 1, 2, 3], 4,
                                         lam_time=0.95, beta_product=0.9)
        assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))


# -- lasso ---------------------------------------------------------------------


def test_lasso_zero_penalty_orthonormal_design(rng):
    q, _ = np.linalg.qr(rng.standard_normal((40, 12)))
    y = rng.standard_normal(40)
    res = lasso(y, q, 0.0)
    assert np.abs(res.coefficients - q.T @ y).max() < 1e-6


def test_lasso_deadzone(rng):
    d = rng.standard_normal((30, 10))
    y = rng.standard_normal(30)
    mu = 2.0 * np.abs(d.T @ y).max() + 1e-9
    res = lasso(y, d, mu)
    assert np.abs(res.coefficients).max() == 0.0


def test_lasso_matches_coordinate_descent(rng):
    d = rng.standard_normal((30, 50))
    y = rng.standard_normal(30)
    mu = 0.5
    res = lasso(y, d, mu)
    x_cd = cd_lasso(y, d, mu)
    obj = lambda x: float(np.sum((y - d @ x) ** 2) + mu * np.abs(x).sum())
    assert abs(res.objective - obj(x_cd)) < 1e-6
    assert res.objective <= obj(x_cd) + 1e-6


def test_lasso_kkt_conditions(rng):
    for seed in range(20):
        local = np.random.default_rng(3000 + seed)
        d = local.standard_normal((25, 40))
        y = local.standard_normal(25)
        mu = 0.3
        res = lasso(y, d, mu, tol=1e-12, max_iter=20000)
        x = res.coefficients
        corr = d.T @ (d @ x - y)
        zeros = np.abs(x) < 1e-12
        assert np.abs(corr[zeros]).max() <= mu / 2.0 + 1e-5
        active = ~zeros
        if active.any():
            assert np.abs(corr[active] + 0.5 * mu * np.sign(x[active])).max() < 1e-4


def test_lasso_warm_start_never_worse(rng):
    d = rng.standard_normal((30, 20))
    y = rng.standard_normal(30)
    res = lasso(y, d, 0.2)
    res2 = lasso(y, d, 0.2, x0=res.coefficients, max_iter=3)
    assert res2.objective <= res.objective + 1e-12


# -- alternating learning -------------------------------------------------------


@pytest.fixture(scope="module")
def planted():
    rng = np.random.default_rng(42)
    g = random_connected_graph(12, 0.4, rng)
    basis = spectral_basis(laplacian(g))
    ax = TimeAxis.uniform(0.0, 2.0, 80)
    prior = SpectralPrior(lamset=(0, 1, 2, 3), band=FrequencyBand(0.0, 12.0),
                          beta_lam=0.95, beta_om=0.95)
    center0, length0 = 1.2, 0.8
    vset0 = sorted(greedy_vertex_selection(
        prior, TimeInterval(center0, length0), basis, ax))
    d0 = build_dictionary(basis, ax, prior, vset0, center0, length0, 4)
    x0 = np.zeros(len(d0))
    idx = rng.choice(len(d0), 5, replace=False)
    x0[idx] = rng.standard_normal(5) * 2
    y_grid = (d0.grid_matrix() @ x0).reshape(12, 80)
    mask = rng.random((12, 80)) < 0.5
    vv, tt = np.nonzero(mask)
    train = SampleSet(vertices=vv, times=ax.points[tt],
                      values=y_grid[vv, tt], role="train")
    cfg = JecdConfig(eta_center=4e-6, eta_length=4e-6, tol=1e-10,
                     max_outer=150, mu_scale=0.001, n_time_atoms=4,
                     center0=1.25, length0=0.75)
    state = jecd_learn(train, prior, basis, ax, cfg)
    return dict(rng=rng, basis=basis, ax=ax, prior=prior, y_grid=y_grid,
                center0=center0, length0=length0, state=state)


def test_planted_center_recovered(planted):
    state, ax = planted["state"], planted["ax"]
    assert abs(state.center - planted["center0"]) <= ax.dt


def test_planted_loss_small(planted):
    y_energy = float((planted["y_grid"] ** 2).sum())
    fit_part = planted["state"].step_trace[-1]["post_lasso"]
    assert fit_part <= 1e-2 * y_energy


def test_lasso_steps_never_increase_loss(planted):
    for step in planted["state"].step_trace:
        assert step["post_lasso"] <= step["pre_lasso"] + 1e-9


def test_parameters_stay_clamped(planted):
    ax = planted["ax"]
    for step in planted["state"].step_trace:
        assert 0.0 <= step["center"] <= 2.0
        assert 0.0 <= step["length"] <= 2.0


def test_length_step_clamps_at_span():
    rng = np.random.default_rng(5)
    g = random_connected_graph(6, 0.6, rng)
    basis = spectral_basis(laplacian(g))
    ax = TimeAxis.uniform(0.0, 1.0, 40)
    prior = SpectralPrior(lamset=(0, 1), band=FrequencyBand(0.0, 25.0),
                          beta_lam=0.95, beta_om=0.95)
    grid = np.outer(basis.eigenvectors[:, 0], np.sin(5 * ax.points))
    vv, tt = np.meshgrid(np.arange(6), np.arange(40), indexing="ij")
    train = SampleSet(vertices=vv.ravel(), times=ax.points[tt.ravel()],
                      values=grid.ravel())
    cfg = JecdConfig(eta_center=1e-3, eta_length=1e3, tol=0.0, max_outer=3,
                     n_time_atoms=2, center0=0.5, length0=0.9)
    state = jecd_learn(train, prior, basis, ax, cfg)
    for step in state.step_trace:
        assert 2 * ax.dt <= step["length"] <= 1.0


def test_planted_reconstruction_rse(planted):
    rng = np.random.default_rng(777)
    basis, ax, prior = planted["basis"], planted["ax"], planted["prior"]
    state, y_grid = planted["state"], planted["y_grid"]
    mask = rng.random(y_grid.shape) < 0.5
    vv, tt = np.nonzero(mask)
    test_ss = SampleSet(vertices=vv, times=ax.points[tt],
                        values=y_grid[vv, tt], role="test")
    vv2, tt2 = np.nonzero(~mask)
    val_ss = SampleSet(vertices=vv2, times=ax.points[tt2],
                       values=y_grid[vv2, tt2], role="validation")
    d = build_dictionary(basis, ax, prior, sorted(state.vertex_subset),
                         state.center, state.length, 5)
    res = reconstruct(test_ss, val_ss, d, mu=1e-10)
    assert res.rse <= 1e-4


def test_reconstruct_exact_representation(planted):
    basis, ax, prior = planted["basis"], planted["ax"], planted["prior"]
    y_grid = planted["y_grid"]
    vset0 = sorted(greedy_vertex_selection(
        prior, TimeInterval(planted["center0"], planted["length0"]), basis, ax))
    d0 = build_dictionary(basis, ax, prior, vset0, planted["center0"],
                          planted["length0"], 4)
    full = _dense_samples(y_grid, ax, role="test")
    val = _dense_samples(y_grid, ax, role="validation")
    res = reconstruct(full, val, d0, mu=1e-12)
    assert res.rse <= 1e-8


def test_reconstruct_zero_estimate_gives_unit_rse(planted):
    basis, ax, prior = planted["basis"], planted["ax"], planted["prior"]
    y_grid = planted["y_grid"]
    d0 = build_dictionary(basis, ax, prior, [0, 1], 1.0, 0.5, 2)
    full = _dense_samples(y_grid, ax, role="test")
    val = _dense_samples(y_grid, ax, role="validation")
    huge_mu = 1e12
    res = reconstruct(full, val, d0, mu=huge_mu)
    assert np.abs(res.coefficients).max() == 0.0
    assert abs(res.rse - 1.0) < 1e-12


def test_rse_scale_invariance(planted):
    basis, ax, prior = planted["basis"], planted["ax"], planted["prior"]
    y_grid = planted["y_grid"]
    d0 = build_dictionary(basis, ax, prior, [0, 1, 2, 6], 1.2, 0.8, 4)
    full = _dense_samples(y_grid, ax, role="test")
    val = _dense_samples(y_grid, ax, role="validation")
    r1 = reconstruct(full, val, d0, mu=1e-8)
    scaled_full = _dense_samples(3.0 * y_grid, ax, role="test")
    scaled_val = _dense_samples(3.0 * y_grid, ax, role="validation")
    r2 = reconstruct(scaled_full, scaled_val, d0, mu=3.0 * 3.0 * 1e-8)
    assert abs(r1.rse - r2.rse) < 1e-6


def test_reconstruct_zero_validation_energy(planted):
    basis, ax, prior = planted["basis"], planted["ax"], planted["prior"]
    d0 = build_dictionary(basis, ax, prior, [0, 1], 1.0, 0.5, 2)
    obs = SampleSet(vertices=np.array([0, 1]), times=np.array([0.5, 0.6]),
                    values=np.array([1.0, -1.0]), role="test")
    val = SampleSet(vertices=np.array([2]), times=np.array([0.7]),
                    values=np.array([0.0]), role="validation")
    with pytest.raises(ZeroValidationEnergy):
        reconstruct(obs, val, d0, mu=1e-6)
