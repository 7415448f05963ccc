from itertools import combinations

import numpy as np
import pytest

from conftest import random_connected_graph
from vtloc.dictionaries import (
    Atom,
    BaselineSpec,
    SampledTimeFunction,
    baseline_dictionary,
    dictionary_from_manifest,
    itersine_window,
    product_dictionary,
    slepian_atoms,
    vertex_concentrated_basis,
)
from vtloc.errors import InvalidSpec, RankExceeded
from vtloc.graphs import laplacian, spectral_basis
from vtloc.projectors import lambda_max, product_projector, spectral_mask, vertex_mask
from vtloc.region import support_projectors
from vtloc.selection import concentration_score, subset_concentration
from vtloc.timegrid import FrequencyBand, TimeAxis, TimeInterval, pswf, time_limit


@pytest.fixture
def instance(rng):
    g = random_connected_graph(4, 0.7, rng)
    basis = spectral_basis(laplacian(g))
    ax = TimeAxis.uniform(0.0, 1.0, 24)
    return basis, ax


def test_slepian_atoms_containment_gives_unit_eigenvalues(instance):
    basis, ax = instance
    p_s, p_sigma = support_projectors(
        basis, ax, vset=range(4), interval=TimeInterval(0.5, 1.0),
        lamset=[0, 1], band=FrequencyBand(0.0, 30.0))
    atoms = slepian_atoms(p_sigma, p_s, 4)
    assert np.abs(atoms.concentrations - 1.0).max() < 1e-8


def test_slepian_atoms_match_dense_oracle(instance):
    basis, ax = instance
    p_s, p_sigma = support_projectors(
        basis, ax, vset=[0, 2], interval=TimeInterval(0.4, 0.4),
        lamset=[0, 1, 2], band=FrequencyBand(0.0, 40.0))
    atoms = slepian_atoms(p_sigma, p_s, 6)
    # oracle: dense eigendecomposition of the full joint sandwich matrix
    s = p_sigma.symmetrized() @ p_s.symmetrized() @ p_sigma.symmetrized()
    dense = np.linalg.eigvalsh(0.5 * (s + s.T))[::-1][:6]
    assert np.abs(atoms.concentrations - dense).max() < 1e-10


def test_slepian_atoms_diagonal_property(instance):
    basis, ax = instance
    p_s, p_sigma = support_projectors(
        basis, ax, vset=[0, 1], interval=TimeInterval(0.5, 0.5),
        lamset=[0, 1, 2], band=FrequencyBand(0.0, 40.0))
    atoms = slepian_atoms(p_sigma, p_s, 8)
    lam = atoms.concentrations
    assert np.all(np.diff(lam) <= 1e-12)
    assert np.all(lam >= -1e-12) and np.all(lam <= 1.0 + 1e-8)
    assert lam[0] < 1.0  # bounded-time product mask
    w = atoms.weights
    xi = atoms.vectors
    inner = xi.T @ (w[:, None] * np.stack(
        [p_s.apply(xi[:, j]) for j in range(xi.shape[1])], axis=1))
    assert np.abs(inner - np.diag(lam)).max() < 1e-6
    # exactly bandlimited: fixed points of the sigma projector
    for j in range(xi.shape[1]):
        resid = p_sigma.apply(xi[:, j]) - xi[:, j]
        assert np.sqrt(np.sum(w * resid**2)) < 1e-8


def test_slepian_atoms_product_structure(instance):
    basis, ax = instance
    vset, lamset = [0, 1], [0, 1, 2]
    interval, band = TimeInterval(0.5, 0.5), FrequencyBand(0.0, 40.0)
    p_s, p_sigma = support_projectors(basis, ax, vset, interval, lamset, band)
    joint = slepian_atoms(p_sigma, p_s, 6)
    phi, lam_v = vertex_concentrated_basis(basis, lamset, vset, len(lamset))
    psi = pswf(ax, interval, band, 6)
    products = sorted(
        (lv * lt for lv in lam_v for lt in psi.concentrations), reverse=True)
    assert np.abs(np.array(products[:6]) - joint.concentrations).max() < 1e-8


def test_slepian_atoms_rank_exceeded(instance):
    basis, ax = instance
    p_s, p_sigma = support_projectors(
        basis, ax, vset=[0], interval=TimeInterval(0.5, 0.2),
        lamset=[0], band=FrequencyBand(0.0, 20.0))
    with pytest.raises(RankExceeded):
        slepian_atoms(p_sigma, p_s, p_sigma.rank() + 1)


def test_vertex_factor_diagonal_property(instance):
    basis, _ = instance
    phi, lam_v = vertex_concentrated_basis(basis, [0, 1, 2], [1, 3], 3)
    mask = np.zeros(4)
    mask[[1, 3]] = 1.0
    inner = phi.T @ (mask[:, None] * phi)
    assert np.abs(inner - np.diag(lam_v)).max() < 1e-8


def test_product_dictionary_full_masks_recover_eigenvector_span(instance):
    # with full masks every concentration is 1, so the vertex factors are
    # only determined up to rotation; assert the span and orthonormality
    basis, ax = instance
    d = product_dictionary(basis, ax, vset=range(4), lamset=range(4),
                           interval=TimeInterval(0.5, 1.0),
                           band=FrequencyBand(0.0, 40.0), n_time_atoms=3)
    assert len(d) == 4 * 3
    phi = np.stack(sorted({tuple(a.vertex) for a in d.atoms}), axis=1)
    assert phi.shape == (4, 4)
    assert np.abs(phi @ phi.T - np.eye(4)).max() < 1e-10
    # non-degenerate instance pins the factor to the eigenvector itself
    phi1, lam1 = vertex_concentrated_basis(basis, [0], [0, 1], 1)
    assert np.abs(np.abs(phi1[:, 0]) - np.abs(basis.eigenvectors[:, 0])).max() < 1e-10


def test_product_dictionary_gram_identity(instance):
    basis, ax = instance
    d = product_dictionary(basis, ax, vset=[0, 1], lamset=[0, 1],
                           interval=TimeInterval(0.4, 0.4),
                           band=FrequencyBand(0.0, 40.0), n_time_atoms=4)
    gram = d.gram()
    assert np.abs(gram - np.eye(len(d))).max() < 1e-6


def test_dictionary_grid_evaluation_exact(instance):
    basis, ax = instance
    d = product_dictionary(basis, ax, vset=[0, 1], lamset=[0, 1],
                           interval=TimeInterval(0.4, 0.4),
                           band=FrequencyBand(0.0, 40.0), n_time_atoms=2)
    atom = d.atoms[0]
    grid = atom.grid().reshape(4, ax.n_points)
    for v in (0, 3):
        vals = atom.evaluate(np.full(ax.n_points, v), ax.points)
        assert np.array_equal(vals, grid[v])


def test_dictionary_evaluation_linear(instance, rng):
    basis, ax = instance
    d = product_dictionary(basis, ax, vset=[0, 1], lamset=[0, 1],
                           interval=TimeInterval(0.4, 0.4),
                           band=FrequencyBand(0.0, 40.0), n_time_atoms=3)
    verts = rng.integers(0, 4, 17)
    times = rng.uniform(0.0, 1.0, 17)
    design = d.evaluate(verts, times)
    coef = rng.standard_normal(len(d))
    combo = design @ coef
    direct = sum(c * a.evaluate(verts, times) for c, a in zip(coef, d.atoms))
    assert np.abs(combo - direct).max() < 1e-12


def test_sinc_interpolation_accuracy():
    ax = TimeAxis.uniform(-5.0, 5.0, 200)
    w0 = 8.0
    fn = lambda t: np.sinc(w0 * t / (2 * np.pi)) ** 2  # band [-w0, w0]
    s = SampledTimeFunction(ax, fn(ax.points))
    t_off = np.linspace(-3.5, 3.5, 97) + 0.013
    assert np.abs(s(t_off) - fn(t_off)).max() < 1e-4
    # exact at grid points
    assert np.array_equal(s(ax.points), fn(ax.points))


def test_jft_complete_basis_spans_grid(instance, rng):
    basis, _ = instance
    ax = TimeAxis.uniform(-3.0, 3.0, 20)
    d = baseline_dictionary(BaselineSpec("jft", {"n_vertex": 4, "n_freq": 10}),
                            basis, ax)
    m = d.grid_matrix()
    y = rng.standard_normal(4 * 20)
    coef, *_ = np.linalg.lstsq(m, y, rcond=None)
    assert np.linalg.norm(m @ coef - y) <= 1e-6 * np.linalg.norm(y)


def test_itersine_partition_positive(instance):
    basis, _ = instance
    lam = basis.eigenvalues
    x = lam / lam[-1]
    q_tr = 4
    total = np.zeros_like(x)
    for q in range(1, q_tr + 1):
        total += itersine_window((x - q / q_tr) * q_tr / 2.0) ** 2
    interior = (x > 1e-9) & (x < 1.0 - 1e-9)
    assert np.all(total[interior] > 0.0)
    assert total.max() <= 1.0 + 1e-12


def test_stvft_and_stvwt_build(instance):
    basis, ax = instance
    stvft = baseline_dictionary(BaselineSpec("stvft", {
        "q_translations": 3, "tau0": 0.25, "omega0": 6.0, "rho": 0.15,
        "n_values": range(0, 2)}), basis, ax)
    assert len(stvft) > 0
    assert all(a.norm > 0 for a in stvft.atoms)
    stvwt = baseline_dictionary(BaselineSpec("stvwt", {
        "scales": [1.0, 2.0], "a_values": [0.2, 0.4],
        "b_values": [0.25, 0.5, 0.75], "omega0": 5.0}), basis, ax)
    assert len(stvwt) > 0
    parts = {a.meta["part"] for a in stvwt.atoms}
    assert parts == {"re", "im"}


def test_negup_matches_exhaustive_search(rng):
    g = random_connected_graph(10, 0.4, rng)
    basis = spectral_basis(laplacian(g))
    ax = TimeAxis.uniform(0.0, 1.0, 30)
    lamset = [0, 1, 2]
    beta = 0.95
    spec = BaselineSpec("negup", {
        "lamset": lamset, "band": FrequencyBand(0.0, 30.0), "ell": 0.6,
        "beta_lam": beta, "n_time_atoms": 3})
    d = baseline_dictionary(spec, basis, ax)
    vset = d.manifest["selected_vset"]
    assert len(vset) == 3  # rank of the spectral mask
    greedy_obj = concentration_score(
        subset_concentration(basis, lamset, vset), 1.0, beta)
    best = max(concentration_score(
        subset_concentration(basis, lamset, c), 1.0, beta)
        for c in combinations(range(10), 3))
    assert abs(greedy_obj - best) < 1e-10


def test_baseline_spec_validation():
    with pytest.raises(InvalidSpec):
        BaselineSpec("nope", {})
    with pytest.raises(InvalidSpec):
        BaselineSpec("jft", {"n_vertex": 3})
    with pytest.raises(InvalidSpec):
        BaselineSpec("stvft", {"q_translations": 2, "tau0": -1.0,
                               "omega0": 1.0, "rho": 0.2})


def test_manifest_roundtrip(instance):
    basis, ax = instance
    d = product_dictionary(basis, ax, vset=[0, 2], lamset=[0, 1],
                           interval=TimeInterval(0.3, 0.4),
                           band=FrequencyBand(0.0, 35.0), n_time_atoms=3)
    rebuilt = dictionary_from_manifest(d.to_manifest(), basis, ax)
    assert np.array_equal(d.grid_matrix(), rebuilt.grid_matrix())
    spec = BaselineSpec("negup", {
        "lamset": [0, 1], "band": FrequencyBand(0.0, 30.0), "ell": 0.5,
        "beta_lam": 0.9, "n_time_atoms": 2})
    d2 = baseline_dictionary(spec, basis, ax)
    rebuilt2 = dictionary_from_manifest(d2.to_manifest(), basis, ax)
    assert np.array_equal(d2.grid_matrix(), rebuilt2.grid_matrix())
    import json

    json.dumps(d2.to_manifest())  # manifest must be plain JSON
