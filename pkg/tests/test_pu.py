import math

import numpy as np
import pytest

from rbfpu.errors import OutOfDomainError, UncoveredPointError, UnfittableSubdomainError, ValidationError
from rbfpu.geometry import Dataset, build_spatial_index, generate_pu_cover, grid_cover, halton_sequence, start_radius
from rbfpu.harness import product_function
from rbfpu.kernels import IMQ, MATERN_C2, KernelKind, gram_matrix
from rbfpu.pu import (
    PUModel,
    evaluate,
    fit_local,
    fit_pu_fixed,
    fit_pu_variable,
    fixed_radius,
    shepard_weights,
    wendland_weight,
)
from rbfpu.selection import shape_grid

from conftest import brute_ball


@pytest.fixture(scope="module")
def model289(halton289):
    return fit_pu_variable(halton289, IMQ, shape_grid(30, 1e-3, 10), h=2, P=6)


def test_wendland_weight_examples():
    assert wendland_weight(0.0, 0.3) == 1.0
    assert wendland_weight(0.3, 0.3) == 0.0
    assert wendland_weight(0.15, 0.3) == pytest.approx(0.1875, rel=1e-15)
    assert wendland_weight(0.5, 0.3) == 0.0
    with pytest.raises(ValidationError):
        wendland_weight(0.1, 0.0)


def test_shepard_weights_examples():
    assert shepard_weights([0.2, 0.2], [([0.2, 0.3], 0.5)]).tolist() == [1.0]
    w = shepard_weights([0.5, 0.5], [([0.4, 0.5], 0.3), ([0.6, 0.5], 0.3)])
    np.testing.assert_allclose(w, [0.5, 0.5], rtol=1e-15)
    rng = np.random.default_rng(0)
    active = [(rng.random(2) * 0.2 + 0.4, 0.5) for _ in range(3)]
    w = shepard_weights([0.5, 0.5], active)
    assert np.all(w >= 0)
    assert abs(math.fsum(w) - 1) <= 1e-12
    with pytest.raises(UncoveredPointError):
        shepard_weights([0.0, 0.0], [([1.0, 1.0], 0.5)])


def test_fit_local_examples():
    ds = Dataset([[0.2, 0.7]], [3.5])
    assert fit_local(ds, [0], IMQ, 1.0, [0.2, 0.7], 0.1).coefficients.tolist() == [3.5]
    ds = Dataset([[0.0], [1.0]], [0.0, 1.0])
    loc = fit_local(ds, [0, 1], IMQ, 1.0, [0.5], 1.0)
    np.testing.assert_allclose(loc.coefficients, [-math.sqrt(2), 2.0], rtol=1e-14)


def test_fit_local_residual_25_members():
    x = halton_sequence(25, 2) * 0.2 + 0.4
    ds = Dataset(x, product_function(x))
    loc = fit_local(ds, np.arange(25), IMQ, 2.0, [0.5, 0.5], 0.2)
    A = gram_matrix(KernelKind(IMQ, 2.0), x)
    assert np.abs(A @ loc.coefficients - ds.values).max() <= 1e-8
    assert np.abs(loc(x, IMQ) - ds.values).max() <= 1e-8


def test_fit_local_unfittable():
    ds = Dataset([[0.5, 0.5], [0.5 + 1e-10, 0.5]], [1.0, 2.0])
    with pytest.raises(UnfittableSubdomainError):
        fit_local(ds, [0, 1], IMQ, 1e-3, [0.5, 0.5], 0.1)


def test_variable_fit_default_configuration(halton289, model289):
    assert model289.d == 81
    cover = model289.cover
    idx = build_spatial_index(halton289)
    for sub in model289.subdomains:
        assert 1e-3 < sub.epsilon < 10
        assert sub.delta_min <= sub.delta <= 2 * sub.delta_min * (1 + 1e-15)
        assert sub.delta_min >= start_radius(cover)
        assert sub.member_indices.tolist() == idx.range_query(sub.center, sub.delta).tolist()
        A = gram_matrix(KernelKind(IMQ, sub.epsilon), sub.points)
        f = halton289.values[sub.member_indices]
        resid = np.abs(A @ sub.coefficients - f).max()
        # the search favours flat kernels (cond up to ~1e17 near the pivot floor);
        # the tight residual bound only holds for moderate conditioning
        bound = 1e-8 if np.linalg.cond(A) <= 1e8 else 1e-5
        assert resid <= bound * np.abs(f).max()
    assert model289.provenance["mode"] == "variable"


def test_variable_fit_four_corners():
    ds = Dataset([[0, 0], [1, 0], [0, 1], [1, 1]], [1.0, 2.0, 3.0, 4.0])
    model = fit_pu_variable(ds, IMQ)
    assert model.d == 1
    np.testing.assert_allclose(evaluate(model, ds.nodes), ds.values, rtol=1e-10)


def test_variable_fit_sparse_region_grows():
    rng = np.random.default_rng(5)
    dense = rng.random((900, 2)) * 0.3
    sparse = halton_sequence(400, 2)
    sparse = sparse[np.any(sparse > 0.35, axis=1)]
    x = np.vstack([dense, sparse])
    ds = Dataset(x, product_function(x))
    model = fit_pu_variable(ds, MATERN_C2, shape_grid(10))
    cover = model.cover
    need = max(min(math.ceil(ds.n * math.pi * cover.baseline_radius**2), ds.n), 3)
    checked = 0
    for sub in model.subdomains:
        if np.all(sub.center > 0.45):
            # counting oracle: the baseline ball is too sparse here
            assert len(brute_ball(x, sub.center, start_radius(cover))) < need
            assert sub.delta_min > cover.baseline_radius
            checked += 1
    assert checked > 0


def test_fixed_fit_radius_and_shape(halton289):
    cover = generate_pu_cover(256, 2)
    assert cover.baseline_radius == 0.125
    assert fixed_radius(cover) == 0.125
    # the coverage guard only activates once sqrt(M)/2 exceeds 1
    assert fixed_radius(grid_cover(3, 5)) == pytest.approx(math.sqrt(5) / 2 / 3, rel=1e-15)
    model = fit_pu_fixed(halton289, IMQ, 0.6)
    assert {s.delta for s in model.subdomains} == {1 / 9}
    assert {s.epsilon for s in model.subdomains} == {0.6}


def test_fixed_fit_single_node():
    ds = Dataset([[0.3, 0.6]], [2.5])
    model = fit_pu_fixed(ds, MATERN_C2, 1.0)
    assert evaluate(model, [[0.3, 0.6]]).tolist() == [2.5]


def test_fixed_fit_empty_patch_uses_nearest_nodes():
    x = np.vstack([halton_sequence(60, 2) * 0.4, [[0.95, 0.95]]])
    ds = Dataset(x, product_function(x))
    model = fit_pu_fixed(ds, IMQ, 2.0, n_min=3)
    assert model.warnings
    assert all(s.n_members >= 1 for s in model.subdomains)
    far = [s for s in model.subdomains if "empty patch" in s.note]
    assert far and all(s.n_members == 3 for s in far)


def test_interpolation_at_nodes(halton289, model289):
    pred = evaluate(model289, halton289.nodes)
    assert np.abs(pred - halton289.values).max() <= 1e-6 * np.abs(halton289.values).max()


def test_single_subdomain_equals_local_interpolant():
    x = halton_sequence(4, 2)
    ds = Dataset(x, product_function(x))
    model = fit_pu_variable(ds, IMQ, shape_grid(8))
    assert model.d == 1
    g = np.random.default_rng(1).random((50, 2))
    np.testing.assert_allclose(evaluate(model, g), model.subdomains[0](g, IMQ), rtol=1e-13)


def test_agreeing_local_interpolants_blend_to_common_value():
    x = halton_sequence(30, 2)
    ds = Dataset(x, product_function(x))
    idx = np.arange(30)
    a = fit_local(ds, idx, IMQ, 2.0, [0.4, 0.5], 0.5)
    b = fit_local(ds, idx, IMQ, 2.0, [0.6, 0.5], 0.5)
    model = PUModel(IMQ, 2, grid_cover(1, 2), [a, b], ds.nodes, ds.values)
    pts = np.array([[0.5, 0.5], [0.45, 0.6], [0.62, 0.31]])
    np.testing.assert_allclose(evaluate(model, pts), a(pts, IMQ), rtol=1e-14)


def test_evaluate_out_of_domain(model289):
    with pytest.raises(OutOfDomainError):
        evaluate(model289, [[0.5, 1.01]])
    with pytest.raises(ValidationError):
        evaluate(model289, [[0.5, 0.5, 0.5]])


def test_partition_of_unity_and_convexity(halton289, model289):
    pts = np.random.default_rng(2).random((2000, 2))
    pred = evaluate(model289, pts)
    for x, v in zip(pts, pred):
        idx, w = model289.weights(x)
        assert abs(math.fsum(w) - 1) <= 1e-12
        assert np.all(w >= 0)
        local = np.array([model289.subdomains[j](x, IMQ)[0] for j in idx])
        slack = 1e-12 * max(1.0, np.abs(local).max())
        assert local.min() - slack <= v <= local.max() + slack


def test_uncovered_fallback_uses_nearest_patch():
    x = halton_sequence(20, 2)
    ds = Dataset(x, product_function(x))
    sub = fit_local(ds, np.arange(20), IMQ, 2.0, [0.2, 0.2], 0.1)
    model = PUModel(IMQ, 2, grid_cover(1, 2), [sub], ds.nodes, ds.values)
    np.testing.assert_allclose(evaluate(model, [[0.9, 0.9]]), sub([[0.9, 0.9]], IMQ), rtol=1e-14)


def test_variable_fit_deterministic(halton289, model289):
    again = fit_pu_variable(halton289, IMQ, shape_grid(30, 1e-3, 10), h=2, P=6)
    assert again.selected_pairs == model289.selected_pairs
    g = np.random.default_rng(3).random((500, 2))
    assert evaluate(again, g).tobytes() == evaluate(model289, g).tobytes()


def test_thread_count_does_not_change_result(halton289, model289, monkeypatch):
    monkeypatch.setenv("RBFPU_NUM_THREADS", "4")
    threaded = fit_pu_variable(halton289, IMQ, shape_grid(30, 1e-3, 10), h=2, P=6)
    assert threaded.selected_pairs == model289.selected_pairs
    for a, b in zip(threaded.subdomains, model289.subdomains):
        assert a.coefficients.tobytes() == b.coefficients.tobytes()


def test_fit_requires_unit_cube():
    ds = Dataset([[0, 0], [2, 2], [0, 2]], [1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        fit_pu_variable(ds, IMQ)
