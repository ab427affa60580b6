import numpy as np
import pytest

from rboxlib import (
    CodingConfig,
    DivergenceError,
    InvalidInputError,
    WeightConfig,
    build_code_table,
    encode_index,
    fit_logits,
    fit_many,
    granularity_study,
    loss_surface_sweep,
    sweep_grid,
    synthetic_boxes,
)


def dense_table(omega=1.0, scheme="bcl"):
    return build_code_table(CodingConfig(scheme=scheme, omega=omega))


def sparse_table(omega=1.0, scheme="csl"):
    return build_code_table(CodingConfig(scheme=scheme, omega=omega))


# ---------------------------------------------------------------------------
# sweep_grid / loss_surface_sweep
# ---------------------------------------------------------------------------

def test_sweep_grid_unit_step():
    pts = sweep_grid(1.0)
    assert pts.shape == (180,)
    assert pts[0] == -89.0
    assert pts[-1] == 90.0
    assert np.all(np.diff(pts) > 0)
    assert np.all((pts > -90.0) & (pts <= 90.0))


def test_sweep_grid_fractional_step():
    pts = sweep_grid(0.5)
    assert pts.shape == (360,)
    assert pts[-1] == 90.0
    pts = sweep_grid(7.0)  # does not divide 180; endpoint still present
    assert pts[-1] == 90.0
    assert np.all((pts > -90.0) & (pts <= 90.0))


def test_reg_sweep_boundary_blowup():
    res = loss_surface_sweep(89.0, 6.0, "reg_smoothl1")
    assert res.loss_at(-89.0) == pytest.approx(177.5)
    assert res.loss_at(87.0) == pytest.approx(1.5)
    assert res.loss_at(89.0) == pytest.approx(0.0)


def test_reg_sweep_opencv_smoke():
    res = loss_surface_sweep(40.0, 4.0, "reg_smoothl1_opencv", step=5.0)
    assert np.all(np.isfinite(res.losses))
    assert res.loss_at(40.0) == pytest.approx(0.0)
    assert res.losses.min() >= 0.0


def test_dense_sweep_minimum_at_nearest_grid_point():
    table = dense_table()
    for method in ("dcl_plain", "dcl_log", "dcl_adarsw"):
        res = loss_surface_sweep(33.3, 6.0, method, table=table)
        best = res.thetas[int(np.argmin(res.losses))]
        assert best == pytest.approx(33.0), method


def test_sparse_sweep_minimum_in_target_bin():
    table = sparse_table()
    res = loss_surface_sweep(33.3, 6.0, "csl", table=table)
    best = float(res.thetas[int(np.argmin(res.losses))])
    assert encode_index(best, table) == encode_index(33.3, table)


def test_adarsw_sweep_square_symmetry():
    # a square-like target also zeroes the weight 90 degrees away
    table = dense_table()
    res = loss_surface_sweep(30.0, 1.0, "dcl_adarsw", table=table)
    assert res.loss_at(30.0) == pytest.approx(0.0, abs=1e-9)
    assert res.loss_at(-60.0) == pytest.approx(0.0, abs=1e-9)
    assert res.loss_at(75.0) > 0.1


def test_sweep_table_kind_mismatch():
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(10.0, 2.0, "csl", table=dense_table())
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(10.0, 2.0, "dcl_plain", table=sparse_table())
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(10.0, 2.0, "dcl_plain")


def test_sweep_validation():
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(10.0, 2.0, "hinge")
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(90.0001, 2.0, "reg_smoothl1")
    with pytest.raises(InvalidInputError):
        loss_surface_sweep(10.0, 0.5, "reg_smoothl1")


# ---------------------------------------------------------------------------
# fit_logits / fit_many
# ---------------------------------------------------------------------------

def test_fit_logits_trajectory_shape():
    table = dense_table(omega=22.5)
    fit = fit_logits(40.0, table, steps=50, learning_rate=0.5)
    assert fit.losses.shape == (51,)
    assert fit.decoded.shape == (51,)
    assert fit.final_logits.shape == (3,)
    assert fit.final_theta == fit.decoded[-1]


def test_fit_logits_saturated_init_is_converged():
    table = dense_table()
    target = 8.0 * np.array([0, 1, 0, 1, 0, 1, 0, 1.0]) - 4.0
    fit = fit_logits(5.0, table, steps=0,
                     init_logits=8.0 * np.zeros(8) - 4.0)
    assert fit.decoded[0] == 90.0  # all-zero bits decode to bin 0
    fit = fit_logits(5.0, table, steps=0, init_logits=None, init_seed=1)
    assert fit.losses.shape == (1,)
    del target


def test_fit_logits_converges_and_decreases():
    table = dense_table()
    fit = fit_logits(-37.0, table, steps=800, learning_rate=0.1)
    assert fit.converged
    assert fit.final_error <= 1.0 + 1e-12
    tail = fit.losses[10:]
    assert np.all(np.diff(tail) <= 1e-12)


def test_fit_logits_exact_init_stays_put():
    table = dense_table()
    target_bits = np.array([0, 0, 0, 0, 0, 0, 0, 1], dtype=np.float64)
    fit = fit_logits(89.0, table, steps=20, learning_rate=1.0,
                     init_logits=80.0 * target_bits - 40.0)
    assert fit.decoded[0] == 89.0
    assert fit.converged
    assert fit.losses[0] == pytest.approx(0.0, abs=1e-12)


def test_fit_logits_deterministic():
    table = dense_table(omega=22.5)
    a = fit_logits(12.0, table, steps=100, init_seed=4)
    b = fit_logits(12.0, table, steps=100, init_seed=4)
    assert np.array_equal(a.losses, b.losses)
    assert np.array_equal(a.final_logits, b.final_logits)
    c = fit_logits(12.0, table, steps=100, init_seed=5)
    assert not np.array_equal(a.final_logits, c.final_logits)


def test_fit_logits_diverges_at_huge_learning_rate():
    # the log-distance weight amplifies the gradient enough to overflow
    table = dense_table()
    with pytest.raises(DivergenceError):
        fit_logits(89.0, table, WeightConfig(mode="log_distance"),
                   steps=50, learning_rate=1e308, init_seed=0)


def test_fit_logits_unweighted_saturates_instead_of_diverging():
    # without a weight the focal gradient vanishes at saturation, so even an
    # absurd step size freezes the logits at huge finite values
    table = dense_table()
    fit = fit_logits(10.0, table, steps=5, learning_rate=1e308)
    assert fit.converged
    assert fit.final_theta == 10.0


def test_fit_many_matches_scalar_fit():
    table = dense_table(omega=22.5)
    thetas = np.array([40.0, -3.0, 88.0])
    batch = fit_many(thetas, table, steps=300, learning_rate=1.0, seed=7)
    assert batch.final_errors.shape == (3,)
    assert batch.converged.shape == (3,)
    assert batch.success_rate == pytest.approx(batch.converged.mean())


def test_fit_many_high_success_on_coarse_bins():
    table = dense_table(omega=22.5)
    rng = np.random.default_rng(0)
    thetas = 90.0 - rng.random(50) * 180.0
    batch = fit_many(thetas, table, steps=500, learning_rate=1.0, seed=0)
    assert batch.success_rate >= 0.98


def test_fit_many_deterministic():
    table = dense_table(omega=22.5)
    thetas = np.array([10.0, 20.0, 30.0])
    a = fit_many(thetas, table, steps=200, seed=3)
    b = fit_many(thetas, table, steps=200, seed=3)
    assert np.array_equal(a.final_errors, b.final_errors)
    assert a.success_rate == b.success_rate


def test_fit_many_weight_modes():
    table = dense_table(omega=22.5)
    thetas = np.array([15.0, -70.0])
    log_fit = fit_many(thetas, table, WeightConfig(mode="log_distance"),
                       steps=400, learning_rate=1.0, seed=1)
    assert log_fit.final_errors.shape == (2,)
    ada = fit_many(thetas, table, WeightConfig(mode="adarsw"),
                   steps=400, learning_rate=1.0, seed=1, h_gt=5.0, w_gt=1.0)
    assert ada.final_errors.shape == (2,)
    with pytest.raises(InvalidInputError):
        fit_many(thetas, table, WeightConfig(mode="adarsw"), steps=10)


def test_fit_many_diverges_at_huge_learning_rate():
    table = dense_table()
    with pytest.raises(DivergenceError):
        fit_many(np.array([89.0, -45.0]), table, WeightConfig(mode="log_distance"),
                 steps=50, learning_rate=1e308, seed=0)


def test_fit_many_validation():
    table = dense_table()
    with pytest.raises(InvalidInputError):
        fit_many(np.array([95.0]), table)
    with pytest.raises(InvalidInputError):
        fit_many(np.array([10.0]), table, steps=-1)
    with pytest.raises(InvalidInputError):
        fit_many(np.array([10.0]), table, learning_rate=0.0)


# ---------------------------------------------------------------------------
# granularity_study
# ---------------------------------------------------------------------------

def test_granularity_rows():
    rows = granularity_study([45.0, 22.5], n_targets=20, seed=0,
                             quant_samples=2000, steps=300)
    assert len(rows) == 2
    assert rows[0].omega == 45.0
    assert rows[0].num_categories == 4
    assert rows[0].code_length == 2
    assert rows[1].num_categories == 8
    for row in rows:
        assert row.max_error <= row.omega / 2.0 + 1e-12
        assert 0.0 < row.mean_error < row.max_error
        assert 0.0 <= row.fit_rate <= 1.0


def test_granularity_deterministic():
    kw = dict(n_targets=10, seed=2, quant_samples=1000, steps=100)
    assert granularity_study([22.5], **kw) == granularity_study([22.5], **kw)


def test_granularity_validation():
    with pytest.raises(InvalidInputError):
        granularity_study([])
    with pytest.raises(InvalidInputError):
        granularity_study([22.5], n_targets=0)


# ---------------------------------------------------------------------------
# synthetic_boxes
# ---------------------------------------------------------------------------

def test_synthetic_boxes_presets():
    for box in synthetic_boxes(50, seed=1, aspect="square"):
        assert 1.0 <= box.h / box.w <= 1.5
        assert box.w > 0.0
        assert -90.0 < box.theta <= 90.0
    for box in synthetic_boxes(50, seed=1, aspect="elongated"):
        assert box.h / box.w > 1.5
    for box in synthetic_boxes(50, seed=1, aspect="mixed"):
        assert 1.0 <= box.h / box.w <= 8.0


def test_synthetic_boxes_constant_aspect():
    for box in synthetic_boxes(10, seed=4, aspect=3.0):
        assert box.h / box.w == pytest.approx(3.0)


def test_synthetic_boxes_deterministic():
    a = synthetic_boxes(5, seed=9)
    b = synthetic_boxes(5, seed=9)
    assert a == b
    c = synthetic_boxes(5, seed=10)
    assert a != c


def test_synthetic_boxes_validation():
    with pytest.raises(InvalidInputError):
        synthetic_boxes(0)
    with pytest.raises(InvalidInputError):
        synthetic_boxes(5, aspect=0.5)
    with pytest.raises(InvalidInputError):
        synthetic_boxes(5, aspect="thin")
