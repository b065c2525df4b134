"""Gaussian process core: kernels, exact fit, prediction, append."""

import numpy as np
import pytest

from gpisgrasp import gp
from gpisgrasp.errors import (
    DimensionMismatchError,
    IndistinguishableInputsError,
    KernelDomainError,
)

from oracles import dense_gp_predict


def test_se_kernel_at_zero_distance_matches_signal_variance():
    spec = gp.se_kernel(sigma_se=0.001, length_scale=1.0)
    x = np.array([0.3, -0.2, 0.7])
    assert gp.kernel_eval(spec, x, x) == pytest.approx(1e-6, abs=1e-18)


def test_se_kernel_closed_form():
    spec = gp.se_kernel(sigma_se=0.5, length_scale=2.0)
    got = gp.kernel_eval(spec, [0.0], [3.0])
    assert got == pytest.approx(0.25 * np.exp(-9.0 / 8.0), rel=1e-12)


def test_thin_plate_boundary_cancels():
    spec = gp.thin_plate_kernel(max_range=0.7)
    assert gp.kernel_eval(spec, [0.0, 0.0], [0.7, 0.0]) == pytest.approx(0.0, abs=1e-12)


def test_thin_plate_half_range():
    # 2 r^3 - 3 R r^2 + R^3 at R=1, r=0.5: 0.25 - 0.75 + 1 = 0.5
    spec = gp.thin_plate_kernel(max_range=1.0)
    assert gp.kernel_eval(spec, [0.0], [0.5]) == pytest.approx(0.5, rel=1e-12)


def test_thin_plate_beyond_range_raises():
    spec = gp.thin_plate_kernel(max_range=1.0)
    with pytest.raises(KernelDomainError):
        gp.kernel_eval(spec, [0.0], [1.5])


def test_kernel_dimension_mismatch():
    spec = gp.se_kernel()
    with pytest.raises(DimensionMismatchError):
        gp.kernel_eval(spec, [0.0, 1.0], [0.0])


def test_kernel_symmetry_random_points():
    rng = np.random.default_rng(11)
    for spec in (gp.se_kernel(0.3, 0.9), gp.thin_plate_kernel(10.0)):
        for _ in range(50):
            a, b = rng.normal(size=(2, 3))
            assert gp.kernel_eval(spec, a, b) == gp.kernel_eval(spec, b, a)


@pytest.mark.parametrize("seed", range(5))
def test_kernel_matrices_are_psd_with_jitter(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(20, 3))
    for spec in (gp.se_kernel(0.8, 0.5), gp.thin_plate_kernel(2.0 * np.sqrt(12.0))):
        k = np.array([[gp.kernel_eval(spec, a, b) for b in pts] for a in pts])
        eig = np.linalg.eigvalsh(k + 1e-9 * np.eye(len(pts)))
        assert eig.min() >= -1e-12


def test_single_point_interpolation():
    model = gp.gp_fit([[0.0]], [2.0], 1e-12, gp.se_kernel(1.0, 1.0))
    pred = gp.gp_predict(model, [0.0])
    assert pred.mean == pytest.approx(2.0, abs=1e-6)
    assert pred.variance < 1e-6


def test_two_point_fit_matches_hand_solved_system():
    spec = gp.se_kernel(1.0, 1.0)
    x = np.array([[0.0], [1.0]])
    y = np.array([1.0, -1.0])
    noise = 1e-4
    model = gp.gp_fit(x, y, noise, spec)
    xq = np.array([0.4])

    k01 = np.exp(-0.5)
    K = np.array([[1.0 + noise, k01], [k01, 1.0 + noise]])
    ks = np.array([np.exp(-0.5 * 0.16), np.exp(-0.5 * 0.36)])
    sol = np.linalg.solve(K, y)
    mean_ref = ks @ sol
    var_ref = 1.0 - ks @ np.linalg.solve(K, ks)

    pred = gp.gp_predict(model, xq)
    assert pred.mean == pytest.approx(mean_ref, abs=1e-8)
    assert pred.variance == pytest.approx(var_ref, abs=1e-8)


def test_duplicate_inputs_zero_noise_raise():
    with pytest.raises(IndistinguishableInputsError):
        gp.gp_fit([[1.0], [1.0]], [0.0, 1.0], 0.0, gp.se_kernel(1.0, 1.0))


def test_far_query_recovers_prior():
    spec = gp.se_kernel(sigma_se=0.001, length_scale=0.05)
    model = gp.gp_fit([[0.0]], [5.0], 1e-10, spec)
    pred = gp.gp_predict(model, [100.0])
    assert abs(pred.mean) < 1e-9
    assert pred.variance == pytest.approx(1e-6, rel=1e-9)


def test_training_point_interpolation_as_noise_vanishes():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, size=(8, 2))
    y = rng.normal(size=8)
    model = gp.gp_fit(x, y, 1e-12, gp.se_kernel(1.0, 0.8))
    for xi, yi in zip(x, y):
        pred = gp.gp_predict(model, xi)
        assert pred.mean == pytest.approx(yi, abs=1e-5)
        assert pred.variance < 1e-6


@pytest.mark.parametrize("seed", range(8))
def test_predict_matches_dense_inverse_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    d = int(rng.choice([1, 3, 12]))
    n = int(rng.integers(2, 50))
    x = rng.uniform(-1.0, 1.0, size=(n, d))
    y = rng.normal(size=n)
    noise = rng.uniform(1e-6, 1e-2, size=n)
    spec = gp.se_kernel(1.0, 1.0) if seed % 2 else gp.thin_plate_kernel(4.0 * np.sqrt(d))
    model = gp.gp_fit(x, y, noise, spec)
    for _ in range(3):
        xq = rng.uniform(-1.0, 1.0, size=d)
        mean_ref, var_ref = dense_gp_predict(spec, x, y, noise, xq)
        pred = gp.gp_predict(model, xq)
        assert pred.mean == pytest.approx(mean_ref, abs=1e-8)
        assert pred.variance == pytest.approx(max(var_ref, 0.0), abs=1e-8)


def test_append_to_empty_equals_single_point_fit():
    spec = gp.se_kernel(1.0, 1.0)
    a = gp.gp_append(gp.empty_model(spec, 1), [0.5], 1.5, 1e-8)
    b = gp.gp_fit([[0.5]], [1.5], 1e-8, spec)
    for xq in ([0.5], [0.1], [2.0]):
        pa, pb = gp.gp_predict(a, xq), gp.gp_predict(b, xq)
        assert pa.mean == pytest.approx(pb.mean, abs=1e-12)
        assert pa.variance == pytest.approx(pb.variance, abs=1e-12)


def test_append_equals_refit():
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, size=(10, 3))
    y = rng.normal(size=10)
    noise = rng.uniform(1e-6, 1e-3, size=10)
    spec = gp.thin_plate_kernel(10.0)
    base = gp.gp_fit(x, y, noise, spec)
    extra_x, extra_y, extra_noise = rng.uniform(-1, 1, size=3), 0.7, 1e-5
    appended = gp.gp_append(base, extra_x, extra_y, extra_noise)
    refit = gp.gp_fit(
        np.vstack([x, extra_x]), np.append(y, extra_y), np.append(noise, extra_noise), spec
    )
    for _ in range(5):
        xq = rng.uniform(-1, 1, size=3)
        pa, pb = gp.gp_predict(appended, xq), gp.gp_predict(refit, xq)
        assert pa.mean == pytest.approx(pb.mean, abs=1e-8)
        assert pa.variance == pytest.approx(pb.variance, abs=1e-8)


def test_append_duplicate_zero_noise_raises():
    model = gp.gp_fit([[1.0, 2.0]], [0.5], 0.0, gp.se_kernel(1.0, 1.0))
    with pytest.raises(IndistinguishableInputsError):
        gp.gp_append(model, [1.0, 2.0], 0.5, 0.0)


def test_batch_prediction_matches_single():
    rng = np.random.default_rng(21)
    x = rng.uniform(-1, 1, size=(15, 3))
    y = rng.normal(size=15)
    model = gp.gp_fit(x, y, 1e-6, gp.thin_plate_kernel(8.0))
    xq = rng.uniform(-1, 1, size=(20, 3))
    means, variances = gp.gp_predict_many(model, xq)
    for i in range(20):
        p = gp.gp_predict(model, xq[i])
        assert means[i] == pytest.approx(p.mean, abs=1e-9)
        assert variances[i] == pytest.approx(p.variance, abs=1e-9)


def test_empty_model_predicts_prior():
    model = gp.empty_model(gp.se_kernel(0.5, 1.0), 2)
    pred = gp.gp_predict(model, [0.3, 0.4])
    assert pred.mean == 0.0
    assert pred.variance == pytest.approx(0.25)
