import numpy as np
import pytest

from gaitsig.errors import ValidationError
from gaitsig.fourier import (
    approximation_residuals,
    design_matrix,
    evaluate,
    fit_fourier,
    gait_features,
    information_criterion,
    reconstruct,
    select_order,
)
from gaitsig.models import FourierModel, GaitCycle, NormalizedGrid, OptTrace, Segmentation
from gaitsig.signature import average_signature
from gaitsig.synth import walking_template


def harmonic(grid, a, b):
    return evaluate(FourierModel(len(a), a, b), grid.points)


def test_exact_three_term_signal(grid, make_signature):
    tau = grid.points
    sig = make_signature(3 + 2 * np.cos(2 * np.pi * tau) - 0.5 * np.sin(4 * np.pi * tau))
    model = fit_fourier(sig, 3)
    np.testing.assert_allclose(model.a, [3.0, 2.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(model.b, [0.0, 0.0, -0.5], atol=1e-9)
    assert model.rss < 1e-18
    assert model.grid_size == 100


@pytest.mark.parametrize("order", [1, 4, 9])
def test_constant_signature(grid, make_signature, order):
    model = fit_fourier(make_signature(np.full(grid.size, 2.5)), order)
    assert model.a[0] == pytest.approx(2.5, abs=1e-9)
    np.testing.assert_allclose(model.a[1:], 0.0, atol=1e-9)
    np.testing.assert_allclose(model.b, 0.0, atol=1e-9)


def test_design_matrix_layout(grid):
    h = design_matrix(grid, 8)
    assert h.shape == (100, 15)
    np.testing.assert_array_equal(h[:, 0], 1.0)
    np.testing.assert_allclose(h[:, 8], np.sin(2 * np.pi * grid.points))


@pytest.mark.parametrize("order", [1, 3, 12])
def test_parameter_count_matches_design_columns(grid, make_signature, order):
    rng = np.random.default_rng(order)
    model = fit_fourier(make_signature(rng.normal(size=grid.size)), order)
    assert model.n_params == 2 * order - 1
    assert model.theta.size == model.n_params
    assert design_matrix(grid, order).shape[1] == model.n_params


@pytest.mark.parametrize("order", [2, 6, 20])
def test_refitting_a_reconstruction_changes_nothing(grid, make_signature, order):
    rng = np.random.default_rng(40 + order)
    first = fit_fourier(make_signature(rng.normal(size=grid.size)), order)
    projected = reconstruct(first, grid)
    again = fit_fourier(make_signature(projected), order)
    np.testing.assert_allclose(reconstruct(again, grid), projected, rtol=0, atol=1e-10)
    np.testing.assert_allclose(again.theta, first.theta, rtol=0, atol=1e-10)
    assert again.rss < 1e-18


def test_reconstruct_constant_model(grid):
    model = FourierModel(3, [1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(reconstruct(model, grid), np.ones(100))


def test_rss_is_nonincreasing_in_order(grid, make_signature):
    rng = np.random.default_rng(21)
    sig = make_signature(rng.normal(size=grid.size))
    rss = [fit_fourier(sig, k).rss for k in range(1, 26)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(rss, rss[1:]))


def test_fit_residuals_stay_within_cycle_spread(grid):
    rng = np.random.default_rng(5)
    template = reconstruct(walking_template(), grid)
    cycles = [GaitCycle(template + rng.normal(0.0, 0.3, grid.size), m, m + 1) for m in range(30)]
    sig = average_signature(cycles)
    model = fit_fourier(sig, 8)
    assert np.all(np.abs(reconstruct(model, grid) - sig.mean) < sig.std)


def test_noise_free_order_is_recovered_exactly(grid, make_signature):
    sig = make_signature(harmonic(grid, [0.4, 1.0, -0.7], [0.0, 0.5, 0.3]))
    for criterion in ("aic", "bic"):
        assert select_order(sig, (1, 10), criterion).order == 3


def test_order_scores_table(grid, make_signature):
    sig = make_signature(harmonic(grid, [0.4, 1.0, -0.7], [0.0, 0.5, 0.3]))
    selection = select_order(sig, (2, 6), "bic")
    assert list(selection.scores.columns) == ["K", "RSS", "AIC", "BIC"]
    assert selection.scores["K"].tolist() == [2, 3, 4, 5, 6]
    assert selection.criterion == "bic"


def test_information_criterion_arithmetic():
    fit = 100 * np.log(0.01)
    assert information_criterion(1.0, 100, 3, "aic") == pytest.approx(fit + 10.0)
    assert information_criterion(1.0, 100, 3, "bic") == pytest.approx(fit + 5 * np.log(100))
    assert information_criterion(1.0, 100, 3, "bic", "order") == pytest.approx(fit + 3 * np.log(100))


def test_residuals_sum_back_to_the_signature(grid, make_signature):
    rng = np.random.default_rng(9)
    sig = make_signature(harmonic(grid, [0.0, 2.0, 0.5, 0.3], [0.0, -1.0, 0.2, 0.1]) + rng.normal(0, 0.1, 100))
    model = fit_fourier(sig, 4)
    band = approximation_residuals(model, sig)
    np.testing.assert_allclose(band.residuals + sig.mean, reconstruct(model, grid), atol=1e-12)
    assert band.lower < 0 < band.upper


def test_low_order_leaves_larger_residuals(grid, make_signature):
    sig = make_signature(harmonic(grid, [0.0, 2.0, 0.8, 0.5, 0.3], [0.0, -1.0, 0.4, 0.2, 0.1]))
    rms = [np.sqrt(np.mean(approximation_residuals(fit_fourier(sig, k), sig).residuals ** 2)) for k in (1, 8)]
    assert rms[0] > rms[1]


def test_interpolatory_fit(make_signature):
    rng = np.random.default_rng(3)
    sig = make_signature(rng.normal(size=99))
    model = fit_fourier(sig, 50)
    assert np.max(np.abs(approximation_residuals(model, sig).residuals)) < 1e-8


@pytest.mark.parametrize("order, message", [(0, "must be >= 1"), (51, "underdetermined")])
def test_invalid_orders(grid, make_signature, order, message):
    with pytest.raises(ValidationError, match=message):
        fit_fourier(make_signature(np.zeros(grid.size)), order)


def test_invalid_selection_arguments(grid, make_signature):
    sig = make_signature(np.sin(2 * np.pi * grid.points))
    with pytest.raises(ValidationError, match="order range"):
        select_order(sig, (1, 60))
    with pytest.raises(ValidationError, match="criterion"):
        select_order(sig, (1, 5), "mdl")


def test_gait_features(grid, make_signature):
    sig = make_signature(harmonic(grid, [0.1, 2.0, 0.5], [0.0, -1.0, 0.2]))
    model = fit_fourier(sig, 3)
    trace = OptTrace(2.0, (1.0, 0.9), (False, False, False))
    seg = Segmentation([0.0, 1.0, 2.1, 3.0])
    features = gait_features(model, trace, seg)
    assert list(features)[:5] == ["a0", "a1", "a2", "b1", "b2"]
    assert features["a1"] == pytest.approx(2.0)
    assert features["final_cost"] == 0.9
    assert features["step_time_mean"] == pytest.approx(1.0)
    assert features["step_time_std"] == pytest.approx(np.std([1.0, 1.1, 0.9], ddof=1))
