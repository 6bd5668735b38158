import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import hellinger_form, renyi_direct
from satrack.phd import ParticlePHD
from satrack.tracking import evaluate_controls, predicted_measurements, renyi_from_weights, select_track_control
from satrack.world import ControlModel, SensorModel, admissible_controls

weights = st.lists(st.floats(0, 10, allow_subnormal=False), min_size=1, max_size=30)


def test_hand_evaluated_half_order_divergence():
    assert math.isclose(renyi_from_weights([0.5, 0.5], [1.0, 0.0], 0.5), (1 - math.sqrt(0.5)) ** 2 + 0.5)
    assert math.isclose(renyi_from_weights([0.5, 0.5], [1.0, 0.0], 0.5), 0.5858, abs_tol=1e-4)


def test_identical_intensities_have_zero_divergence():
    assert math.isclose(renyi_from_weights([0.2, 0.7], [0.2, 0.7], 0.3), 0.0, abs_tol=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_alpha_outside_open_interval_rejected(alpha):
    with pytest.raises(ValueError):
        renyi_from_weights([1.0], [1.0], alpha)


@given(st.data(), st.floats(0.05, 0.95))
def test_divergence_matches_direct_sum(data, alpha):
    a = data.draw(weights)
    b = data.draw(st.lists(st.floats(0, 10, allow_subnormal=False), min_size=len(a), max_size=len(a)))
    d = renyi_from_weights(a, b, alpha)
    assert d >= 0
    assert math.isclose(d, max(renyi_direct(a, b, alpha), 0.0), rel_tol=1e-9, abs_tol=1e-9)


def test_predicted_measurement_is_noiseless_image():
    Z = predicted_measurements(np.array([[3.0, 0, 4.0, 0]]), (0.0, 0.0))
    assert np.allclose(Z, [[5.0, math.atan2(-4.0, -3.0)]])


def test_only_reaching_action_is_selected():
    # 8.5 m east is inside only the square of the 4 m eastward move
    sm = SensorModel()
    phd = ParticlePHD(np.array([[8.5, 0, 0.0, 0]]), np.array([1.0]))
    U = admissible_controls((0.0, 0.0), ControlModel())
    evals = evaluate_controls(phd, U, sm, 0.5, X_hat=phd.states)
    positive = [e.control for e in evals if e.divergence > 0]
    assert positive == [U[9]]
    assert select_track_control(phd, (0.0, 0.0), U, sm, X_hat=phd.states) == U[9]


def test_symmetric_layout_picks_lower_index():
    sm = SensorModel()
    X = np.array([[7.5, 0, 0.0, 0], [-7.5, 0, 0.0, 0]])
    phd = ParticlePHD(X, np.array([1.0, 1.0]))
    U = admissible_controls((0.0, 0.0), ControlModel())
    evals = evaluate_controls(phd, U, sm, 0.5, X_hat=X)
    best = max(e.divergence for e in evals)
    tied = [i for i, e in enumerate(evals) if math.isclose(e.divergence, best)]
    assert len(tied) >= 2
    assert select_track_control(phd, (0.0, 0.0), U, sm, X_hat=X) == U[tied[0]]
