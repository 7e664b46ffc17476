import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gapmech.gaussian import (
    CubePoint,
    GaussMechanism,
    cube_to_mechanism,
    pdd_full_grid_search,
    theorem2_pdi,
    theorem3_pdd_shift,
    theorem4_shift_plus_noise,
)
from gapmech.probability import GaussMixture, ValidationError, gauss_map_accuracy_closed

BASE_MODEL = GaussMixture(0.5, 3.0)
SKEWED = GaussMixture(0.75, 3.0)
unit = st.floats(0.0, 1.0)


def test_mechanism_validation_and_distortion():
    with pytest.raises(ValidationError):
        GaussMechanism(-1.0, 0, 0, 0)
    m = GaussMechanism(1.0, 2.0, 0.5, 0.0)
    assert m.distortion(0.25) == pytest.approx(0.25 * 4 + 0.75 * 1.25)


def test_theorem2_examples():
    sol = theorem2_pdi(BASE_MODEL, 0.0)
    assert sol.accuracy == pytest.approx(stats.norm.cdf(3.0), abs=1e-12)
    assert sol.accuracy == pytest.approx(0.99865, abs=1e-5)
    sol = theorem2_pdi(BASE_MODEL, 8.0)
    assert sol.mechanism == GaussMechanism(0.0, 0.0, math.sqrt(8), math.sqrt(8))
    assert sol.accuracy == pytest.approx(0.841345, abs=1e-6)
    assert theorem2_pdi(SKEWED, 1e8).accuracy == pytest.approx(0.75, abs=1e-4)


def test_theorem3_examples():
    sol = theorem3_pdd_shift(BASE_MODEL, 4.0)
    assert sol.mechanism.beta0 == pytest.approx(2.0) and sol.mechanism.beta1 == pytest.approx(2.0)
    assert sol.accuracy == pytest.approx(0.841345, abs=1e-6)
    assert theorem3_pdd_shift(BASE_MODEL, 9.0).accuracy == pytest.approx(0.5, abs=1e-12)
    m = theorem3_pdd_shift(SKEWED, 1.0).mechanism
    assert m.beta0 == pytest.approx(math.sqrt(3)) and m.beta1 == pytest.approx(math.sqrt(1 / 3))
    assert m.beta0 / m.beta1 == pytest.approx(3.0)
    assert m.distortion(0.75) == pytest.approx(1.0)


def test_equal_variance_solvers_reject_unequal_models():
    with pytest.raises(ValidationError):
        theorem2_pdi(GaussMixture(0.5, 3.0, 4.0, 1.0), 1.0)
    with pytest.raises(ValidationError):
        theorem3_pdd_shift(BASE_MODEL, -1.0)


def test_theorem4_examples():
    sol = theorem4_shift_plus_noise(BASE_MODEL, 0.0)
    assert sol.mechanism == GaussMechanism()
    assert sol.accuracy == pytest.approx(stats.norm.cdf(3.0), abs=1e-12)
    sol = theorem4_shift_plus_noise(BASE_MODEL, 8.0)
    assert sol.accuracy == pytest.approx(0.5681, abs=5e-4)
    assert sol.mechanism.gamma0 < 0.05
    assert theorem4_shift_plus_noise(BASE_MODEL, 2.0).accuracy == pytest.approx(0.9213, abs=5e-4)
    assert theorem4_shift_plus_noise(BASE_MODEL, 9.0).accuracy <= 0.5 + 1e-6


def test_theorem4_spends_budget():
    for model in (BASE_MODEL, SKEWED):
        for D in (0.5, 3.0, 7.0):
            m = theorem4_shift_plus_noise(model, D).mechanism
            assert m.distortion(model.ptilde) == pytest.approx(D, rel=1e-9)


def test_theory_curves_nonincreasing_and_ordered():
    grid = np.linspace(0, 12, 49)
    for model in (BASE_MODEL, SKEWED, GaussMixture(0.9, 1.0, 2.0, 2.0)):
        t2 = [theorem2_pdi(model, D).accuracy for D in grid]
        t3 = [theorem3_pdd_shift(model, D).accuracy for D in grid]
        t4 = [theorem4_shift_plus_noise(model, D).accuracy for D in grid]
        assert np.all(np.diff(t2) <= 1e-12)
        assert np.all(np.diff(t4) <= 1e-9)
        floor = max(model.ptilde, 1 - model.ptilde)
        for a2, a3, a4 in zip(t2, t3, t4):
            assert a3 <= a2 + 1e-12
            assert a4 <= a3 + 1e-9
            assert floor - 1e-12 <= a4 <= 1.0


def test_cube_examples():
    m = cube_to_mechanism(CubePoint(1.0, 0.0, 0.3), 0.5, 4.0)
    assert m.beta0 == pytest.approx(2 * math.sqrt(2))
    assert m.beta1 == pytest.approx(0.0, abs=1e-15) and m.gamma1 == pytest.approx(0.0, abs=1e-15)
    assert m.gamma0 == 0.0
    m = cube_to_mechanism(CubePoint(0.0, 0.4, 0.0), 0.5, 4.0)
    assert m.beta0 == 0.0 and m.gamma0 == 0.0
    assert m.beta1 == pytest.approx(math.sqrt(8))
    eps, ptilde, D = 0.6, 0.3, 2.0
    m = cube_to_mechanism(CubePoint(eps, 1.0, 0.0), ptilde, D)
    assert m.beta0 == pytest.approx(0.0, abs=1e-15)
    assert m.gamma0 == pytest.approx(4 * math.sqrt(D / (1 - ptilde)) * eps / (1 + eps**2) / 2)
    with pytest.raises(ValidationError):
        CubePoint(1.2, 0, 0)


@given(unit, unit, unit, st.floats(0.01, 0.99), st.floats(0.0, 50.0))
def test_cube_points_lie_on_boundary(eps, w0, w1, ptilde, D):
    m = cube_to_mechanism(CubePoint(eps, w0, w1), ptilde, D)
    assert m.distortion(ptilde) == pytest.approx(D, abs=1e-9 * max(1.0, D))


def test_full_search_examples():
    sol, point = pdd_full_grid_search(BASE_MODEL, 8.0, grid_n=101)
    assert sol.accuracy == pytest.approx(0.5681, abs=0.005)
    assert cube_to_mechanism(point, 0.5, 8.0) == sol.mechanism
    assert pdd_full_grid_search(SKEWED, 7.0)[0].accuracy == pytest.approx(0.75, abs=0.002)
    unequal = GaussMixture(0.5, 3.0, 4.0, 1.0)
    assert pdd_full_grid_search(unequal, 9.0)[0].accuracy == pytest.approx(0.5457, abs=0.01)


def test_full_search_accuracy_matches_mechanism_and_beats_shift():
    for model in (BASE_MODEL, SKEWED):
        for D in (1.0, 3.0, 5.0):
            sol, _ = pdd_full_grid_search(model, D, grid_n=31)
            assert sol.mechanism.map_accuracy(model) == pytest.approx(sol.accuracy, abs=1e-12)
            assert sol.accuracy <= theorem3_pdd_shift(model, D).accuracy + 2e-3
            assert sol.accuracy >= max(model.ptilde, 1 - model.ptilde) - 1e-12


def test_full_search_zero_budget_and_determinism():
    sol, point = pdd_full_grid_search(BASE_MODEL, 0.0)
    assert sol.accuracy == pytest.approx(gauss_map_accuracy_closed(6.0, 0.5))
    a = pdd_full_grid_search(SKEWED, 2.5, grid_n=21)
    b = pdd_full_grid_search(SKEWED, 2.5, grid_n=21)
    assert a == b
