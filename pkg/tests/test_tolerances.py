"""Calibration fixture for the shared discrete allowance ``C * h^(1-alpha)``."""

import numpy as np
import pytest

from conftest import sample
from fracwin.core import Order, Window, short_memory_sequence
from fracwin.solver import ShortMemorySystem, SolveConfig, VectorField, solve_short_memory
from fracwin.tolerances import CALIBRATION_C, ROUNDING_RTOL, discrete_allowance

HEADROOM = 100.0


@pytest.mark.parametrize("alpha", [0.3, 0.95])
@pytest.mark.parametrize("omega", [1.0, 5.0])
@pytest.mark.parametrize("c", [1.0, -2.5, 7.0])
def test_linear_data_gap_is_rounding_only(alpha, omega, c):
    # for x = c t + d the L1 gap 1/2 D(x^2) - x D(x) is non-positive; no discretisation slack is needed
    h = 0.01
    x = sample(lambda t: c * t + 0.5, h, 10.0)
    sq = sample(lambda t: (c * t + 0.5) ** 2, h, 10.0)
    win = Window(omega)
    gap = 0.5 * short_memory_sequence(sq, alpha, win) - x.scalar() * short_memory_sequence(x, alpha, win)
    assert np.max(gap) <= ROUNDING_RTOL * np.max(np.abs(sq.scalar()))
    assert np.min(gap) < 0  # strictly negative once the data has moved


@pytest.mark.parametrize("h", [0.005, 0.0025])
def test_comparison_dip_fits_with_headroom(h):
    # the short-memory decay run dips just below zero near the noise floor
    sys = ShortMemorySystem(VectorField(1, lambda x, t: -x), Order(0.95), Window(5.0), (3.0,))
    y = solve_short_memory(sys, SolveConfig(h, 50.0)).scalar()
    dip = max(0.0, -float(np.min(y)))
    assert dip * HEADROOM <= discrete_allowance(h, 0.95, 3.0)


def test_allowance_shape():
    assert CALIBRATION_C == 1e-6
    assert discrete_allowance(0.01, 0.5) == pytest.approx(1e-7)
    assert discrete_allowance(0.01, 0.5, 0.1) == discrete_allowance(0.01, 0.5)
    assert discrete_allowance(0.01, 0.5, 10.0) == pytest.approx(1e-6)
