"""Discrete tolerances that stand in for strict continuous inequalities.

Every allowance has the form ``C * h**(1 - alpha) * max(1, scale)`` with one
frozen constant ``C``. ``scale`` is the magnitude of the data being compared
(for instance ``max |V|`` along a trajectory), so the allowance is relative
for large data and absolute near zero.

Calibration (rerun by ``tests/test_tolerances.py``):

* for linear data the L1 gap ``1/2 D(x^2) - x D(x)`` is exactly non-positive,
  so the quadratic-form inequalities need rounding slack only;
* on the comparison pairing (``D~y = -y`` against the delayed bound with
  ``alpha = 0.95``, ``omega = 5``, ``y(0) = 3``) the short-memory run dips to
  about ``-3e-9`` near the noise floor for ``h`` down to ``0.0025``, i.e.
  ``|dip| / (h^(1-alpha) * 3) < 2e-9``.

``C = 1e-6`` leaves more than two orders of magnitude of headroom on both.
"""

from __future__ import annotations

import numpy as np

CALIBRATION_C = 1e-6

#: relative rounding slack for non-strict inequalities checked pointwise
ROUNDING_RTOL = 64 * np.finfo(float).eps


def discrete_allowance(h: float, alpha: float, scale: float = 1.0) -> float:
    return CALIBRATION_C * h ** (1.0 - alpha) * max(1.0, float(scale))
