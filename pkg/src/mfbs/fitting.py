"""Log-log least-squares fits with regression confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ArgumentError


@dataclass
class ScalingFit:
    """Power-law fit ``observed ~ exp(intercept) * x^slope``.

    ``x`` holds radii or side lengths.  ``ci_halfwidth`` is the 95% t-interval
    half-width of the slope.
    """

    x: list
    observed: list
    slope: float
    intercept: float
    r2: float
    theoretical_exponent: float
    ci_halfwidth: float

    @property
    def lower_bound_ok(self) -> bool:
        """Slope is at least the theoretical exponent minus the CI half-width."""
        return self.slope >= self.theoretical_exponent - self.ci_halfwidth

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["lower_bound_ok"] = self.lower_bound_ok
        return d


def loglog_fit(x, y, theoretical: float = math.nan, inverse: bool = False,
               level: float = 0.95) -> ScalingFit:
    """Fit ``log y`` against ``log x`` (or ``log(1/x)`` when ``inverse``).

    Raises
    ------
    ArgumentError
        With fewer than two points or non-positive data.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ArgumentError("a fit needs at least two (x, y) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ArgumentError("log-log fit needs positive data")
    lx = -np.log(x) if inverse else np.log(x)
    ly = np.log(y)
    if np.ptp(lx) == 0:
        raise ArgumentError("fit abscissae must not all coincide")
    res = stats.linregress(lx, ly)
    dof = x.size - 2
    if dof > 0:
        half = float(stats.t.ppf(0.5 + level / 2, dof) * res.stderr)
    else:
        half = math.inf
    return ScalingFit(x.tolist(), y.tolist(), float(res.slope), float(res.intercept),
                      float(res.rvalue ** 2), float(theoretical), half)
