"""Pearson and concordance correlation coefficients.

Variances are population variances (divide by N).
"""
from __future__ import annotations

import numpy as np

from .errors import UndefinedMetricError, ValidationError


def _series_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValidationError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValidationError("need at least two samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("series contain NaN or infinite values")
    return x, y


def _pow2_scale(peak):
    """Power of two bringing ``peak`` near 1; multiplying by it is exact."""
    # clamp keeps the factor finite for subnormal peaks
    return np.ldexp(1.0, -int(np.clip(np.frexp(peak)[1], -1000, 1000))) if peak > 0 else 1.0


def _is_constant(a):
    return bool(np.all(a == a[0]))


def _moments(x, y):
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    return mx, my, (dx * dx).mean(), (dy * dy).mean(), (dx * dy).mean()


def pearson(x, y) -> float:
    """Pearson correlation; 0 when either series is constant."""
    x, y = _series_pair(x, y)
    if _is_constant(x) or _is_constant(y):
        return 0.0
    # rho ignores per-series scale; normalizing keeps tiny inputs from underflowing
    x = x * _pow2_scale(np.abs(x - x.mean()).max())
    y = y * _pow2_scale(np.abs(y - y.mean()).max())
    _, _, vx, vy, cov = _moments(x, y)
    return float(np.clip(cov / np.sqrt(vx * vy), -1.0, 1.0))


def ccc(x, y) -> float:
    """Concordance correlation coefficient of predictions ``x`` and truth ``y``.

    ``2 rho sx sy / (sx^2 + sy^2 + (mx - my)^2)``, evaluated through the
    covariance since ``rho sx sy`` equals it.
    """
    x, y = _series_pair(x, y)
    cx, cy = _is_constant(x), _is_constant(y)
    if cx and cy and x[0] == y[0]:
        raise UndefinedMetricError("both series are constant and equal; CCC is 0/0")
    # CCC ignores a common scale factor
    k = _pow2_scale(max(np.abs(x).max(), np.abs(y).max()))
    mx, my, vx, vy, cov = _moments(x * k, y * k)
    if cx or cy:
        cov = 0.0
    denom = vx + vy + (mx - my) ** 2
    return float(2.0 * cov / denom)
