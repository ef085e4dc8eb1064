"""Student's t distribution via the regularized incomplete beta function, and the paired t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    p = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - p if t > 0 else p


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    mean_diff: float = 0.0
    degenerate: bool = False

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p < alpha


def paired_ttest(x: Sequence[float], y: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test on ``x - y`` (sample sd, m - 1 denominator).

    All-zero differences give t=0, p=1; a spread that is zero relative to a
    nonzero mean gives p=0. Both cases are flagged ``degenerate``.
    """
    if len(x) != len(y):
        raise ValueError("paired samples must have equal length")
    m = len(x)
    if m < 2:
        raise ValueError("paired t-test needs at least two pairs")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    mean = math.fsum(diffs) / m
    df = m - 1
    if all(d == 0.0 for d in diffs):
        return TTestResult(0.0, df, 1.0, 0.0, True)
    sd = math.sqrt(math.fsum((d - mean) ** 2 for d in diffs) / df)
    scale = max(abs(d) for d in diffs)
    if sd <= 1e-12 * scale:
        if mean == 0.0:
            return TTestResult(0.0, df, 1.0, 0.0, True)
        return TTestResult(math.copysign(math.inf, mean), df, 0.0, mean, True)
    t = mean / (sd / math.sqrt(m))
    return TTestResult(t, df, t_sf_two_sided(t, df), mean, False)
