"""Student-t statistics: CDF via the regularized incomplete beta function,
quantiles by bisection, mean confidence intervals, and the paired t-test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import KeyMismatch, TooFewValues, ZeroVariance


@dataclass(frozen=True)
class SignificanceResult:
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    significant_at_01: bool


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: int) -> float:
    """P(T <= t) for Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def student_t_quantile(p: float, df: int) -> float:
    """Inverse CDF by bisection on student_t_cdf."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if p == 0.5:
        return 0.0
    lo, hi = 0.0, 1.0
    target = p if p > 0.5 else 1.0 - p
    while student_t_cdf(hi, df) < target:
        hi *= 2.0
        if hi > 1e300:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    q = 0.5 * (lo + hi)
    return q if p > 0.5 else -q


def mean_and_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float, float]:
    """Mean with a Student-t confidence interval on the mean."""
    n = len(values)
    if n < 2:
        raise TooFewValues("confidence interval needs at least 2 values")
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    if var == 0.0:
        return (mean, mean, mean)
    tq = student_t_quantile((1.0 + level) / 2.0, n - 1)
    half = tq * math.sqrt(var / n)
    return (mean, mean - half, mean + half)


def paired_t_test(a: Mapping[str, float], b: Mapping[str, float]) -> SignificanceResult:
    """Two-sided paired t-test on per-query values keyed identically."""
    if set(a.keys()) != set(b.keys()):
        raise KeyMismatch("paired t-test requires identical key sets")
    keys = sorted(a.keys())
    n = len(keys)
    if n < 2:
        raise TooFewValues("paired t-test needs at least 2 pairs")
    diffs = [a[k] - b[k] for k in keys]
    mean_d = sum(diffs) / n
    var_d = sum((d - mean_d) ** 2 for d in diffs) / (n - 1)
    if var_d == 0.0:
        raise ZeroVariance("all paired differences are equal")
    t = mean_d / math.sqrt(var_d / n)
    df = n - 1
    p = 2.0 * (1.0 - student_t_cdf(abs(t), df))
    return SignificanceResult(
        t_statistic=t,
        degrees_of_freedom=df,
        p_value=p,
        significant_at_01=p < 0.01,
    )
