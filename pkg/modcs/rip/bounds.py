#  Copyright (c) modcs contributors.

"""
High-probability RIP bounds for Gaussian matrices and the largest sparsity
each sufficient condition tolerates at a given measurement ratio.

g_{n/m}(r) = (1 + √(n/m)(√r + √(2H(r))))² − 1 bounds δ_{rn} with H the
binary entropy in nats; it depends on (m, n, s, u, e) only through ratios.
"""

import math
from typing import Callable, List, Optional, Tuple

from ..common import round_half_up
from ..errors import ParameterError
from ..types import BoundRule

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0
# u = e = s * DEFAULT_CHURN in the sparsity curves
DEFAULT_CHURN = 1.0 / 50.0


def entropy(r: float) -> float:
    """Binary entropy −r ln r − (1−r) ln(1−r), with H(0) = H(1) = 0."""
    if not 0.0 <= r <= 1.0:
        raise ParameterError(f"entropy needs 0 <= r <= 1, got {r}")
    if r == 0.0 or r == 1.0:
        return 0.0
    return -r * math.log(r) - (1.0 - r) * math.log(1.0 - r)


def g_bound(n_over_m: float, frac: float) -> float:
    if n_over_m <= 0:
        raise ParameterError(f"n/m must be positive, got {n_over_m}")
    if not 0.0 <= frac <= 1.0:
        raise ParameterError(f"frac must lie in [0, 1], got {frac}")
    f = math.sqrt(n_over_m) * (math.sqrt(frac) + math.sqrt(2.0 * entropy(frac)))
    return (1.0 + f) ** 2 - 1.0


def rho_modcs(m: float, n: float, s: float, u: float, e: float) -> float:
    """2g(2u/n) + g(3u/n) + g((s+e−u)/n) + g((s+e)/n)² + 2g((s+e+u)/n)²."""
    def g(x):
        return g_bound(n / m, x / n)

    return (
        2 * g(2 * u) + g(3 * u) + g(s + e - u) + g(s + e) ** 2 + 2 * g(s + e + u) ** 2
    )


def rho_cs(m: float, n: float, s: float) -> float:
    return g_bound(n / m, 2 * s / n) + g_bound(n / m, 3 * s / n)


def rho_cs2(m: float, n: float, s: float) -> float:
    return g_bound(n / m, 2 * s / n)


def rule_threshold(rule: BoundRule) -> float:
    return SQRT2_MINUS_1 if BoundRule(rule) == BoundRule.CS2 else 1.0


def _rho_at(rule: BoundRule, m_over_n: float, frac: float, churn: float) -> float:
    # n = 1 works because every g argument is a ratio to n
    if rule == BoundRule.MODCS:
        return rho_modcs(m_over_n, 1.0, frac, churn * frac, churn * frac)
    if rule == BoundRule.CS:
        return rho_cs(m_over_n, 1.0, frac)
    return rho_cs2(m_over_n, 1.0, frac)


def _bisect(ok: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def max_sparsity_fraction(
    m_over_n: float,
    rule: BoundRule,
    n: Optional[int] = None,
    churn: float = DEFAULT_CHURN,
    tol: float = 1e-12,
) -> float:
    """
    Largest s/n for which ``rule`` holds, with u = e = churn·s.

    Without ``n`` the search is over real s/n in [0, 1/3]. With an integer
    ``n`` it runs over s in {0..n} with u = e = round(churn·s), ties up.
    """
    rule = BoundRule(rule)
    if not 0 < m_over_n <= 1:
        raise ParameterError(f"m/n must lie in (0, 1], got {m_over_n}")
    threshold = rule_threshold(rule)

    if n is None:
        def ok(frac):
            return _rho_at(rule, m_over_n, frac, churn) < threshold

        return _bisect(ok, 0.0, 1.0 / 3.0, tol)

    m = m_over_n * n

    def ok_int(s):
        s = int(s)
        if rule == BoundRule.MODCS:
            churn_s = round_half_up(churn * s)
            if s + 2 * churn_s > n:
                return False
            return rho_modcs(m, n, s, churn_s, churn_s) < threshold
        if 3 * s > n:
            return False
        if rule == BoundRule.CS:
            return rho_cs(m, n, s) < threshold
        return rho_cs2(m, n, s) < threshold

    lo, hi = 0, n // 3 + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok_int(mid):
            lo = mid
        else:
            hi = mid
    return lo / n


def rho_curve(
    rule: BoundRule,
    m_over_n: float,
    fractions: List[float],
    churn: float = DEFAULT_CHURN,
) -> List[Tuple[float, float]]:
    """(s/n, ρ) pairs for plotting one sparsity curve."""
    rule = BoundRule(rule)
    return [(frac, _rho_at(rule, m_over_n, frac, churn)) for frac in fractions]
