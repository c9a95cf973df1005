#  Copyright (c) modcs contributors.

"""
Sufficient conditions for exact recovery, evaluated on a RipTable.

Every left-hand side here is non-decreasing in the constants it reads, so a
table holding lower bounds can still prove a condition FAILS; it can never
prove it holds, and such reports come back INCONCLUSIVE.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..errors import ConditionViolatedError, ParameterError
from ..types import RipMode, Verdict
from .constants import RipTable

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0


@dataclass
class ConditionReport:
    """
    One named inequality (or conjunction of inequalities) and its verdict.

    ``lhs``/``threshold`` describe the headline inequality lhs < threshold;
    ``parts`` lists every inequality in the conjunction as
    ``label -> (lhs, threshold)``.
    """

    name: str
    verdict: Verdict
    lhs: float
    threshold: float
    inputs: Dict[str, int] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)
    parts: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    lower_bound: bool = False

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "verdict": self.verdict.value,
            "lhs": self.lhs,
            "threshold": self.threshold,
            "inputs": dict(self.inputs),
            "constants": dict(self.constants),
            "parts": {k: list(v) for k, v in self.parts.items()},
            "lower_bound": self.lower_bound,
        }


class _Recorder:
    """RipTable view that remembers which constants were read."""

    def __init__(self, rip: RipTable):
        self.rip = rip
        self.used: Dict[str, float] = {}
        self.lower_bound = False

    def delta(self, S: int) -> float:
        value = self.rip.delta(S)
        self.used[f"delta_{S}"] = value
        if S > 0 and self.rip.delta_mode(S) == RipMode.SAMPLED:
            self.lower_bound = True
        return value

    def theta(self, S1: int, S2: int) -> float:
        value = self.rip.theta(S1, S2)
        self.used[f"theta_{min(S1, S2)},{max(S1, S2)}"] = value
        if S1 > 0 and S2 > 0 and self.rip.theta_mode(S1, S2) == RipMode.SAMPLED:
            self.lower_bound = True
        return value


def resolve_k(
    u: int, k: Optional[int] = None, s: Optional[int] = None, e: Optional[int] = None
) -> int:
    """
    Return |T| from either (k, u) or (s, u, e) via k = s + e − u.

    Raises:
        ParameterError: If neither parameterization is complete, if both are
            given and disagree, or if the result is negative.
    """
    if u < 0:
        raise ParameterError(f"u must be nonnegative, got {u}")
    derived = None
    if s is not None and e is not None:
        derived = s + e - u
    elif s is not None or e is not None:
        raise ParameterError("s and e must be given together")
    if k is None:
        if derived is None:
            raise ParameterError("give either k or both s and e")
        k = derived
    elif derived is not None and derived != k:
        raise ParameterError(f"k={k} disagrees with s + e - u = {derived}")
    if k < 0:
        raise ParameterError(f"k must be nonnegative, got {k}")
    return int(k)


def _lemma_denominator(rip, k: int, S: int) -> float:
    """1 − δ_S − θ_{S,k}²/(1 − δ_k), once δ_S + δ_k + θ_{k,S}² < 1 is checked."""
    d_k, d_S, t_Sk = rip.delta(k), rip.delta(S), rip.theta(S, k)
    if d_k >= 1 or d_S + d_k + t_Sk**2 >= 1:
        raise ConditionViolatedError(
            f"delta_{S} + delta_{k} + theta_{k},{S}^2 = "
            f"{d_S + d_k + t_Sk ** 2:.6g} is not below 1"
        )
    den = 1.0 - d_S - t_Sk**2 / (1.0 - d_k)
    if den <= 0:
        raise ConditionViolatedError(f"non-positive denominator {den:.6g}")
    return den


def a_coeff(k: int, S: int, S_check: int, rip) -> float:
    """
    a_k(S, Š) = (θ_{Š,S} + θ_{Š,k}θ_{S,k}/(1 − δ_k)) / D

    with D = 1 − δ_S − θ_{S,k}²/(1 − δ_k).

    Raises:
        ConditionViolatedError: Unless δ_S + δ_k + θ_{k,S}² < 1.
    """
    den = _lemma_denominator(rip, k, S)
    num = rip.theta(S_check, S) + rip.theta(S_check, k) * rip.theta(S, k) / (
        1.0 - rip.delta(k)
    )
    return num / den


def k_coeff(k: int, S: int, rip) -> float:
    """K_k(S) = √(1 + δ_S) / (1 − δ_S − θ_{S,k}²/(1 − δ_k))."""
    den = _lemma_denominator(rip, k, S)
    return math.sqrt(1.0 + rip.delta(S)) / den


def _report(
    name: str,
    parts: List[Tuple[str, float, float]],
    rec: _Recorder,
    inputs: Dict[str, int],
) -> ConditionReport:
    holds = all(lhs < threshold for _, lhs, threshold in parts)
    if not holds:
        verdict = Verdict.FAIL
    elif rec.lower_bound:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.PASS
    _, lhs, threshold = parts[-1]
    return ConditionReport(
        name=name,
        verdict=verdict,
        lhs=lhs,
        threshold=threshold,
        inputs=inputs,
        constants=dict(rec.used),
        parts={label: (value, thr) for label, value, thr in parts},
        lower_bound=rec.lower_bound,
    )


def check_theorem1(
    k: Optional[int],
    u: int,
    rip: RipTable,
    s: Optional[int] = None,
    e: Optional[int] = None,
) -> ConditionReport:
    """
    δ_{k+u} < 1, δ_{2u} + δ_k + θ_{k,2u}² < 1 and a_k(2u, u) + a_k(u, u) < 1.
    """
    k = resolve_k(u, k, s, e)
    rec = _Recorder(rip)
    parts = [
        ("delta_k+u", rec.delta(k + u), 1.0),
        (
            "delta_2u+delta_k+theta_k,2u^2",
            rec.delta(2 * u) + rec.delta(k) + rec.theta(k, 2 * u) ** 2,
            1.0,
        ),
    ]
    try:
        a_sum = a_coeff(k, 2 * u, u, rec) + a_coeff(k, u, u, rec)
    except ConditionViolatedError:
        a_sum = math.inf
    parts.append(("a_k(2u,u)+a_k(u,u)", a_sum, 1.0))
    return _report("theorem1", parts, rec, {"k": k, "u": u})


def check_corollary1(
    k: Optional[int],
    u: int,
    rip: RipTable,
    s: Optional[int] = None,
    e: Optional[int] = None,
) -> List[ConditionReport]:
    """The three sufficient conditions that each imply Theorem 1's."""
    k = resolve_k(u, k, s, e)
    inputs = {"k": k, "u": u}

    rec = _Recorder(rip)
    first = (rec.delta(2 * u) + rec.theta(u, u) + rec.theta(u, 2 * u)) + (
        rec.delta(k) + rec.theta(k, u) ** 2 + 2 * rec.theta(k, 2 * u) ** 2
    )
    cond1 = _report(
        "corollary1.theta",
        [("delta_k+u", rec.delta(k + u), 1.0), ("lhs", first, 1.0)],
        rec,
        inputs,
    )

    rec = _Recorder(rip)
    second = (
        2 * rec.delta(2 * u)
        + rec.delta(3 * u)
        + rec.delta(k)
        + rec.delta(k + u) ** 2
        + 2 * rec.delta(k + 2 * u) ** 2
    )
    cond2 = _report("corollary1.delta", [("lhs", second, 1.0)], rec, inputs)

    rec = _Recorder(rip)
    cond3 = _report(
        "corollary1.one_fifth",
        [("u-k", float(u - k), 1.0), ("delta_k+2u", rec.delta(k + 2 * u), 0.2)],
        rec,
        inputs,
    )
    return [cond1, cond2, cond3]


def check_prop1(
    k: Optional[int],
    u: int,
    rip: RipTable,
    s: Optional[int] = None,
    e: Optional[int] = None,
) -> ConditionReport:
    """δ_{k+2u} < 1: the ℓ0 program has x as its unique minimizer."""
    k = resolve_k(u, k, s, e)
    rec = _Recorder(rip)
    return _report(
        "prop1", [("delta_k+2u", rec.delta(k + 2 * u), 1.0)], rec, {"k": k, "u": u}
    )


def check_cs_conditions(s: int, rip: RipTable) -> List[ConditionReport]:
    """
    The basis-pursuit conditions, one report each:
    δ_{2s} + θ_{s,s} + θ_{s,2s} < 1, δ_{2s} < √2 − 1 and δ_{2s} + δ_{3s} < 1.

    The last two are alternatives; either one passing suffices.
    """
    inputs = {"s": s}
    rec = _Recorder(rip)
    cond_theta = _report(
        "cs.theta",
        [("lhs", rec.delta(2 * s) + rec.theta(s, s) + rec.theta(s, 2 * s), 1.0)],
        rec,
        inputs,
    )
    rec = _Recorder(rip)
    cond_sqrt2 = _report(
        "cs.sqrt2", [("delta_2s", rec.delta(2 * s), SQRT2_MINUS_1)], rec, inputs
    )
    rec = _Recorder(rip)
    cond_sum = _report(
        "cs.delta_sum",
        [("delta_2s+delta_3s", rec.delta(2 * s) + rec.delta(3 * s), 1.0)],
        rec,
        inputs,
    )
    return [cond_theta, cond_sqrt2, cond_sum]


def check_all(
    rip: RipTable, k: int, u: int, s: Optional[int] = None
) -> List[ConditionReport]:
    """Every modified-CS check for (k, u), plus the CS checks when ``s`` is given."""
    reports = [check_theorem1(k, u, rip)]
    reports.extend(check_corollary1(k, u, rip))
    reports.append(check_prop1(k, u, rip))
    if s is not None:
        reports.extend(check_cs_conditions(s, rip))
    return reports
