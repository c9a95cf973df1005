"""
Tests for restricted isometry constants, the sufficient conditions and the
Gaussian sparsity bounds.
Test Plan:
```
MODCS_DEBUG=1 python -m unittest tests.test_rip -v
```
"""

import itertools
import math
import unittest

import numpy as np

from modcs.errors import (
    ConditionViolatedError,
    EnumerationBudgetError,
    MissingConstantError,
    ParameterError,
)
from modcs.rip.bounds import (
    entropy,
    g_bound,
    max_sparsity_fraction,
    rho_cs,
    rho_cs2,
    rho_curve,
    rho_modcs,
    rule_threshold,
)
from modcs.rip.conditions import (
    a_coeff,
    check_all,
    check_corollary1,
    check_cs_conditions,
    check_prop1,
    check_theorem1,
    k_coeff,
    resolve_k,
)
from modcs.rip.constants import (
    delta_exact,
    delta_sampled,
    RipTable,
    theta_exact,
    theta_sampled,
)
from modcs.shared_vars import MODCS_SLOW_TESTS
from modcs.solvers.metrics import is_exact
from modcs.solvers.oracle import solve_l0_bruteforce
from modcs.solvers.programs import solve_modcs
from modcs.types import BoundRule, RipMode, Verdict


def unit_columns(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    return A / np.linalg.norm(A, axis=0)


def linear_table(c, top=24):
    """δ_S = c·S and θ_{a,b} = δ_{a+b} for every size up to ``top``."""
    delta = {S: c * S for S in range(1, top + 1)}
    theta = {
        (a, b): c * (a + b)
        for a, b in itertools.combinations_with_replacement(range(1, top + 1), 2)
        if a + b <= top
    }
    return RipTable.from_constants(delta=delta, theta=theta)


class TestConstants(unittest.TestCase):
    def test_orthogonal_matrix_is_an_isometry(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 6)))
        for S in (1, 2, 3, 6):
            self.assertAlmostEqual(delta_exact(Q, S), 0.0, places=12)
        self.assertAlmostEqual(theta_exact(Q, 2, 3), 0.0, places=12)
        self.assertAlmostEqual(delta_exact(np.eye(5), 2), 0.0, places=12)

    def test_duplicate_columns(self):
        A = unit_columns(4, 5, 1)
        A[:, 3] = A[:, 0]
        self.assertAlmostEqual(delta_exact(A, 2), 1.0, places=12)

    def test_pairs_match_column_inner_products(self):
        A = unit_columns(4, 8, 2)
        G = A.T @ A
        off = np.max(np.abs(G - np.diag(np.diag(G))))
        self.assertAlmostEqual(delta_exact(A, 2), off, places=12)
        self.assertAlmostEqual(theta_exact(A, 1, 1), off, places=12)

    def test_delta2_is_largest_column_inner_product(self):
        for seed in range(20):
            A = unit_columns(5, 9, 100 + seed)
            G = np.abs(A.T @ A)
            np.fill_diagonal(G, 0.0)
            self.assertAlmostEqual(delta_exact(A, 2), G.max(), places=12)

    def test_theta_bounded_by_delta(self):
        for m, n, seed in ((4, 8, 3), (6, 12, 9)):
            A = unit_columns(m, n, seed)
            deltas = {S: delta_exact(A, S) for S in range(2, m + 1)}
            for S1 in range(1, m):
                for S2 in range(S1, m - S1 + 1):
                    self.assertLessEqual(
                        theta_exact(A, S1, S2),
                        deltas[S1 + S2] + 1e-12,
                        msg=f"{m}x{n}, S1={S1}, S2={S2}",
                    )

    def test_zero_sizes(self):
        A = unit_columns(4, 6, 4)
        self.assertEqual(delta_exact(A, 0), 0.0)
        self.assertEqual(theta_exact(A, 0, 3), 0.0)
        with self.assertRaises(ParameterError):
            delta_exact(A, 7)
        with self.assertRaises(ParameterError):
            theta_exact(A, 3, 4)

    def test_budget(self):
        A = unit_columns(4, 10, 5)
        with self.assertRaises(EnumerationBudgetError):
            delta_exact(A, 3, budget=100)
        with self.assertRaises(EnumerationBudgetError):
            theta_exact(A, 1, 2, budget=100)

    def test_sampled_is_a_lower_bound(self):
        A = unit_columns(5, 12, 6)
        rng = np.random.default_rng(0)
        self.assertLessEqual(delta_sampled(A, 3, 50, rng), delta_exact(A, 3) + 1e-12)
        self.assertLessEqual(
            theta_sampled(A, 1, 2, 50, rng), theta_exact(A, 1, 2) + 1e-12
        )
        self.assertEqual(delta_sampled(A, 3, 0, rng), 0.0)

    def test_sampled_reaches_exact_on_few_subsets(self):
        A = unit_columns(4, 6, 7)
        rng = np.random.default_rng(1)
        self.assertAlmostEqual(
            delta_sampled(A, 2, 2000, rng), delta_exact(A, 2), places=12
        )
        self.assertAlmostEqual(
            theta_sampled(A, 1, 1, 2000, rng), theta_exact(A, 1, 1), places=12
        )


class TestRipTable(unittest.TestCase):
    def test_lazy_fill(self):
        A = unit_columns(4, 8, 8)
        table = RipTable.from_matrix(A)
        self.assertEqual(table.to_dict()["delta"], {})
        value = table.delta(2)
        self.assertAlmostEqual(value, delta_exact(A, 2), places=12)
        self.assertEqual(table.delta_mode(2), RipMode.EXACT)
        self.assertIn("2", table.to_dict()["delta"])
        self.assertEqual(table.theta(2, 1), table.theta(1, 2))
        self.assertIn("1,2", table.to_dict()["theta"])
        self.assertEqual(table.delta(0), 0.0)

    def test_budget_fallback(self):
        A = unit_columns(4, 10, 9)
        with self.assertRaises(EnumerationBudgetError):
            RipTable.from_matrix(A, budget=10, sample_trials=0).delta(3)
        table = RipTable.from_matrix(A, budget=10, sample_trials=200, seed=3)
        self.assertEqual(table.delta_mode(3), RipMode.SAMPLED)
        self.assertLessEqual(table.delta(3), delta_exact(A, 3) + 1e-12)
        again = RipTable.from_matrix(A, budget=10, sample_trials=200, seed=3)
        self.assertEqual(again.delta(3), table.delta(3))

    def test_theta_too_wide(self):
        table = RipTable.from_matrix(unit_columns(3, 4, 10))
        with self.assertRaises(ParameterError):
            table.theta(2, 3)

    def test_hand_tables(self):
        table = RipTable.from_constants(delta={2: 0.3}, theta={(2, 1): 0.2})
        self.assertEqual(table.delta(2), 0.3)
        self.assertEqual(table.theta(1, 2), 0.2)
        with self.assertRaises(MissingConstantError):
            table.delta(3)
        with self.assertRaises(MissingConstantError):
            table.theta(2, 2)
        zeros = RipTable.zeros()
        self.assertEqual(zeros.delta(7), 0.0)
        self.assertEqual(zeros.theta(3, 4), 0.0)
        self.assertEqual(zeros.delta_mode(7), RipMode.EXACT)

    def test_dict_round_trip(self):
        A = unit_columns(4, 6, 11)
        table = RipTable.from_matrix(A)
        table.delta(2)
        table.theta(1, 2)
        data = table.to_dict()
        self.assertEqual(len(data["matrix_hash"]), 16)
        loaded = RipTable.from_dict(data)
        self.assertEqual(loaded.delta(2), table.delta(2))
        self.assertEqual(loaded.theta(2, 1), table.theta(1, 2))
        self.assertEqual(loaded.matrix_hash, table.matrix_hash)

        plain = RipTable.from_dict({"delta": {"4": 0.5}, "default": 0.0})
        self.assertEqual(plain.delta(4), 0.5)
        self.assertEqual(plain.delta_mode(4), RipMode.EXACT)
        self.assertEqual(plain.delta(5), 0.0)
        sampled = RipTable.from_dict(
            {"delta": {"4": {"value": 0.5, "mode": "sampled-lower-bound"}}}
        )
        self.assertEqual(sampled.delta_mode(4), RipMode.SAMPLED)


class TestConditions(unittest.TestCase):
    def test_resolve_k(self):
        self.assertEqual(resolve_k(1, k=4), 4)
        self.assertEqual(resolve_k(2, s=10, e=1), 9)
        self.assertEqual(resolve_k(2, k=9, s=10, e=1), 9)
        with self.assertRaises(ParameterError):
            resolve_k(2, k=8, s=10, e=1)
        with self.assertRaises(ParameterError):
            resolve_k(1)
        with self.assertRaises(ParameterError):
            resolve_k(1, s=3)
        with self.assertRaises(ParameterError):
            resolve_k(5, s=1, e=0)
        with self.assertRaises(ParameterError):
            resolve_k(-1, k=2)

    def test_coefficients(self):
        table = RipTable.from_constants(default=0.1)
        self.assertAlmostEqual(a_coeff(2, 2, 1, table), 0.125, places=12)
        table = RipTable.from_constants(delta={2: 0.1}, theta={(2, 2): 0.0})
        self.assertAlmostEqual(k_coeff(2, 2, table), math.sqrt(1.1) / 0.9, places=12)
        self.assertAlmostEqual(k_coeff(2, 2, table), 1.16534, places=5)
        zeros = RipTable.zeros()
        self.assertEqual(a_coeff(3, 2, 1, zeros), 0.0)
        self.assertEqual(k_coeff(3, 2, zeros), 1.0)

    def test_coefficient_precondition(self):
        table = RipTable.from_constants(default=0.5)
        with self.assertRaises(ConditionViolatedError):
            a_coeff(2, 2, 1, table)
        with self.assertRaises(ConditionViolatedError):
            k_coeff(2, 2, table)

    def test_all_zero_constants_pass(self):
        for k, u in ((0, 0), (4, 1), (10, 3)):
            reports = check_all(RipTable.zeros(), k=k, u=u)
            self.assertEqual(len(reports), 5)
            for report in reports:
                self.assertEqual(report.verdict, Verdict.PASS, report.name)

    def test_theorem1_equality_fails(self):
        table = RipTable.from_constants(delta={4: 0.1, 2: 0.5, 3: 0.5}, default=0.0)
        report = check_theorem1(2, 1, table)
        self.assertEqual(report.verdict, Verdict.FAIL)
        lhs, threshold = report.parts["delta_2u+delta_k+theta_k,2u^2"]
        self.assertEqual((lhs, threshold), (1.0, 1.0))
        self.assertEqual(report.lhs, math.inf)
        self.assertEqual(report.inputs, {"k": 2, "u": 1})
        self.assertEqual(report.constants["delta_2"], 0.5)

    def test_corollary_one_fifth(self):
        table = RipTable.from_constants(delta={4: 0.2}, default=0.0)
        first, second, third = check_corollary1(2, 1, table)
        self.assertEqual(first.verdict, Verdict.PASS)
        self.assertEqual(second.verdict, Verdict.PASS)
        self.assertAlmostEqual(second.lhs, 0.08, places=12)
        self.assertEqual(third.verdict, Verdict.FAIL)
        self.assertEqual(third.name, "corollary1.one_fifth")
        loose = RipTable.from_constants(delta={4: 0.19}, default=0.0)
        self.assertEqual(check_corollary1(2, 1, loose)[2].verdict, Verdict.PASS)
        # u <= k is part of the one-fifth condition
        self.assertEqual(
            check_corollary1(0, 1, RipTable.zeros())[2].verdict, Verdict.FAIL
        )

    def test_verdicts_agree_at_the_extremes(self):
        k, u = 4, 1
        small = check_all(linear_table(0.001), k=k, u=u, s=4)
        self.assertTrue(all(r.passed for r in small))
        large = check_all(linear_table(0.3), k=k, u=u)
        self.assertTrue(all(r.verdict == Verdict.FAIL for r in large))

    def test_corollary_implies_theorem(self):
        for c in np.linspace(0.001, 0.2, 40):
            table = linear_table(float(c))
            theorem = check_theorem1(4, 1, table)
            corollary = check_corollary1(4, 1, table)
            if any(r.passed for r in corollary[:2]):
                self.assertTrue(theorem.passed, f"c={c}")

    def test_prop1(self):
        passing = RipTable.from_constants(delta={4: 0.99})
        self.assertEqual(check_prop1(2, 1, passing).verdict, Verdict.PASS)
        failing = RipTable.from_constants(delta={4: 1.0})
        self.assertEqual(check_prop1(2, 1, failing).verdict, Verdict.FAIL)
        sampled = RipTable.from_constants(delta={4: 0.99}, mode=RipMode.SAMPLED)
        report = check_prop1(2, 1, sampled)
        self.assertEqual(report.verdict, Verdict.INCONCLUSIVE)
        self.assertTrue(report.lower_bound)
        sampled_fail = RipTable.from_constants(delta={4: 1.2}, mode=RipMode.SAMPLED)
        self.assertEqual(check_prop1(2, 1, sampled_fail).verdict, Verdict.FAIL)
        self.assertEqual(check_prop1(None, 1, passing, s=2, e=1).inputs["k"], 2)

    def test_cs_conditions(self):
        table = RipTable.from_constants(delta={4: 0.45, 6: 0.5}, default=0.0)
        theta_cond, sqrt2, delta_sum = check_cs_conditions(2, table)
        self.assertEqual(theta_cond.verdict, Verdict.PASS)
        self.assertEqual(sqrt2.verdict, Verdict.FAIL)
        self.assertAlmostEqual(sqrt2.threshold, math.sqrt(2) - 1, places=12)
        self.assertEqual(delta_sum.verdict, Verdict.PASS)

        identity = RipTable.from_matrix(np.eye(8))
        reports = check_cs_conditions(2, identity)
        self.assertTrue(all(r.passed for r in reports))

    def test_report_to_dict(self):
        report = check_prop1(2, 1, RipTable.zeros())
        data = report.to_dict()
        self.assertEqual(data["verdict"], "pass")
        self.assertEqual(data["parts"], {"delta_k+2u": [0.0, 1.0]})
        self.assertFalse(data["lower_bound"])


def draw_known_support(rng, n, k, u, scale=10.0):
    """x on k known indices plus u unknown ones, with the split (T, Δ)."""
    N = rng.choice(n, size=k + u, replace=False)
    x = np.zeros(n)
    x[N] = scale * rng.standard_normal(k + u)
    return x, np.sort(N[:k]), np.sort(N[k:])


class TestRecoveryGuarantees(unittest.TestCase):
    def test_small_matrices_l0_and_modcs(self):
        k, u = 3, 1
        for seed in range(30):
            rng = np.random.default_rng(200 + seed)
            A = unit_columns(8, 10, 200 + seed)
            x, T, _ = draw_known_support(rng, 10, k, u)
            y = A @ x
            rip = RipTable.from_matrix(A)

            prop = check_prop1(k, u, rip)
            self.assertEqual(prop.verdict, Verdict.PASS, msg=f"seed {seed}")
            self.assertEqual(rip.delta_mode(k + 2 * u), RipMode.EXACT)

            l0 = solve_l0_bruteforce(A, y, T)
            self.assertIsNotNone(l0)
            self.assertTrue(l0.unique, msg=f"seed {seed}")
            self.assertEqual(l0.cardinality, u)
            np.testing.assert_allclose(l0.x_hat, x, atol=1e-7)

            report = check_theorem1(k, u, rip)
            self.assertNotEqual(report.verdict, Verdict.INCONCLUSIVE)
            if report.passed:
                result = solve_modcs(A, y, T)
                np.testing.assert_allclose(result.x_hat, l0.x_hat, atol=1e-6)

    @unittest.skipUnless(MODCS_SLOW_TESTS, "set MODCS_SLOW_TESTS=1 for full-size runs")
    def test_theorem_on_10x20(self):
        k, u = 4, 1
        A = unit_columns(10, 20, 31)
        report = check_theorem1(k, u, RipTable.from_matrix(A))
        self.assertFalse(report.lower_bound)
        self.assertIn(report.verdict, (Verdict.PASS, Verdict.FAIL))
        if not report.passed:
            return
        rng = np.random.default_rng(32)
        for _ in range(4):
            x, T, _ = draw_known_support(rng, 20, k, u)
            magnitudes = np.abs(x)
            for signs in itertools.product((-1.0, 1.0), repeat=k + u):
                x_signed = np.zeros(20)
                support = np.flatnonzero(magnitudes)
                x_signed[support] = np.asarray(signs) * magnitudes[support]
                result = solve_modcs(A, A @ x_signed, T)
                self.assertTrue(is_exact(x_signed, result.x_hat))


class TestBounds(unittest.TestCase):
    def test_entropy(self):
        self.assertAlmostEqual(entropy(0.5), math.log(2), places=12)
        self.assertEqual(entropy(0.0), 0.0)
        self.assertEqual(entropy(1.0), 0.0)
        with self.assertRaises(ParameterError):
            entropy(1.5)

    def test_g_bound(self):
        self.assertAlmostEqual(g_bound(2.0, 0.1), 5.695335, places=5)
        self.assertEqual(g_bound(3.0, 0.0), 0.0)
        with self.assertRaises(ParameterError):
            g_bound(0.0, 0.1)
        with self.assertRaises(ParameterError):
            g_bound(2.0, -0.1)

    def test_rho_at_zero_sparsity(self):
        self.assertEqual(rho_modcs(100, 1000, 0, 0, 0), 0.0)
        self.assertEqual(rho_cs(100, 1000, 0), 0.0)
        self.assertEqual(rho_cs2(100, 1000, 0), 0.0)

    def test_rho_depends_on_ratios_only(self):
        self.assertAlmostEqual(
            rho_modcs(30, 100, 5, 1, 1), rho_modcs(300, 1000, 50, 10, 10), places=12
        )
        self.assertAlmostEqual(rho_cs(30, 100, 5), rho_cs(3, 10, 0.5), places=12)

    def test_thresholds(self):
        self.assertEqual(rule_threshold(BoundRule.MODCS), 1.0)
        self.assertEqual(rule_threshold(BoundRule.CS), 1.0)
        self.assertAlmostEqual(rule_threshold(BoundRule.CS2), math.sqrt(2) - 1)

    def test_modcs_tolerates_more_sparsity(self):
        for m_over_n in (0.1, 0.3, 0.5):
            modcs = max_sparsity_fraction(m_over_n, BoundRule.MODCS)
            cs = max_sparsity_fraction(m_over_n, BoundRule.CS)
            cs2 = max_sparsity_fraction(m_over_n, BoundRule.CS2)
            self.assertGreater(modcs, cs, m_over_n)
            self.assertGreater(modcs, cs2, m_over_n)
            self.assertLess(rho_curve(BoundRule.MODCS, m_over_n, [modcs])[0][1], 1.0)

    def test_fraction_grows_with_measurements(self):
        low = max_sparsity_fraction(0.3, BoundRule.MODCS)
        high = max_sparsity_fraction(0.5, BoundRule.MODCS)
        self.assertGreater(high, low)

    def test_integer_sizes(self):
        for rule in BoundRule:
            self.assertEqual(max_sparsity_fraction(0.1, rule, n=1000), 0.0)

    def test_rejects_bad_ratio(self):
        with self.assertRaises(ParameterError):
            max_sparsity_fraction(0.0, BoundRule.CS)
        with self.assertRaises(ParameterError):
            max_sparsity_fraction(1.5, BoundRule.CS)

    def test_curve(self):
        curve = rho_curve("cs", 0.3, [0.0, 0.01, 0.02])
        self.assertEqual([frac for frac, _ in curve], [0.0, 0.01, 0.02])
        values = [rho for _, rho in curve]
        self.assertEqual(values[0], 0.0)
        self.assertEqual(values, sorted(values))


if __name__ == "__main__":
    unittest.main()
