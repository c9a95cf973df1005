"""
Tests for index sets, operators, metrics and the convex programs.
Test Plan:
```
MODCS_DEBUG=1 python -m unittest tests.test_core -v
```
"""

import unittest

import numpy as np
import scipy.linalg

from modcs.errors import EnumerationBudgetError, ParameterError, ZeroSignalError
from modcs.operators import (
    approximation_indices,
    as_dense,
    compose_measurement,
    dwt2_db4,
    gaussian_operator,
    idwt2_db4,
    IdentityOperator,
    operator_from_spec,
    partial_fourier_operator,
    PartialFourierOperator,
    sparsify,
    synthetic_image,
    WaveletSynthesis,
)
from modcs.solvers.metrics import is_exact, nrmse
from modcs.solvers.oracle import solve_l0_bruteforce, solve_lp_reference
from modcs.solvers.programs import (
    debias,
    dual_certificate,
    kkt_residuals,
    ls_on_support,
    regmodcs_objective,
    solve_bp,
    solve_modcs,
    solve_regmodcs,
    SolverConfig,
)
from modcs.shared_vars import MODCS_SLOW_TESTS
from modcs.supports import (
    build_support_model,
    energy_support,
    estimate_support,
    support_change_series,
    support_change_stats,
    support_errors,
    SupportModel,
)
from modcs.types import SolverStatus


def sparse_instance(m, n, s, seed):
    """A column-normalized Gaussian A and an s-sparse x with y = Ax."""
    rng = np.random.default_rng(seed)
    A = gaussian_operator(m, n, seed).to_dense()
    N = np.sort(rng.choice(n, size=s, replace=False))
    x = np.zeros(n)
    x[N] = rng.normal(0.0, 10.0, size=s)
    return A, x, N


class TestSupports(unittest.TestCase):
    def test_estimate_support(self):
        np.testing.assert_array_equal(estimate_support([3, 0.1, -2], 1), [0, 2])
        self.assertEqual(estimate_support([0, 0, 0], 0).size, 0)
        self.assertEqual(estimate_support([1, 1, 1], 1).size, 0)
        with self.assertRaises(ParameterError):
            estimate_support([1.0], -1.0)

    def test_energy_support(self):
        np.testing.assert_array_equal(energy_support([3, 2, 1], 90), [0, 1])
        np.testing.assert_array_equal(energy_support([5, 0, 0], 99), [0])
        np.testing.assert_array_equal(energy_support([1, 1, 1, 1], 100), [0, 1, 2, 3])
        with self.assertRaisesRegex(ZeroSignalError, "zero signal"):
            energy_support([0.0, 0.0], 99)

    def test_estimate_support_nested_in_alpha(self):
        x = np.random.default_rng(20).normal(0.0, 3.0, size=64)
        previous = None
        for alpha in (0.0, 0.5, 1.0, 4.0, 9.0, 25.0):
            current = set(estimate_support(x, alpha).tolist())
            if previous is not None:
                self.assertLessEqual(current, previous, msg=f"alpha={alpha}")
            previous = current

    def test_energy_support_is_minimal(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            x = rng.standard_normal(40) * rng.exponential(1.0, size=40)
            total = np.sum(x**2)
            for b in (50.0, 90.0, 99.0):
                S = energy_support(x, b)
                kept = np.sum(x[S] ** 2)
                self.assertGreaterEqual(kept, b / 100.0 * total * (1 - 1e-12))
                smallest = np.min(x[S] ** 2)
                self.assertLess(kept - smallest, b / 100.0 * total)

    def test_support_change_stats_reversed(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            a = rng.choice(50, size=rng.integers(0, 20), replace=False)
            b = rng.choice(50, size=rng.integers(0, 20), replace=False)
            added, removed = support_change_stats(a, b)
            self.assertEqual(support_change_stats(b, a), (removed, added))

    def test_support_change_stats(self):
        self.assertEqual(support_change_stats([1, 2, 3], [2, 3, 4]), (1, 1))
        self.assertEqual(support_change_stats([4, 7], [4, 7]), (0, 0))
        self.assertEqual(support_change_stats([1, 2], []), (2, 0))
        self.assertEqual(
            support_change_series([[0, 1], [1, 2], [1, 2, 3]]), [(1, 1), (1, 0)]
        )

    def test_build_support_model(self):
        rng = np.random.default_rng(0)
        N = np.sort(rng.choice(256, size=26, replace=False))

        exact = build_support_model(256, N, 0, 0, rng)
        np.testing.assert_array_equal(exact.T, N)
        self.assertEqual(exact.u, 0)
        self.assertEqual(exact.e, 0)

        cs_case = build_support_model(256, N, 26, 0, rng)
        self.assertEqual(cs_case.k, 0)

        model = build_support_model(256, N, 2, 2, rng)
        self.assertEqual(model.k, 26)
        np.testing.assert_array_equal(model.N, N)
        self.assertEqual(support_errors(N, model.T), (2, 2))

        with self.assertRaises(ParameterError):
            build_support_model(256, N, 27, 0, rng)
        with self.assertRaises(ParameterError):
            build_support_model(10, [0, 1, 2], 0, 8, rng)

    def test_support_model_validation(self):
        with self.assertRaises(ParameterError):
            SupportModel(n=10, T=[1, 2], delta=[2])
        with self.assertRaises(ParameterError):
            SupportModel(n=10, T=[1, 2], delta_e=[3])
        model = SupportModel(n=10, T=[1, 2, 5], delta=[7], delta_e=[5])
        again = SupportModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(again.N, [1, 2, 7])
        self.assertEqual(again.s, 3)


class TestOperators(unittest.TestCase):
    def _check_adjoint(self, op, draws=20, seed=0):
        rng = np.random.default_rng(seed)
        for _ in range(draws):
            x = rng.standard_normal(op.n)
            y = rng.standard_normal(op.m)
            lhs = float(op.apply(x) @ y)
            rhs = float(x @ op.adjoint(y))
            scale = np.linalg.norm(op.apply(x)) * np.linalg.norm(y) + 1e-300
            self.assertLess(abs(lhs - rhs) / scale, 1e-12)

    def test_gaussian_operator(self):
        op = gaussian_operator(4, 8, seed=7)
        A = op.to_dense()
        np.testing.assert_allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12)
        np.testing.assert_array_equal(A, gaussian_operator(4, 8, seed=7).to_dense())
        np.testing.assert_array_equal(A, operator_from_spec(op.spec()).to_dense())
        np.testing.assert_array_equal(op.column(3), A[:, 3])
        with self.assertRaises(ParameterError):
            gaussian_operator(9, 8, seed=7)

    def test_partial_fourier_dc(self):
        op = PartialFourierOperator(4, [0])
        out = op.apply(np.ones(16))
        self.assertAlmostEqual(out[0], 4.0, places=12)
        self.assertAlmostEqual(out[1], 0.0, places=12)
        with self.assertRaises(ParameterError):
            PartialFourierOperator(4, [1, 1])

    def test_adjoint_consistency(self):
        H = partial_fourier_operator(8, 20, seed=3)
        W = WaveletSynthesis(8)
        for op in (
            gaussian_operator(10, 64, seed=1),
            H,
            W,
            compose_measurement(H, W),
            compose_measurement(gaussian_operator(12, 64, seed=2), W),
        ):
            with self.subTest(kind=op.kind):
                self._check_adjoint(op)

    def test_dwt_orthonormal(self):
        rng = np.random.default_rng(4)
        image = rng.standard_normal((16, 16))
        coeffs = dwt2_db4(image)
        np.testing.assert_allclose(idwt2_db4(coeffs), image, atol=1e-10)
        self.assertAlmostEqual(
            np.sum(coeffs**2), np.sum(image**2), delta=1e-9 * np.sum(image**2)
        )
        with self.assertRaises(ParameterError):
            dwt2_db4(np.zeros((10, 10)))

    def test_dwt_random_images(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            image = rng.standard_normal((32, 32))
            coeffs = dwt2_db4(image)
            np.testing.assert_allclose(idwt2_db4(coeffs), image, atol=1e-10)
            energy = np.sum(image**2)
            self.assertLess(abs(np.sum(coeffs**2) - energy), 1e-10 * energy)

    def test_partial_fourier_full_mask_preserves_norm(self):
        op = PartialFourierOperator(4, range(16))
        rng = np.random.default_rng(24)
        for _ in range(10):
            x = rng.standard_normal(16)
            self.assertAlmostEqual(
                np.linalg.norm(op.apply(x)), np.linalg.norm(x), places=12
            )

    def test_composed_column_is_fourier_of_wavelet_atom(self):
        mask = np.random.default_rng(25).choice(64, size=20, replace=False)
        op = compose_measurement(PartialFourierOperator(8, mask), WaveletSynthesis(8))
        for j in (0, 5, 17, 40, 63):
            atom = np.zeros(64)
            atom[j] = 1.0
            image = idwt2_db4(atom.reshape(8, 8))
            spectrum = np.fft.fft2(image, norm="ortho").ravel()[mask]
            expected = np.concatenate([spectrum.real, spectrum.imag])
            np.testing.assert_allclose(op.column(j), expected, atol=1e-12)
            np.testing.assert_allclose(op.apply(atom), expected, atol=1e-12)

    def test_dense_matches_apply(self):
        H = partial_fourier_operator(8, 20, seed=4)
        W = WaveletSynthesis(8)
        rng = np.random.default_rng(26)
        for op in (H, W, compose_measurement(H, W)):
            with self.subTest(kind=op.kind):
                dense = op.to_dense()
                for _ in range(5):
                    x = rng.standard_normal(op.n)
                    np.testing.assert_allclose(dense @ x, op.apply(x), atol=1e-12)

    def test_dwt_constant_image(self):
        coeffs = dwt2_db4(np.full((16, 16), 3.0))
        approx = approximation_indices(16)
        self.assertEqual(approx.size, 16)
        detail = np.delete(coeffs.ravel(), approx)
        self.assertLess(np.max(np.abs(detail)), 1e-10)

    def test_approximation_indices(self):
        self.assertEqual(approximation_indices(32).size, 64)

    def test_compose_identity(self):
        H = gaussian_operator(5, 9, seed=0)
        self.assertIs(compose_measurement(H, IdentityOperator(9)), H)
        with self.assertRaises(ParameterError):
            compose_measurement(H, IdentityOperator(8))

    def test_sparsify(self):
        image = synthetic_image(16, np.random.default_rng(5))
        np.testing.assert_allclose(sparsify(image, 100), image, atol=1e-10)
        kept = sparsify(image, 99)
        self.assertGreaterEqual(np.sum(kept**2), 0.99 * np.sum(image**2) - 1e-9)


class TestMetrics(unittest.TestCase):
    def test_nrmse(self):
        x = np.array([3.0, 4.0])
        self.assertEqual(nrmse(x, x), 0.0)
        self.assertEqual(nrmse(x, np.zeros(2)), 1.0)
        self.assertAlmostEqual(nrmse(x, [0.0, 4.0]), 0.6)
        with self.assertRaises(ZeroSignalError):
            nrmse(np.zeros(2), x)

    def test_is_exact(self):
        x = np.array([1.0, 0.0])
        self.assertTrue(is_exact(x, x))
        self.assertFalse(is_exact(x, [1.0 + 1e-5, 0.0]))
        self.assertTrue(is_exact(x, [1.0 + 1e-6, 0.0]))


class TestSolvers(unittest.TestCase):
    def test_known_support_is_exact(self):
        A, x, N = sparse_instance(20, 40, 4, seed=0)
        result = solve_modcs(A, A @ x, N)
        self.assertEqual(result.status, SolverStatus.CONVERGED)
        np.testing.assert_allclose(result.x_hat, x, atol=1e-8)

    def test_empty_known_set_is_bp(self):
        A, x, _ = sparse_instance(15, 30, 3, seed=1)
        y = A @ x
        mod = solve_modcs(A, y, [])
        bp = solve_bp(A, y)
        np.testing.assert_allclose(mod.x_hat, bp.x_hat, atol=1e-8)
        self.assertEqual(bp.program, "bp")

    def test_zero_measurements(self):
        A, _, _ = sparse_instance(6, 12, 2, seed=2)
        result = solve_bp(A, np.zeros(6))
        np.testing.assert_array_equal(result.x_hat, np.zeros(12))

    def test_objective_matches_lp_reference(self):
        for seed in range(3):
            A, x, N = sparse_instance(10, 24, 5, seed=seed)
            y = A @ x
            T = N[:2]
            with self.subTest(seed=seed):
                ours = solve_modcs(A, y, T)
                ref = solve_lp_reference(A, y, T)
                self.assertEqual(ref.status, SolverStatus.CONVERGED)
                self.assertLessEqual(
                    abs(ours.objective - ref.objective), 1e-6 * (1 + ref.objective)
                )
                self.assertLess(ours.primal_residual, 1e-8)

    def test_inconsistent_system_is_infeasible(self):
        A = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
        result = solve_modcs(A, np.array([1.0, 2.0, 0.0]), [0])
        self.assertEqual(result.status, SolverStatus.INFEASIBLE)
        self.assertFalse(result.converged)

    def test_max_iter_status(self):
        A, x, N = sparse_instance(10, 24, 5, seed=3)
        result = solve_modcs(A, A @ x, N[:1], SolverConfig(max_iter=1))
        self.assertEqual(result.status, SolverStatus.MAX_ITER)

    def _certified_instance(self):
        # n=8, m=6, s=3, u=1: the first instance whose dual certificate holds
        for seed in range(50):
            A, x, N = sparse_instance(6, 8, 3, seed=seed)
            T = N[:2]
            if dual_certificate(A, x, T).certified:
                return A, x, N, T
        self.fail("no certified instance among 50 seeds")

    def test_certified_instance_matches_l0_oracle(self):
        A, x, N, T = self._certified_instance()
        y = A @ x
        result = solve_modcs(A, y, T)
        np.testing.assert_allclose(result.x_hat, x, atol=1e-7)
        l0 = solve_l0_bruteforce(A, y, T)
        self.assertEqual(l0.cardinality, 1)
        self.assertTrue(l0.unique)
        np.testing.assert_allclose(l0.x_hat, x, atol=1e-7)

    def test_kkt_residuals(self):
        A, x, N, T = self._certified_instance()
        result = solve_modcs(A, A @ x, T)
        kkt = kkt_residuals(A, result, T)
        self.assertLess(kkt["on_T"], 1e-6)
        self.assertLessEqual(kkt["off_support"], 1 + 1e-6)
        self.assertLess(kkt["sign_mismatch"], 1e-6)

    def test_dual_certificate_needs_full_rank(self):
        A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        cert = dual_certificate(A, np.array([1.0, 0.0, 0.0]), [0, 1])
        self.assertFalse(cert.full_rank)
        self.assertFalse(cert.certified)

    def test_l0_oracle(self):
        A, x, N = sparse_instance(8, 10, 3, seed=4)
        l0 = solve_l0_bruteforce(A, A @ x, N)
        self.assertEqual(l0.cardinality, 0)
        np.testing.assert_allclose(l0.x_hat, x, atol=1e-8)
        with self.assertRaises(EnumerationBudgetError):
            solve_l0_bruteforce(A, A @ x, [], budget=5)

    def test_regmodcs_zero_gamma_is_modcs(self):
        A, x, N = sparse_instance(10, 24, 5, seed=5)
        y = A @ x
        T = N[:3]
        mu = np.zeros(T.size)
        reg = solve_regmodcs(A, y, T, mu, 0.0)
        mod = solve_modcs(A, y, T)
        np.testing.assert_allclose(reg.x_hat, mod.x_hat, atol=1e-7)
        with self.assertRaises(ParameterError):
            solve_regmodcs(A, y, T, mu, -1.0)
        with self.assertRaises(ParameterError):
            solve_regmodcs(A, y, T, np.zeros(2), 1.0)

    def test_regmodcs_beats_feasible_points(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((4, 6))
        y = rng.standard_normal(4)
        T = np.array([0, 2])
        mu = np.array([1.0, -0.5])
        gamma = 0.7
        result = solve_regmodcs(A, y, T, mu, gamma)
        self.assertEqual(result.status, SolverStatus.CONVERGED)
        best = regmodcs_objective(result.x_hat, T, mu, gamma)
        particular = scipy.linalg.lstsq(A, y)[0]
        null = scipy.linalg.null_space(A)
        for _ in range(200):
            z = particular + null @ rng.normal(0.0, 2.0, size=null.shape[1])
            self.assertLessEqual(best, regmodcs_objective(z, T, mu, gamma) + 1e-7)

    def test_regmodcs_objective_against_other_solutions(self):
        A, x, N = sparse_instance(14, 32, 6, seed=27)
        y = A @ x
        T = N[:4]
        mu = x[T] + np.random.default_rng(27).normal(0.0, 1.0, size=T.size)
        candidates = [
            solve_modcs(A, y, T).x_hat,
            scipy.linalg.lstsq(A, y)[0],
        ]
        previous = 0.0
        for gamma in (0.01, 0.1, 1.0, 10.0):
            result = solve_regmodcs(A, y, T, mu, gamma)
            self.assertEqual(result.status, SolverStatus.CONVERGED)
            best = regmodcs_objective(result.x_hat, T, mu, gamma)
            for z in candidates:
                self.assertLessEqual(best, regmodcs_objective(z, T, mu, gamma) + 1e-7)
            # the optimal value cannot drop when the penalty grows
            self.assertGreaterEqual(best, previous - 1e-7, msg=f"gamma={gamma}")
            previous = best

    def test_scaling_equivariance(self):
        A, x, N = sparse_instance(16, 40, 5, seed=28)
        y = A @ x
        T = N[:2]
        base = solve_modcs(A, y, T).x_hat
        for c in (1e-2, 3.0, 1e2):
            scaled = solve_modcs(c * A, c * y, T)
            np.testing.assert_allclose(scaled.x_hat, base, atol=1e-7)

    def test_ls_on_support_and_debias(self):
        A, x, N = sparse_instance(12, 20, 3, seed=7)
        y = A @ x
        np.testing.assert_allclose(ls_on_support(A, y, N), x, atol=1e-10)
        noisy = x.copy()
        noisy[np.setdiff1d(np.arange(20), N)[:4]] = 1e-4
        np.testing.assert_allclose(debias(A, y, noisy, 1e-6), x, atol=1e-10)

    def test_result_serializes(self):
        A, x, N = sparse_instance(8, 16, 2, seed=8)
        payload = solve_modcs(A, A @ x, N).to_dict()
        self.assertEqual(payload["status"], "converged")
        self.assertEqual(len(payload["x_hat"]), 16)
        self.assertEqual(len(payload["dual"]), 8)

    def test_operator_input(self):
        op = gaussian_operator(12, 24, seed=9)
        A = as_dense(op)
        _, x, N = sparse_instance(12, 24, 3, seed=9)
        np.testing.assert_allclose(
            solve_modcs(op, A @ x, N).x_hat, solve_modcs(A, A @ x, N).x_hat
        )


@unittest.skipUnless(MODCS_SLOW_TESTS, "set MODCS_SLOW_TESTS=1 for full-size runs")
class TestSolverAgreement(unittest.TestCase):
    def test_objectives_match_generic_lp(self):
        rng = np.random.default_rng(2024)
        for seed in range(50):
            n = int(rng.integers(8, 21))
            m = int(rng.integers(n // 3 + 1, n))
            s = int(rng.integers(1, m // 2 + 2))
            A, x, N = sparse_instance(m, n, s, seed=seed)
            y = A @ x
            T = N[: int(rng.integers(0, s + 1))]
            for name, ours, T_ref in (
                ("modcs", solve_modcs(A, y, T), T),
                ("bp", solve_bp(A, y), ()),
            ):
                ref = solve_lp_reference(A, y, T_ref)
                with self.subTest(seed=seed, program=name):
                    self.assertEqual(ours.status, SolverStatus.CONVERGED)
                    self.assertLessEqual(
                        abs(ours.objective - ref.objective), 1e-6 * (1 + ref.objective)
                    )


if __name__ == "__main__":
    unittest.main()
