import math

import numpy as np
import pytest

from lpmkl.kernels import (FeatureGroupMatrix, KernelMatrix, center,
                           chi2_cross_kernel, chi2_kernel, combine_kernels,
                           feature_space_variance, gaussian_kernel,
                           mean_chi2_bandwidth, mean_euclidean_distance,
                           multiplicative_normalize, product_kernel,
                           read_kernel, write_kernel)

import oracles


class TestChi2Kernel:
    def test_identical_rows_give_one(self):
        X = np.array([[0.2, 0.8], [0.2, 0.8]])
        K = chi2_kernel(X, bandwidth=1.0)
        assert K.entries[0, 1] == pytest.approx(1.0)

    def test_unit_vectors(self):
        # distance (1-0)^2/1 + (0-1)^2/1 = 2, bandwidth 2 -> exp(-1)
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        K = chi2_kernel(X, bandwidth=2.0)
        assert K.entries[0, 1] == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_matches_double_loop(self, rng):
        X = rng.uniform(size=(3, 2))
        K = chi2_kernel(X, bandwidth=0.7)
        ref = oracles.chi2_kernel_loops(X, 0.7)
        np.testing.assert_allclose(K.entries, ref, atol=1e-12)

    def test_zero_over_zero_convention(self):
        X = np.array([[0.0, 1.0], [0.0, 2.0]])
        K = chi2_kernel(X, bandwidth=1.0)
        # first coordinate contributes nothing
        assert K.entries[0, 1] == pytest.approx(math.exp(-1.0 / 3.0))

    def test_rejects_negative_features(self):
        with pytest.raises(ValueError):
            chi2_kernel(np.array([[-0.1, 1.0]]), bandwidth=1.0)

    def test_rejects_bad_bandwidth(self):
        with pytest.raises(ValueError):
            chi2_kernel(np.array([[1.0, 0.0]]), bandwidth=0.0)

    def test_unit_diagonal(self, rng):
        X = rng.uniform(size=(6, 4))
        K = chi2_kernel(X, bandwidth=1.3)
        np.testing.assert_array_equal(np.diag(K.entries), np.ones(6))


class TestMeanChi2Bandwidth:
    def test_single_pair(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert mean_chi2_bandwidth(X) == pytest.approx(2.0)

    def test_three_rows_hand_sum(self):
        # rows chosen so pairwise distances are easy to write out
        X = np.array([[2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
        d01 = oracles.chi2_distance_loops(X[0], X[1])
        d02 = oracles.chi2_distance_loops(X[0], X[2])
        d12 = oracles.chi2_distance_loops(X[1], X[2])
        assert mean_chi2_bandwidth(X) == pytest.approx((d01 + d02 + d12) / 3.0)

    def test_rejects_single_row(self):
        with pytest.raises(ValueError):
            mean_chi2_bandwidth(np.array([[1.0, 2.0]]))

    def test_rejects_identical_rows(self):
        with pytest.raises(ValueError):
            mean_chi2_bandwidth(np.ones((4, 3)))


class TestGaussianKernel:
    def test_identical_rows_give_one(self):
        K = gaussian_kernel(np.array([[1.5], [1.5]]), width=2.0)
        assert K.entries[0, 1] == pytest.approx(1.0)

    def test_one_dimensional_pair(self):
        K = gaussian_kernel(np.array([[0.0], [2.0]]), width=2.0)
        assert K.entries[0, 1] == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_psd(self, rng):
        X = rng.normal(size=(5, 3))
        K = gaussian_kernel(X, width=1.0)
        eigs = np.linalg.eigvalsh(K.entries)
        assert eigs.min() >= -1e-9

    def test_matches_double_loop(self, rng):
        X = rng.normal(size=(4, 3))
        K = gaussian_kernel(X, width=0.8)
        np.testing.assert_allclose(
            K.entries, oracles.gaussian_kernel_loops(X, 0.8), atol=1e-12)

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            gaussian_kernel(np.array([[1.0]]), width=-1.0)


class TestProductKernel:
    def test_single_factor_identity(self, rng):
        X = rng.uniform(size=(4, 2))
        K = chi2_kernel(X, 1.0, name="a")
        P = product_kernel([K])
        np.testing.assert_array_equal(P.entries, K.entries)

    def test_product_equals_concatenated_blocks(self, rng):
        # chi2 kernel factorizes over feature blocks with per-block widths
        A = rng.uniform(size=(4, 3))
        B = rng.uniform(size=(4, 2))
        KA = chi2_kernel(A, 0.9, name="a")
        KB = chi2_kernel(B, 1.7, name="b")
        prod = product_kernel([KA, KB])
        n = 4
        ref = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                ref[i, j] = math.exp(
                    -oracles.chi2_distance_loops(A[i], A[j]) / 0.9
                    - oracles.chi2_distance_loops(B[i], B[j]) / 1.7)
        np.testing.assert_allclose(prod.entries, ref, atol=1e-12)

    def test_all_ones_is_neutral(self, rng):
        X = rng.uniform(size=(3, 2))
        K = chi2_kernel(X, 1.0, name="a")
        ones = KernelMatrix(np.ones((3, 3)), name="ones")
        np.testing.assert_array_equal(product_kernel([K, ones]).entries,
                                      K.entries)

    def test_size_mismatch(self, rng):
        K1 = gaussian_kernel(rng.normal(size=(3, 2)), 1.0)
        K2 = gaussian_kernel(rng.normal(size=(4, 2)), 1.0)
        with pytest.raises(ValueError):
            product_kernel([K1, K2])

    def test_records_factor_names(self, rng):
        X = rng.uniform(size=(3, 2))
        P = product_kernel([chi2_kernel(X, 1.0, name="a"),
                            chi2_kernel(X, 2.0, name="b")])
        assert P.name == "a*b"


class TestMultiplicativeNormalize:
    def test_identity_two_points(self):
        # statistic of I at n=2 is 1 - 1/2, so the output is 2 I
        K = multiplicative_normalize(KernelMatrix(np.eye(2)))
        np.testing.assert_allclose(K.entries, 2.0 * np.eye(2))
        assert K.normalized

    def test_output_statistic_is_one(self, rng):
        X = rng.normal(size=(7, 3))
        K = multiplicative_normalize(gaussian_kernel(X, 1.1))
        assert feature_space_variance(K) == pytest.approx(1.0, abs=1e-9)

    def test_constant_kernel_rejected(self):
        with pytest.raises(ValueError):
            multiplicative_normalize(KernelMatrix(np.ones((3, 3))))

    def test_scale_invariance(self, rng):
        X = rng.normal(size=(6, 2))
        K = gaussian_kernel(X, 0.9)
        a = multiplicative_normalize(K).entries
        b = multiplicative_normalize(KernelMatrix(3.7 * K.entries)).entries
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestCenter:
    def test_constant_kernel_centers_to_zero(self):
        K = center(KernelMatrix(np.ones((4, 4))))
        np.testing.assert_allclose(K.entries, 0.0, atol=1e-12)

    def test_row_sums_vanish(self, rng):
        K = center(gaussian_kernel(rng.normal(size=(6, 3)), 1.0))
        np.testing.assert_allclose(K.entries.sum(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(K.entries.sum(axis=1), 0.0, atol=1e-9)

    def test_idempotent(self, rng):
        K = gaussian_kernel(rng.normal(size=(5, 2)), 1.0)
        once = center(K)
        twice = center(once)
        np.testing.assert_allclose(twice.entries, once.entries, atol=1e-12)

    def test_matches_explicit_h_product(self, rng):
        K = gaussian_kernel(rng.normal(size=(5, 4)), 1.3)
        np.testing.assert_allclose(center(K).entries,
                                   oracles.center_loops(K.entries),
                                   atol=1e-12)


class TestKernelMatrixInvariants:
    def test_rejects_asymmetric(self):
        bad = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ValueError):
            KernelMatrix(bad)

    def test_rejects_non_finite(self):
        bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(ValueError):
            KernelMatrix(bad)

    def test_operations_preserve_symmetry(self, rng):
        X = rng.uniform(size=(8, 3))
        for K in (chi2_kernel(X, 1.0), gaussian_kernel(X, 1.0)):
            for out in (center(K), multiplicative_normalize(K)):
                asym = np.max(np.abs(out.entries - out.entries.T))
                assert asym <= 1e-9

    def test_immutable(self, rng):
        K = gaussian_kernel(rng.normal(size=(3, 2)), 1.0)
        with pytest.raises(ValueError):
            K.entries[0, 0] = 5.0

    def test_feature_matrix_validation(self):
        with pytest.raises(ValueError):
            FeatureGroupMatrix(np.array([[np.inf]]))


class TestCombine:
    def test_weighted_sum(self, rng):
        A = gaussian_kernel(rng.normal(size=(4, 2)), 1.0)
        B = gaussian_kernel(rng.normal(size=(4, 2)), 2.0)
        out = combine_kernels([A, B], [0.25, 0.5])
        np.testing.assert_allclose(out, 0.25 * A.entries + 0.5 * B.entries)


class TestKernelFiles:
    def test_kmx_roundtrip(self, tmp_path, rng):
        K = gaussian_kernel(rng.normal(size=(5, 3)), 1.0, name="demo")
        path = tmp_path / "demo.kmx"
        write_kernel(path, K)
        back = read_kernel(path)
        np.testing.assert_array_equal(back.entries, K.entries)
        assert back.name == "demo"

    def test_kmx_layout(self, tmp_path):
        K = KernelMatrix(np.array([[1.0, 0.25], [0.25, 2.0]]))
        path = tmp_path / "k.kmx"
        write_kernel(path, K)
        raw = path.read_bytes()
        assert raw[:4] == b"KMX1"
        assert int.from_bytes(raw[4:8], "little") == 2
        vals = np.frombuffer(raw[8:], dtype="<f8")
        np.testing.assert_array_equal(vals, [1.0, 0.25, 0.25, 2.0])

    def test_csv_fallback(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("1.0,0.5\n0.5,1.0\n")
        K = read_kernel(path)
        np.testing.assert_array_equal(K.entries,
                                      np.array([[1.0, 0.5], [0.5, 1.0]]))

    def test_truncated_kmx_rejected(self, tmp_path):
        path = tmp_path / "bad.kmx"
        path.write_bytes(b"KMX1" + (2).to_bytes(4, "little") + b"\x00" * 8)
        with pytest.raises(ValueError):
            read_kernel(path)


class TestDistanceHeuristics:
    def test_mean_euclidean_two_points(self):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert mean_euclidean_distance(X) == pytest.approx(5.0)

    def test_cross_kernel_consistency(self, rng):
        X = rng.uniform(size=(5, 3))
        K = chi2_kernel(X, 1.2)
        cross = chi2_cross_kernel(X, X, 1.2)
        np.testing.assert_allclose(cross, K.entries, atol=1e-12)
