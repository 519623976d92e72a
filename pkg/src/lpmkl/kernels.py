"""Kernel matrix construction, normalization, centering, and file I/O.

All kernels are dense, symmetric, row-major float64 matrices.  The module
owns the two data types shared by the rest of the package: `KernelMatrix`
(an n-by-n similarity matrix with provenance metadata) and
`FeatureGroupMatrix` (an n-by-d block of raw features).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-9

# "KMX1" kernel file: 4-byte magic, uint32 little-endian n, then n*n
# float64 little-endian values in row-major order.
_KMX_MAGIC = b"KMX1"


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric similarity matrix with a provenance tag."""

    entries: np.ndarray
    name: str = ""
    normalized: bool = False

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"kernel must be square, got shape {entries.shape}")
        if entries.shape[0] < 1:
            raise ValueError("kernel must have n >= 1")
        if not np.all(np.isfinite(entries)):
            raise ValueError(f"kernel {self.name!r} contains non-finite entries")
        asym = float(np.max(np.abs(entries - entries.T))) if entries.size else 0.0
        if asym > SYMMETRY_TOL:
            raise ValueError(
                f"kernel {self.name!r} is not symmetric (max |K - K^T| = {asym:.3e})"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class FeatureGroupMatrix:
    """One group of raw features, n examples by d dimensions."""

    values: np.ndarray
    group_id: int = 0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("feature matrix must be 2-d")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("feature matrix needs n >= 1 and d >= 1")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _as_features(X) -> np.ndarray:
    if isinstance(X, FeatureGroupMatrix):
        return X.values
    return np.ascontiguousarray(X, dtype=np.float64)


def _symmetrize(K: np.ndarray) -> np.ndarray:
    return (K + K.T) / 2.0


def chi2_distances(A, B=None, chunk: int = 512) -> np.ndarray:
    """Pairwise chi-square distances sum_d (a_d - b_d)^2 / (a_d + b_d).

    Terms with a_d + b_d == 0 contribute zero (both histogram bins empty).
    Entries must be nonnegative.
    """
    A = _as_features(A)
    B = A if B is None else _as_features(B)
    if np.min(A) < 0 or np.min(B) < 0:
        raise ValueError("chi-square distance requires nonnegative features")
    if A.shape[1] != B.shape[1]:
        raise ValueError("feature dimensions differ")
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    for start in range(0, A.shape[0], chunk):
        a = A[start:start + chunk, None, :]
        diff = a - B[None, :, :]
        denom = a + B[None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(denom > 0, diff * diff / denom, 0.0)
        out[start:start + chunk] = terms.sum(axis=2)
    return out


def mean_chi2_bandwidth(X) -> float:
    """Mean chi-square distance over all unordered example pairs.

    The standard bandwidth heuristic for the chi-square kernel.  Rejects
    inputs with fewer than two examples and degenerate all-identical inputs
    (the bandwidth must be positive).
    """
    X = _as_features(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("bandwidth heuristic needs at least two examples")
    D = chi2_distances(X)
    total = (D.sum() - np.trace(D)) / 2.0
    mean = total / (n * (n - 1) / 2.0)
    if mean <= 0.0:
        raise ValueError("all examples identical: mean chi-square distance is zero")
    return float(mean)


def chi2_kernel(X, bandwidth: float, name: str = "chi2") -> KernelMatrix:
    """exp(-chi2(x_i, x_j) / bandwidth) on nonnegative features."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    K = np.exp(-chi2_distances(X) / bandwidth)
    K = _symmetrize(K)
    np.fill_diagonal(K, 1.0)
    return KernelMatrix(K, name=name)


def chi2_cross_kernel(X_train, X_other, bandwidth: float) -> np.ndarray:
    """Rectangular chi-square kernel block between two example sets."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    return np.exp(-chi2_distances(X_train, X_other) / bandwidth)


def squared_distances(A, B=None) -> np.ndarray:
    A = _as_features(A)
    B = A if B is None else _as_features(B)
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    sq = aa + bb - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def mean_euclidean_distance(X) -> float:
    """Mean pairwise Euclidean distance over all unordered example pairs."""
    X = _as_features(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("distance heuristic needs at least two examples")
    D = np.sqrt(squared_distances(X))
    total = (D.sum() - np.trace(D)) / 2.0
    mean = total / (n * (n - 1) / 2.0)
    if mean <= 0.0:
        raise ValueError("all examples identical: mean distance is zero")
    return float(mean)


def gaussian_kernel(X, width: float, name: str = "gaussian") -> KernelMatrix:
    """exp(-||x_i - x_j||^2 / (2 width^2)).

    The width is the caller's choice; the bundled experiments use
    `mean_euclidean_distance` as the heuristic.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    K = np.exp(-squared_distances(X) / (2.0 * width * width))
    K = _symmetrize(K)
    np.fill_diagonal(K, 1.0)
    return KernelMatrix(K, name=name)


def gaussian_cross_kernel(X_train, X_other, width: float) -> np.ndarray:
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    return np.exp(-squared_distances(X_train, X_other) / (2.0 * width * width))


def product_kernel(kernels) -> KernelMatrix:
    """Elementwise product of kernels (feature-space concatenation)."""
    kernels = list(kernels)
    if not kernels:
        raise ValueError("product of an empty kernel list")
    n = kernels[0].n
    for k in kernels:
        if k.n != n:
            raise ValueError(f"kernel size mismatch: {k.n} != {n}")
    out = kernels[0].entries.copy()
    for k in kernels[1:]:
        out *= k.entries
    name = "*".join(k.name or "?" for k in kernels)
    return KernelMatrix(out, name=name)


def feature_space_variance(K) -> float:
    """Variance of the implicit feature embedding: tr(K)/n - 1'K1/n^2."""
    entries = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    n = entries.shape[0]
    return float(np.trace(entries) / n - entries.sum() / (n * n))


def multiplicative_normalize(K: KernelMatrix) -> KernelMatrix:
    """Rescale K so the feature-space variance statistic equals one.

    Divides the kernel by tr(K)/n - 1'K1/n^2, which corresponds to
    rescaling the implicit training embedding to unit variance.
    """
    v = feature_space_variance(K)
    if v <= 0.0:
        raise ValueError(
            f"kernel {K.name!r} cannot be normalized: variance statistic "
            f"{v:.6e} is not positive (constant or non-PSD kernel)"
        )
    return KernelMatrix(K.entries / v, name=K.name, normalized=True)


def center(K: KernelMatrix) -> KernelMatrix:
    """Feature-space centering H K H with H = I - (1/n) 1 1'."""
    entries = K.entries
    row_mean = entries.mean(axis=1, keepdims=True)
    col_mean = entries.mean(axis=0, keepdims=True)
    total = entries.mean()
    out = entries - row_mean - col_mean + total
    return KernelMatrix(_symmetrize(out), name=K.name, normalized=K.normalized)


def combine_kernels(kernels, weights) -> np.ndarray:
    """Weighted sum sum_j weights[j] * K_j as a plain array.

    This is the single place a mixed kernel is materialized, so callers that
    must agree bitwise (for example the uniform-weights solver path and a
    hand-built average kernel) share the same float operation order.
    """
    stack = as_kernel_stack(kernels)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (stack.shape[0],):
        raise ValueError("one weight per kernel required")
    return np.tensordot(weights, stack, axes=1)


def as_kernel_stack(kernels) -> np.ndarray:
    """(m, n, n) contiguous stack from KernelMatrix / array inputs."""
    if isinstance(kernels, np.ndarray) and kernels.ndim == 3:
        return np.ascontiguousarray(kernels, dtype=np.float64)
    mats = []
    n = None
    for k in kernels:
        e = k.entries if isinstance(k, KernelMatrix) else np.asarray(k, dtype=np.float64)
        if n is None:
            n = e.shape[0]
        if e.shape != (n, n):
            raise ValueError(f"kernel size mismatch: {e.shape} != ({n}, {n})")
        mats.append(e)
    if not mats:
        raise ValueError("empty kernel list")
    return np.ascontiguousarray(np.stack(mats))


def write_kernel(path, K: KernelMatrix):
    """Write a kernel in the KMX1 binary format."""
    entries = np.ascontiguousarray(K.entries, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_KMX_MAGIC)
        fh.write(struct.pack("<I", K.n))
        fh.write(entries.tobytes(order="C"))


def read_kernel(path, name: str | None = None) -> KernelMatrix:
    """Read a kernel file, KMX1 binary or headerless CSV."""
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic == _KMX_MAGIC:
            (n,) = struct.unpack("<I", fh.read(4))
            data = fh.read()
            if len(data) != 8 * n * n:
                raise ValueError(
                    f"{path}: expected {8 * n * n} payload bytes for n={n}, "
                    f"got {len(data)}"
                )
            entries = np.frombuffer(data, dtype="<f8").reshape(n, n)
            return KernelMatrix(entries.astype(np.float64), name=name)
    entries = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return KernelMatrix(entries, name=name)
