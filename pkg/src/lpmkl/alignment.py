"""Kernel alignment and centered kernel-target alignment diagnostics."""

from __future__ import annotations

import numpy as np

from .kernels import KernelMatrix, center
from .labels import LabelVector


def kernel_alignment(K1: KernelMatrix, K2: KernelMatrix) -> float:
    """Cosine of two kernels under the Frobenius inner product.

    A(K1, K2) = <K1, K2>_F / (||K1||_F ||K2||_F), in [-1, 1].
    """
    if K1.n != K2.n:
        raise ValueError(f"kernel sizes differ: {K1.n} != {K2.n}")
    a = K1.entries
    b = K2.entries
    na = float(np.sqrt(np.sum(a * a)))
    nb = float(np.sqrt(np.sum(b * b)))
    if na == 0.0 or nb == 0.0:
        raise ValueError("alignment with a zero matrix is undefined")
    return float(np.sum(a * b) / (na * nb))


def ideal_kernel(y: LabelVector) -> KernelMatrix:
    """Rank-one kernel of the perfectly separating, class-rebalanced labels.

    Entry (i, j) is t_i t_j with t_i = 1/n_pos for positives and -1/n_neg
    for negatives; the result is centered by construction because the
    rebalanced labels sum to zero.
    """
    y.require_both_classes()
    t = np.where(y.values > 0, 1.0 / y.n_pos, -1.0 / y.n_neg)
    return KernelMatrix(np.outer(t, t), name="ideal")


def centered_kta(K: KernelMatrix, y: LabelVector) -> float:
    """Alignment of the centered kernel with the ideal label kernel."""
    y.require_both_classes()
    Kc = center(K)
    if not np.any(Kc.entries):
        raise ValueError(
            f"kernel {K.name!r} centers to zero (constant kernel); "
            "target alignment is undefined"
        )
    return kernel_alignment(Kc, ideal_kernel(y))


def alignment_matrix(kernels) -> np.ndarray:
    """Pairwise alignments of centered kernels; unit diagonal.

    Degenerate pairs (a kernel centering to zero) yield NaN sentinels
    instead of failing the whole matrix.
    """
    kernels = list(kernels)
    if not kernels:
        raise ValueError("no kernels given")
    n = kernels[0].n
    for k in kernels:
        if k.n != n:
            raise ValueError("kernel sizes differ")
    centered = [center(k) for k in kernels]
    norms = [float(np.sqrt(np.sum(c.entries * c.entries))) for c in centered]
    m = len(kernels)
    out = np.full((m, m), np.nan)
    for i in range(m):
        if norms[i] == 0.0:
            continue
        out[i, i] = 1.0
        for j in range(i + 1, m):
            if norms[j] == 0.0:
                continue
            val = float(np.sum(centered[i].entries * centered[j].entries))
            out[i, j] = out[j, i] = val / (norms[i] * norms[j])
    return out


def kta_profile(kernels, y: LabelVector, normalize_to_sum_one: bool = False) -> np.ndarray:
    """Per-kernel centered target alignment, optionally summing to one."""
    y.require_both_classes()
    scores = np.array([centered_kta(k, y) for k in kernels], dtype=np.float64)
    if normalize_to_sum_one:
        total = float(scores.sum())
        if total <= 0.0:
            raise ValueError(
                f"profile sum {total:.6e} is not positive; cannot normalize"
            )
        scores = scores / total
    return scores
