"""lp-norm multiple kernel learning over a wrapped binary SVM.

Learns nonnegative mixing weights beta with ||beta||_p <= 1 jointly with
the SVM duals by alternating between (a) an SVM solve on the weighted
kernel sum and (b) the closed-form weight update

    beta_j  proportional to  ||w_j||^(2/(p+1)),
    ||w_j||^2 = beta_j^2 * (alpha*y)' K_j (alpha*y),

renormalized onto the unit lp sphere.  p = inf fixes uniform weights
(the average-kernel SVM); p = 1 adds a hard zero clamp and returns the
best-objective iterate, since the alternating scheme may oscillate there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kernels import as_kernel_stack, combine_kernels, KernelMatrix
from .labels import LabelVector
from .svm import (DEFAULT_EPSILON, DEFAULT_MAX_ITER, SvmModel, _run_smo,
                  _finish_model, _solve_on_stack)

BETA_TOL = 1e-4          # max relative per-weight change between outer rounds
MAX_OUTER = 200
ZERO_CLAMP = 1e-12       # p = 1 only: weights below this become exact zeros


@dataclass(frozen=True)
class MklModel:
    """Fitted lp-norm MKL state."""

    svm: SvmModel
    beta: np.ndarray
    p: float
    w_norms: np.ndarray      # squared per-kernel norms ||w_j||^2
    iterations: int
    converged: bool

    @property
    def m(self) -> int:
        return self.beta.size


def uniform_beta(m: int, p: float) -> np.ndarray:
    """Uniform point on the lp sphere: m^(-1/p) per kernel (1/m for p=inf)."""
    if math.isinf(p):
        return np.full(m, 1.0 / m)
    return np.full(m, m ** (-1.0 / p))


def update_weights(w_norms, p: float) -> np.ndarray:
    """Closed-form weight update from squared per-kernel norms.

    beta_j = ||w_j||^(2/(p+1)) rescaled so that ||beta||_p = 1; the update
    is order-preserving in ||w_j||.
    """
    w_norms = np.asarray(w_norms, dtype=np.float64)
    if not math.isfinite(p) or p <= 1.0:
        raise ValueError(f"update requires a finite norm p > 1, got {p}")
    if np.any(w_norms < 0):
        raise ValueError("squared norms must be nonnegative")
    if not np.any(w_norms > 0):
        raise ValueError("all squared norms are zero: weight update stalls")
    u = w_norms ** (1.0 / (p + 1.0))
    return u / float(np.linalg.norm(u, ord=p))


def kernel_information(alpha, y: LabelVector, K, p: float) -> float:
    """Information content of a kernel under the fitted duals.

    Equals (sum_{y_i=y_j} a_i K_ij a_j - sum_{y_i!=y_j} a_i K_ij a_j)
    raised to 2/(p+1); the inner difference is the quadratic form
    (alpha*y)' K (alpha*y).  Small negative values from near-PSD kernels
    are floored at zero.
    """
    entries = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (entries.shape[0],) or y.n != entries.shape[0]:
        raise ValueError("alpha, labels and kernel sizes must agree")
    q = float(np.dot(alpha * y.to_float(), entries @ (alpha * y.to_float())))
    if q < 0.0:
        q = 0.0
    if math.isinf(p):
        return 1.0 if q > 0.0 else 0.0
    return q ** (2.0 / (p + 1.0))


def _renormalize(u: np.ndarray, p: float) -> np.ndarray:
    return u / float(np.linalg.norm(u, ord=p))


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    """Largest per-weight relative change; exact 0 -> 0 transitions count 0."""
    worst = 0.0
    for bn, bo in zip(new, old):
        if bo == 0.0 and bn == 0.0:
            continue
        ref = bo if bo > 0.0 else bn
        worst = max(worst, abs(bn - bo) / ref)
    return worst


def solve_lp_mkl(kernels, y: LabelVector, C: float, p: float,
                 epsilon: float = DEFAULT_EPSILON,
                 beta_tol: float = BETA_TOL,
                 max_outer: int = MAX_OUTER,
                 max_iter: int = DEFAULT_MAX_ITER,
                 information_update: str = "scaled") -> MklModel:
    """Fit lp-norm MKL on a list of kernels sharing the same examples.

    ``information_update`` selects the weight update: "scaled" (default)
    uses ||w_j||^2 = beta_j^2 q_j with q_j the per-kernel quadratic form;
    "raw" applies the exponent to q_j directly.
    """
    kstack = as_kernel_stack(kernels)
    if y.n != kstack.shape[1]:
        raise ValueError("kernel size does not match label count")
    y.require_both_classes()
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if p < 1.0:
        raise ValueError(f"norm parameter p must be >= 1 (convexity), got {p}")
    if information_update not in ("scaled", "raw"):
        raise ValueError(f"unknown information_update {information_update!r}")
    model, _, _ = _solve_mkl_on_stack(kstack, y.to_float(), C, p, epsilon,
                                      beta_tol, max_outer, max_iter,
                                      information_update)
    return model


def _solve_mkl_on_stack(kstack, yf, C, p, epsilon=DEFAULT_EPSILON,
                        beta_tol=BETA_TOL, max_outer=MAX_OUTER,
                        max_iter=DEFAULT_MAX_ITER,
                        information_update="scaled",
                        alpha0=None, fj0=None):
    """Core alternating loop on a prebuilt (m, n, n) stack.

    ``alpha0``/``fj0`` warm-start the duals and the per-kernel margin
    caches (fj0 must equal K_j (alpha0 * y); it is recomputed when absent).
    Returns (model, alpha, fj) so callers can chain warm starts, e.g.
    ascending a C grid.
    """
    m, n, _ = kstack.shape
    beta = uniform_beta(m, p)

    if math.isinf(p):
        # average-kernel SVM: materialize the combination once so the
        # decision values match a plain SVM on the same matrix exactly
        combined = combine_kernels(kstack, beta)
        model, _, _ = _solve_on_stack(combined[None, :, :], np.ones(1), yf,
                                      C, epsilon, max_iter, alpha0)
        v = model.alpha * yf
        fj = kstack @ v
        q = fj @ v
        return (MklModel(svm=model, beta=beta, p=p,
                         w_norms=beta * beta * np.maximum(q, 0.0),
                         iterations=1, converged=True),
                model.alpha, fj)

    if max_outer < 1:
        raise ValueError("max_outer must be >= 1")
    kdiag_stack = np.ascontiguousarray(np.einsum("ljj->lj", kstack))
    if alpha0 is None:
        alpha = np.zeros(n)
        fj = np.zeros((m, n))
    else:
        alpha = np.array(alpha0, dtype=np.float64)
        if np.any(alpha < 0) or np.any(alpha > C):
            raise ValueError("alpha0 violates the box constraints")
        fj = (np.array(fj0, dtype=np.float64) if fj0 is not None
              else kstack @ (alpha * yf))
    converged = False
    best = None  # best-objective iterate, tracked for p == 1 only
    model = None
    wsq = np.zeros(m)

    for outer in range(1, max_outer + 1):
        f = beta @ fj
        kdiag = beta @ kdiag_stack
        iters, gap = _run_smo(kstack, beta, yf, float(C), float(epsilon),
                              int(max_iter), alpha, fj, f, kdiag)
        model, fj, f = _finish_model(alpha, fj, f, yf, C, epsilon, iters, gap)
        v = alpha * yf
        q = fj @ v                      # q_j = (alpha*y)' K_j (alpha*y)
        np.maximum(q, 0.0, out=q)
        wsq = beta * beta * q
        if p == 1.0 and (best is None or model.dual_objective < best[0]):
            best = (model.dual_objective,
                    replace(model, alpha=alpha.copy()),
                    beta.copy(), wsq.copy())

        if information_update == "scaled":
            u = wsq ** (1.0 / (p + 1.0))
        else:
            u = q ** (2.0 / (p + 1.0))
        if not np.any(u > 0.0):
            break  # all-zero information: stall, report non-convergence
        beta_new = _renormalize(u, p)
        if p == 1.0:
            clamped = beta_new < ZERO_CLAMP
            if np.any(clamped):
                beta_new[clamped] = 0.0
                beta_new = _renormalize(beta_new, p)
        if _relative_change(beta_new, beta) < beta_tol:
            converged = True
            break
        if outer < max_outer:
            beta = beta_new  # the returned beta is always the last one solved

    final_model = replace(model, alpha=alpha.copy())
    if p == 1.0 and best is not None:
        _, final_model, beta, wsq = best

    return (MklModel(svm=final_model, beta=beta, p=float(p), w_norms=wsq,
                     iterations=outer, converged=converged),
            alpha, fj)


def mkl_decision_values(model: MklModel, cross_kernels, y_train: LabelVector) -> np.ndarray:
    """Decision values on new examples from per-kernel cross blocks.

    ``cross_kernels``: length-m list (or (m, n_train, n_test) array) of
    train-by-test kernel blocks.
    """
    crosses = np.asarray(cross_kernels, dtype=np.float64)
    if crosses.ndim == 2:
        crosses = crosses[None, :, :]
    if crosses.shape[0] != model.m:
        raise ValueError("one cross block per kernel required")
    if crosses.shape[1] != model.svm.n:
        raise ValueError("cross blocks must have one row per training example")
    combined = np.tensordot(model.beta, crosses, axes=1)
    v = model.svm.alpha * y_train.to_float()
    return v @ combined + model.svm.b


def weight_histogram(models, bins: int = 20):
    """Pooled histogram of all mixing weights across fitted models.

    Returns (counts, edges) over [0, 1]; weights never exceed one because
    ||beta||_p <= 1 with p >= 1.
    """
    models = list(models)
    if not models:
        raise ValueError("no models to histogram")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = np.concatenate([m.beta for m in models])
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return counts, edges
