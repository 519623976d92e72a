"""Binary soft-margin SVM on a fixed precomputed kernel.

This is the inner solver the multiple-kernel learner wraps.  The hot loop
lives in the compiled extension ``lpmkl._solver_core`` when available and
falls back to the pure-numpy twin otherwise; ``set_backend`` /
``active_backend`` control and report the choice.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _solver_numpy
from .kernels import KernelMatrix, SYMMETRY_TOL
from .labels import LabelVector

try:
    from . import _solver_core
except ImportError:  # pragma: no cover - build without the extension
    _solver_core = None

DEFAULT_EPSILON = 1e-5
DEFAULT_MAX_ITER = 10_000_000

_FORCED = os.environ.get("LPMKL_BACKEND", "").strip().lower() or None
_backend = None


def available_backends():
    names = ["python"]
    if _solver_core is not None:
        names.insert(0, "compiled")
    return names


def set_backend(name: str | None):
    """Select the solver lane: 'compiled', 'python', or None for auto."""
    global _backend
    if name is not None:
        name = name.lower()
        if name not in ("compiled", "python"):
            raise ValueError(f"unknown backend {name!r}")
        if name == "compiled" and _solver_core is None:
            raise RuntimeError("compiled solver extension is not available")
    _backend = name


def active_backend() -> str:
    if _backend is not None:
        return _backend
    if _FORCED in ("compiled", "python"):
        if _FORCED == "compiled" and _solver_core is None:
            raise RuntimeError("LPMKL_BACKEND=compiled but extension missing")
        return _FORCED
    return "compiled" if _solver_core is not None else "python"


def _run_smo(kstack, beta, y, c_bound, eps, max_iter, alpha, fj, f, kdiag):
    if active_backend() == "compiled":
        return _solver_core.run_smo(
            kstack, beta, y, c_bound, eps, max_iter, alpha, fj, f, kdiag
        )
    return _solver_numpy.run_smo(
        kstack, beta, y, c_bound, eps, max_iter, alpha, fj, f, kdiag
    )


@dataclass(frozen=True)
class SvmModel:
    """Fitted dual state of a binary SVM."""

    alpha: np.ndarray
    b: float
    C: float
    support_indices: np.ndarray
    dual_objective: float
    converged: bool = True
    iterations: int = 0
    kkt_gap: float = 0.0

    @property
    def n(self) -> int:
        return self.alpha.size


def _offset_from_state(alpha, yf, f, c_bound):
    """Offset b: mean of y - f over free vectors, else the bound midpoint."""
    free = (alpha > 0.0) & (alpha < c_bound)
    g = yf - f
    if np.any(free):
        return float(np.mean(g[free]))
    pos = yf > 0
    up = np.where(pos, alpha < c_bound, alpha > 0.0)
    low = np.where(pos, alpha > 0.0, alpha < c_bound)
    hi = np.max(np.where(up, g, -np.inf))
    lo = np.min(np.where(low, g, np.inf))
    return float((hi + lo) / 2.0)


def solve_svm_dual(K, y: LabelVector, C: float,
                   epsilon: float = DEFAULT_EPSILON,
                   max_iter: int = DEFAULT_MAX_ITER,
                   alpha0: np.ndarray | None = None) -> SvmModel:
    """Maximize the boxed dual of the soft-margin SVM on kernel K.

    Maximizes sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
    subject to 0 <= alpha_i <= C and sum_i y_i alpha_i = 0, to KKT gap
    ``epsilon``.  ``alpha0`` warm-starts the duals (must be feasible).
    """
    if isinstance(K, KernelMatrix):
        entries = K.entries
    else:
        entries = np.ascontiguousarray(K, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"kernel must be square, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("kernel contains non-finite entries")
        asym = float(np.max(np.abs(entries - entries.T)))
        if asym > SYMMETRY_TOL:
            raise ValueError(f"kernel is not symmetric (max |K-K^T| = {asym:.3e})")
    y.require_both_classes()
    if y.n != entries.shape[0]:
        raise ValueError(f"kernel size {entries.shape[0]} != label count {y.n}")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    kstack = entries[None, :, :]
    model, _, _ = _solve_on_stack(kstack, np.ones(1), y.to_float(), C, epsilon,
                                  max_iter, alpha0)
    return model


def _solve_on_stack(kstack, beta, yf, C, epsilon, max_iter, alpha0=None):
    """Core solve on a weighted kernel stack; no input re-validation."""
    n = kstack.shape[1]
    m = kstack.shape[0]
    if alpha0 is None:
        alpha = np.zeros(n)
        fj = np.zeros((m, n))
    else:
        alpha = np.array(alpha0, dtype=np.float64)
        if alpha.shape != (n,):
            raise ValueError("alpha0 has wrong shape")
        if np.any(alpha < 0) or np.any(alpha > C):
            raise ValueError("alpha0 violates the box constraints")
        v = alpha * yf
        fj = kstack @ v
    f = beta @ fj
    kdiag = beta @ np.einsum("ljj->lj", kstack)
    iters, gap = _run_smo(np.ascontiguousarray(kstack), np.ascontiguousarray(beta),
                          yf, float(C), float(epsilon), int(max_iter),
                          alpha, fj, f, kdiag)
    return _finish_model(alpha, fj, f, yf, C, epsilon, iters, gap)


def _finish_model(alpha, fj, f, yf, C, epsilon, iters, gap):
    b = _offset_from_state(alpha, yf, f, C)
    objective = float(alpha.sum() - 0.5 * np.dot(alpha * yf, f))
    model = SvmModel(
        alpha=alpha,
        b=b,
        C=float(C),
        support_indices=np.flatnonzero(alpha > 0.0),
        dual_objective=objective,
        converged=bool(gap <= epsilon),
        iterations=int(iters),
        kkt_gap=float(gap),
    )
    return model, fj, f


def decision_values(model: SvmModel, K_cross, y_train: LabelVector) -> np.ndarray:
    """f(x) = sum_i alpha_i y_i K(x_i, x) + b for each column of K_cross."""
    K_cross = np.asarray(K_cross, dtype=np.float64)
    if K_cross.ndim == 1:
        K_cross = K_cross[:, None]
    if K_cross.shape[0] != model.n:
        raise ValueError(
            f"cross-kernel has {K_cross.shape[0]} rows, model has {model.n} "
            "training examples"
        )
    if y_train.n != model.n:
        raise ValueError("label count does not match the model")
    v = model.alpha * y_train.to_float()
    return v @ K_cross + model.b
