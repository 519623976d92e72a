"""Experiment harness: toy benchmark reproduction, precomputed-kernel
cross-validation with class-wise (C, p) selection, alignment diagnostics,
and the noise-replicate averaging demonstration.

All entry points are deterministic given (config, seed): repetition seeds
derive from the master seed, workers are pure, and results aggregate in
repetition order, so identical runs produce byte-identical CSV files.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
from dataclasses import dataclass, asdict

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .alignment import alignment_matrix, kta_profile
from .kernels import (KernelMatrix, as_kernel_stack, combine_kernels,
                      feature_space_variance, multiplicative_normalize,
                      read_kernel, squared_distances)
from .labels import LabelVector, read_labels
from .metrics import EvalReport, average_precision, conditional_std, welch_t_test
from .mkl import _solve_mkl_on_stack, mkl_decision_values, solve_lp_mkl
from .rng import CounterRng, derive_seed
from .svm import _solve_on_stack, active_backend, decision_values
from .synthetic import (SyntheticSpec, experiment1_spec, experiment2_spec,
                        generate)

TOY_C_GRID = tuple(10.0 ** (i / 2.0) for i in range(-4, 5))
CV_C_GRID = tuple(10.0 ** (i / 2.0) for i in range(-2, 3))
BASE_P_GRID = (1.0, 1.125, 1.333, 2.0, math.inf)
TOY_P_GRID = (1.0, 1.0625, 1.125, 1.25, 1.333, 2.0, math.inf)

TASKS = ("toy1", "toy2", "cv", "align", "weights", "noisedemo")


def format_p(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def parse_p(token: str) -> float:
    token = token.strip().lower()
    if token in ("inf", "infinity"):
        return math.inf
    return float(token)


@dataclass(frozen=True)
class RunConfig:
    """Settings of one harness run."""

    task: str
    p_grid: tuple = BASE_P_GRID
    C_grid: tuple = TOY_C_GRID
    repetitions: int = 500
    folds: int = 5
    seed: int = 0
    kernel_paths: tuple = ()
    labels_paths: tuple = ()
    out_dir: str = ""
    holdout_fraction: float = 0.2
    width_scale: float = 1.0
    noise_replicates: int = 10
    noise_level: float = 0.5
    noisedemo_n: int = 400
    noisedemo_p: float = 1.125
    include_singles: bool = True
    hist_bins: int = 20
    jobs: int = 1
    # fits run at the classic working tolerance; the solver API default stays
    # tighter for library use
    epsilon: float = 1e-3

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "C_grid", tuple(float(c) for c in self.C_grid))
        object.__setattr__(self, "kernel_paths", tuple(self.kernel_paths))
        object.__setattr__(self, "labels_paths", tuple(self.labels_paths))
        if not self.p_grid or not self.C_grid:
            raise ValueError("p and C grids must be nonempty")
        if any(p < 1.0 for p in self.p_grid):
            raise ValueError("norm grid entries must be >= 1")
        if any(c <= 0.0 for c in self.C_grid):
            raise ValueError("C grid entries must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.folds < 2 and self.task == "cv":
            raise ValueError("cross-validation needs at least 2 folds")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout fraction must lie in (0, 1)")
        for path in self.kernel_paths + self.labels_paths:
            if not os.path.exists(path):
                raise FileNotFoundError(path)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_grid"] = [format_p(p) for p in self.p_grid]
        return d


@dataclass(frozen=True)
class CvSplit:
    """Fold assignment over pooled examples."""

    assignment: np.ndarray
    folds: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if sorted(set(a.tolist())) != list(range(self.folds)):
            raise ValueError("every fold must be nonempty")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @staticmethod
    def random(n: int, folds: int, seed: int) -> "CvSplit":
        if folds < 2 or folds > n:
            raise ValueError("need 2 <= folds <= n")
        perm = np.argsort(CounterRng(seed).uniforms(n), kind="stable")
        assignment = np.empty(n, dtype=np.int64)
        sizes = [n // folds + (1 if f < n % folds else 0) for f in range(folds)]
        start = 0
        for f, size in enumerate(sizes):
            assignment[perm[start:start + size]] = f
            start += size
        return CvSplit(assignment=assignment, folds=folds)

    def fold_indices(self, fold: int):
        val = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, val


# ---------------------------------------------------------------------------
# shared fitting helpers


def _fit_svm(kernel: np.ndarray, yf: np.ndarray, C: float, epsilon: float,
             alpha0=None):
    model, _, _ = _solve_on_stack(kernel[None, :, :], np.ones(1), yf, C,
                                  epsilon, 10_000_000, alpha0)
    return model


def _select_C_svm(kernel_sub, yf_sub, labels_val, cross_val, C_grid, epsilon):
    """Smallest C maximizing validation AP; duals warm-start up the grid."""
    best = None
    alpha0 = None
    for C in C_grid:
        model = _fit_svm(kernel_sub, yf_sub, C, epsilon, alpha0)
        alpha0 = model.alpha
        scores = (model.alpha * yf_sub) @ cross_val + model.b
        ap = average_precision(scores, labels_val)
        if best is None or ap > best[0]:
            best = (ap, C)
    return best[1], best[0]


def _select_C_mkl(stack_sub, yf_sub, labels_val, crosses_val, C_grid, p,
                  epsilon):
    """Smallest C maximizing validation AP; duals warm-start up the grid
    (the weight initialization stays uniform for every fit)."""
    best = None
    alpha0 = fj0 = None
    for C in C_grid:
        model, alpha0, fj0 = _solve_mkl_on_stack(stack_sub, yf_sub, C, p,
                                                 epsilon=epsilon,
                                                 alpha0=alpha0, fj0=fj0)
        combined = np.tensordot(model.beta, crosses_val, axes=1)
        scores = (model.svm.alpha * yf_sub) @ combined + model.svm.b
        ap = average_precision(scores, labels_val)
        if best is None or ap > best[0]:
            best = (ap, C)
    return best[1], best[0]


def _holdout_split(n: int, fraction: float, labels: LabelVector, seed: int):
    """Sorted (train, validation) index split keeping both classes in both."""
    n_val = max(1, int(round(fraction * n)))
    if n_val >= n:
        raise ValueError("holdout fraction leaves no training data")
    for attempt in range(100):
        perm = np.argsort(CounterRng(derive_seed(seed, attempt)).uniforms(n),
                          kind="stable")
        val = np.sort(perm[:n_val])
        sub = np.sort(perm[n_val:])
        vals = labels.values
        if (np.any(vals[val] > 0) and np.any(vals[val] < 0)
                and np.any(vals[sub] > 0) and np.any(vals[sub] < 0)):
            return sub, val
    raise RuntimeError("could not draw a two-class holdout split")


# ---------------------------------------------------------------------------
# toy experiments


def _toy_kernels(dataset, width_scale: float):
    """Normalized per-group Gaussian kernels plus train-by-test blocks.

    Width heuristic per group: mean pairwise Euclidean distance over the
    training examples, times ``width_scale``.  The train kernel and the
    cross block share the width and the normalization factor.
    """
    stacks, crosses, widths, factors = [], [], [], []
    n_tr = dataset.train_labels.n
    for g_tr, g_te in zip(dataset.train_groups, dataset.test_groups):
        sq = squared_distances(g_tr.values)
        dist = np.sqrt(sq)
        width = width_scale * float(
            (dist.sum() - np.trace(dist)) / (n_tr * (n_tr - 1))
        )
        ktr = np.exp(sq / (-2.0 * width * width))
        ktr = (ktr + ktr.T) / 2.0
        np.fill_diagonal(ktr, 1.0)
        v = feature_space_variance(ktr)
        if v <= 0:
            raise ValueError("degenerate kernel: variance statistic not positive")
        ktr /= v
        kcross = np.exp(
            squared_distances(g_tr.values, g_te.values) / (-2.0 * width * width)
        )
        kcross /= v
        stacks.append(ktr)
        crosses.append(kcross)
        widths.append(width)
        factors.append(v)
    return (np.ascontiguousarray(np.stack(stacks)),
            np.ascontiguousarray(np.stack(crosses)), widths, factors)


def toy_method_names(n_groups: int, p_grid, include_singles: bool = True) -> list:
    names = [f"single_g{k}" for k in range(n_groups)] if include_singles else []
    names.append("sum")
    names.extend(f"mkl_p{format_p(p)}" for p in sorted(set(p_grid))
                 if not math.isinf(p))
    return names


def _toy_validation_blocks(dataset, rep_seed, width_scale):
    """Kernels for one repetition plus blocks against a fresh validation draw.

    Model selection uses an independent validation sample of the training
    size, drawn from the same generative law (synthetic data is free, so a
    full-size draw replaces a holdout and keeps the training set intact).
    """
    from dataclasses import replace as _dc_replace

    spec = dataset.spec
    val_spec = _dc_replace(spec, n_test=1)
    val_data = generate(val_spec, derive_seed(rep_seed, 1))
    y_val = val_data.train_labels
    n_tr = dataset.train_labels.n
    stacks, cross_val, cross_test = [], [], []
    for g_tr, g_va, g_te in zip(dataset.train_groups, val_data.train_groups,
                                dataset.test_groups):
        sq = squared_distances(g_tr.values)
        dist = np.sqrt(sq)
        width = width_scale * float(
            (dist.sum() - np.trace(dist)) / (n_tr * (n_tr - 1))
        )
        denom = -2.0 * width * width
        ktr = np.exp(sq / denom)
        ktr = (ktr + ktr.T) / 2.0
        np.fill_diagonal(ktr, 1.0)
        v = feature_space_variance(ktr)
        if v <= 0:
            raise ValueError("degenerate kernel: variance statistic not positive")
        stacks.append(ktr / v)
        cross_val.append(
            np.exp(squared_distances(g_tr.values, g_va.values) / denom) / v)
        cross_test.append(
            np.exp(squared_distances(g_tr.values, g_te.values) / denom) / v)
    return (np.ascontiguousarray(np.stack(stacks)),
            np.ascontiguousarray(np.stack(cross_val)),
            np.ascontiguousarray(np.stack(cross_test)), y_val)


def _toy_repetition(spec: SyntheticSpec, rep_seed: int, p_grid, C_grid,
                    width_scale: float, epsilon: float,
                    include_singles: bool = True) -> dict:
    """One repetition: per method, pick the C maximizing AP on the fresh
    validation draw and score the selected model on the test set.
    Returns method -> (test ap, selected C)."""
    dataset = generate(spec, derive_seed(rep_seed, 0))
    stack, cross_val, cross_test, y_val = _toy_validation_blocks(
        dataset, rep_seed, width_scale)
    y_tr = dataset.train_labels
    y_te = dataset.test_labels
    yf = y_tr.to_float()
    m = stack.shape[0]

    out = {}

    def pick_svm(kernel, cv_block, ct_block):
        best = None
        alpha0 = None
        for C in C_grid:
            model = _fit_svm(kernel, yf, C, epsilon, alpha0)
            alpha0 = model.alpha
            val_ap = average_precision(
                (model.alpha * yf) @ cv_block + model.b, y_val)
            if best is None or val_ap > best[0]:
                best = (val_ap, C, model.alpha.copy(), model.b)
        _, C_star, alpha, b = best
        test_ap = average_precision((alpha * yf) @ ct_block + b, y_te)
        return test_ap, C_star

    if include_singles:
        for k in range(m):
            out[f"single_g{k}"] = pick_svm(stack[k], cross_val[k],
                                           cross_test[k])

    uniform = np.full(m, 1.0 / m)
    out["sum"] = pick_svm(combine_kernels(stack, uniform),
                          np.tensordot(uniform, cross_val, axes=1),
                          np.tensordot(uniform, cross_test, axes=1))

    for p in sorted(set(p_grid)):
        if math.isinf(p):
            continue
        best = None
        alpha0 = fj0 = None
        for C in C_grid:
            model, alpha0, fj0 = _solve_mkl_on_stack(
                stack, yf, C, p, epsilon=epsilon, alpha0=alpha0, fj0=fj0)
            val_ap = average_precision(
                mkl_decision_values(model, cross_val, y_tr), y_val)
            if best is None or val_ap > best[0]:
                best = (val_ap, C, model)
        _, C_star, model = best
        test_ap = average_precision(
            mkl_decision_values(model, cross_test, y_tr), y_te)
        out[f"mkl_p{format_p(p)}"] = (test_ap, C_star)

    return out


@dataclass(frozen=True)
class ToyResult:
    config: RunConfig
    spec: SyntheticSpec
    reports: dict
    selected_C: dict
    tests: list
    failures: list
    wall_time: float = 0.0


def run_toy(experiment: int, config: RunConfig) -> ToyResult:
    """Run the controlled benchmark: per repetition fit all methods and
    aggregate test APs with significance tests against the sum baseline."""
    if experiment == 1:
        spec = experiment1_spec()
    elif experiment == 2:
        spec = experiment2_spec()
    else:
        raise ValueError(f"experiment must be 1 or 2, got {experiment}")
    start = time.time()
    seeds = [derive_seed(config.seed, r) for r in range(config.repetitions)]

    def job(rep_seed):
        return _toy_repetition(spec, rep_seed, config.p_grid, config.C_grid,
                               config.width_scale, config.epsilon,
                               config.include_singles)

    raw = Parallel(n_jobs=config.jobs)(
        delayed(_safe_call)(job, s) for s in seeds
    )
    results, failures = [], []
    for rep, item in enumerate(raw):
        if isinstance(item, dict):
            results.append((rep, item))
        else:
            failures.append((rep, item))
    if len(failures) > 0.01 * config.repetitions:
        raise RuntimeError(
            f"{len(failures)} of {config.repetitions} repetitions failed; "
            f"first error: {failures[0][1]}"
        )

    methods = toy_method_names(spec.n_groups, config.p_grid,
                               config.include_singles)
    reports = {}
    selected = {}
    for name in methods:
        scores = np.array([item[name][0] for _, item in results])
        reports[name] = EvalReport(method_name=name, per_unit_scores=scores)
        selected[name] = [item[name][1] for _, item in results]

    tests = []
    mkl_names = [x for x in methods if x.startswith("mkl_")]
    singles = [x for x in methods if x.startswith("single_")]
    pairs = [(name, "sum") for name in mkl_names]
    pairs += [(s, "sum") for s in singles]
    pairs += [(s, mk) for s in singles for mk in mkl_names]
    if len(results) < 2:
        pairs = []  # significance needs at least two repetitions
    for a, b in pairs:
        sa = reports[a].per_unit_scores
        sb = reports[b].per_unit_scores
        tests.append({
            "method_a": a,
            "method_b": b,
            "mean_diff_pct": 100.0 * float(sa.mean() - sb.mean()),
            "welch_p": welch_t_test(sa, sb).p_value,
            "paired_p": welch_t_test(sa, sb, paired=True).p_value,
        })

    return ToyResult(config=config, spec=spec, reports=reports,
                     selected_C=selected, tests=tests,
                     failures=[(r, str(e)) for r, e in failures],
                     wall_time=time.time() - start)


def _safe_call(fn, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - repetition failures are counted
        return exc


# ---------------------------------------------------------------------------
# cross-validation on precomputed kernels


@dataclass(frozen=True)
class CvClassResult:
    class_name: str
    per_fold: list          # rows: (fold, p, C, val_ap)
    per_p: dict             # p -> (C_selected, EvalReport over folds)
    selected_p: float
    selected_C: float
    selected_report: EvalReport


@dataclass(frozen=True)
class CvResult:
    config: RunConfig
    split: CvSplit
    classes: list
    kernel_names: list
    wall_time: float = 0.0


def _load_kernel_set(paths):
    kernels = [read_kernel(p) for p in paths]
    n = kernels[0].n
    for k in kernels:
        if k.n != n:
            raise ValueError(f"kernel {k.name!r} has size {k.n}, expected {n}")
    return kernels


def _cv_fold_scores(stack, labels_all, split, p_list, C_grid, epsilon):
    """Validation APs for every (fold, p, C); one fold pass shares slices."""
    rows = []
    for fold in range(split.folds):
        tr, va = split.fold_indices(fold)
        labels_sub = LabelVector(labels_all.values[tr])
        labels_val = LabelVector(labels_all.values[va])
        labels_sub.require_both_classes()
        labels_val.require_both_classes()
        yf_sub = labels_sub.to_float()
        stack_sub = np.ascontiguousarray(stack[:, tr[:, None], tr[None, :]])
        crosses_val = np.ascontiguousarray(stack[:, tr[:, None], va[None, :]])
        m = stack.shape[0]
        uniform = np.full(m, 1.0 / m)
        for p in p_list:
            if math.isinf(p):
                avg = combine_kernels(stack_sub, uniform)
                avg_cross = np.tensordot(uniform, crosses_val, axes=1)
                alpha0 = None
                for C in C_grid:
                    model = _fit_svm(avg, yf_sub, C, epsilon, alpha0)
                    alpha0 = model.alpha
                    scores = (model.alpha * yf_sub) @ avg_cross + model.b
                    rows.append((fold, p, C,
                                 average_precision(scores, labels_val)))
            else:
                alpha0 = fj0 = None
                for C in C_grid:
                    model, alpha0, fj0 = _solve_mkl_on_stack(
                        stack_sub, yf_sub, C, p, epsilon=epsilon,
                        alpha0=alpha0, fj0=fj0)
                    combined = np.tensordot(model.beta, crosses_val, axes=1)
                    scores = (model.svm.alpha * yf_sub) @ combined + model.svm.b
                    rows.append((fold, p, C,
                                 average_precision(scores, labels_val)))
    return rows


def run_cv(config: RunConfig) -> CvResult:
    """Cross-validated grid search over (C, p) on precomputed kernels.

    Per class: every (fold, p, C) validation AP is recorded; the per-p row
    reports the C maximizing the fold-mean AP, and the class-wise selection
    maximizes the fold-mean over the whole (p, C) grid (grid order breaks
    ties).
    """
    start = time.time()
    if not config.kernel_paths or not config.labels_paths:
        raise ValueError("cv needs kernel and label paths")
    kernels = _load_kernel_set(config.kernel_paths)
    # each kernel is rescaled to unit variance statistic over the pooled set
    kernels = [multiplicative_normalize(k) for k in kernels]
    stack = as_kernel_stack(kernels)
    n = stack.shape[1]
    split = CvSplit.random(n, config.folds, derive_seed(config.seed, 0))

    p_list = sorted(set(config.p_grid))
    classes = []
    for labels_path in config.labels_paths:
        labels = read_labels(labels_path)
        if labels.n != n:
            raise ValueError(
                f"labels {labels_path!r} have {labels.n} entries, kernels have {n}"
            )
        labels.require_both_classes()
        class_name = os.path.splitext(os.path.basename(labels_path))[0]
        rows = _cv_fold_scores(stack, labels, split, p_list,
                               config.C_grid, config.epsilon)
        per_p = {}
        best_key = None
        for p in p_list:
            best_c = None
            for C in config.C_grid:
                aps = [ap for (f, pp, cc, ap) in rows if pp == p and cc == C]
                mean = float(np.mean(aps))
                if best_c is None or mean > best_c[0]:
                    best_c = (mean, C, aps)
            mean, C_sel, aps = best_c
            per_p[p] = (C_sel, EvalReport(method_name=f"p={format_p(p)}",
                                          per_unit_scores=np.array(aps)))
            if best_key is None or mean > best_key[0]:
                best_key = (mean, p, C_sel)
        _, p_star, c_star = best_key
        classes.append(CvClassResult(
            class_name=class_name,
            per_fold=rows,
            per_p=per_p,
            selected_p=p_star,
            selected_C=c_star,
            selected_report=per_p[p_star][1],
        ))
    return CvResult(config=config, split=split, classes=classes,
                    kernel_names=[k.name for k in kernels],
                    wall_time=time.time() - start)


# ---------------------------------------------------------------------------
# alignment diagnostics


@dataclass(frozen=True)
class AlignResult:
    kernel_names: list
    matrix: np.ndarray
    profiles: dict  # class name -> normalized KTA profile
    wall_time: float = 0.0


def run_align(config: RunConfig) -> AlignResult:
    """Pairwise centered alignments plus per-class normalized KTA profiles."""
    start = time.time()
    if not config.kernel_paths:
        raise ValueError("align needs kernel paths")
    kernels = _load_kernel_set(config.kernel_paths)
    matrix = alignment_matrix(kernels)
    profiles = {}
    for labels_path in config.labels_paths:
        labels = read_labels(labels_path)
        name = os.path.splitext(os.path.basename(labels_path))[0]
        profiles[name] = kta_profile(kernels, labels, normalize_to_sum_one=True)
    return AlignResult(kernel_names=[k.name for k in kernels], matrix=matrix,
                       profiles=profiles, wall_time=time.time() - start)


# ---------------------------------------------------------------------------
# noise-replicate averaging demonstration


@dataclass(frozen=True)
class NoiseDemoResult:
    config: RunConfig
    reports: dict            # method -> EvalReport (test APs per seed)
    cond_std: dict           # method -> mean conditional deviation
    per_seed: list
    tests: list
    wall_time: float = 0.0


def _noisedemo_seed(seed: int, config: RunConfig) -> dict:
    """One seed of the averaging demo.

    A single fully informative feature group is perturbed ``noise_replicates``
    times with independent feature noise; all replicates carry the same
    signal.  Best-single selects (replicate, C) on the holdout.
    """
    n = config.noisedemo_n
    spec = SyntheticSpec(group_sizes=(n,), pos_prior=0.25, pos_means=(0.4,),
                         sigmas=(0.3,), noise_sigma=0.5, features_per_group=6,
                         n_train=n, n_test=n)
    dataset = generate(spec, derive_seed(seed, 0))
    y_tr = dataset.train_labels
    y_te = dataset.test_labels
    yf = y_tr.to_float()
    pooled = np.vstack([dataset.train_groups[0].values,
                        dataset.test_groups[0].values])
    col_std = dataset.train_groups[0].values.std(axis=0)
    rng = CounterRng(derive_seed(seed, 1))

    kernels_tr, crosses, cstds = [], [], []
    for _ in range(config.noise_replicates):
        z = rng.normals(pooled.size).reshape(pooled.shape)
        pert = pooled + config.noise_level * col_std * z
        sq = squared_distances(pert[:n])
        dist = np.sqrt(sq)
        width = config.width_scale * float(
            (dist.sum() - np.trace(dist)) / (n * (n - 1))
        )
        ktr = np.exp(sq / (-2.0 * width * width))
        ktr = (ktr + ktr.T) / 2.0
        np.fill_diagonal(ktr, 1.0)
        v = feature_space_variance(ktr)
        ktr /= v
        kcross = np.exp(squared_distances(pert[:n], pert[n:])
                        / (-2.0 * width * width)) / v
        kernels_tr.append(ktr)
        crosses.append(kcross)
        cstds.append(conditional_std(KernelMatrix(ktr, name="replicate"), y_tr))

    stack = np.ascontiguousarray(np.stack(kernels_tr))
    crosses = np.ascontiguousarray(np.stack(crosses))
    m = stack.shape[0]
    uniform = np.full(m, 1.0 / m)
    sub, val = _holdout_split(n, config.holdout_fraction, y_tr,
                              derive_seed(seed, 2))
    labels_sub = LabelVector(y_tr.values[sub])
    labels_val = LabelVector(y_tr.values[val])
    yf_sub = labels_sub.to_float()
    stack_sub = np.ascontiguousarray(stack[:, sub[:, None], sub[None, :]])
    crosses_val = np.ascontiguousarray(stack[:, sub[:, None], val[None, :]])

    # best single replicate: joint (replicate, C) selection on the holdout
    best = None
    for r in range(m):
        C_r, ap_r = _select_C_svm(stack_sub[r], yf_sub, labels_val,
                                  crosses_val[r], config.C_grid, config.epsilon)
        if best is None or ap_r > best[0]:
            best = (ap_r, r, C_r)
    _, r_star, C_star = best
    model = _fit_svm(stack[r_star], yf, C_star, config.epsilon)
    ap_single = average_precision(
        decision_values(model, crosses[r_star], y_tr), y_te)

    avg_sub = combine_kernels(stack_sub, uniform)
    avg_cross_val = np.tensordot(uniform, crosses_val, axes=1)
    C_sum, _ = _select_C_svm(avg_sub, yf_sub, labels_val, avg_cross_val,
                             config.C_grid, config.epsilon)
    avg_full = combine_kernels(stack, uniform)
    model = _fit_svm(avg_full, yf, C_sum, config.epsilon)
    ap_sum = average_precision(
        decision_values(model, np.tensordot(uniform, crosses, axes=1), y_tr),
        y_te)
    cstd_sum = conditional_std(KernelMatrix(avg_full, name="sum"), y_tr)

    p = config.noisedemo_p
    C_mkl, _ = _select_C_mkl(stack_sub, yf_sub, labels_val, crosses_val,
                             config.C_grid, p, config.epsilon)
    mkl_model, _, _ = _solve_mkl_on_stack(stack, yf, C_mkl, p,
                                          epsilon=config.epsilon)
    ap_mkl = average_precision(
        mkl_decision_values(mkl_model, crosses, y_tr), y_te)

    return {
        "best_single": (ap_single, C_star),
        "sum": (ap_sum, C_sum),
        f"mkl_p{format_p(p)}": (ap_mkl, C_mkl),
        "cond_std_replicate_mean": float(np.mean(cstds)),
        "cond_std_sum": cstd_sum,
        "best_replicate": r_star,
    }


def run_noisedemo(config: RunConfig) -> NoiseDemoResult:
    """Averaging-versus-selection demo over noise-replicate kernels."""
    start = time.time()
    seeds = [derive_seed(config.seed, s) for s in range(config.repetitions)]
    raw = Parallel(n_jobs=config.jobs)(
        delayed(_safe_call)(_noisedemo_seed, s, config) for s in seeds
    )
    results, failures = [], []
    for rep, item in enumerate(raw):
        if isinstance(item, dict):
            results.append((rep, item))
        else:
            failures.append((rep, item))
    if len(failures) > 0.01 * len(seeds):
        raise RuntimeError(f"{len(failures)} noisedemo seeds failed: "
                           f"{failures[0][1]}")
    mkl_name = f"mkl_p{format_p(config.noisedemo_p)}"
    methods = ["best_single", "sum", mkl_name]
    reports = {
        name: EvalReport(
            method_name=name,
            per_unit_scores=np.array([item[name][0] for _, item in results]),
        )
        for name in methods
    }
    cond = {
        "replicate_mean": float(np.mean(
            [item["cond_std_replicate_mean"] for _, item in results])),
        "sum": float(np.mean([item["cond_std_sum"] for _, item in results])),
    }
    tests = []
    for a, b in (("sum", "best_single"), (mkl_name, "sum")):
        sa = reports[a].per_unit_scores
        sb = reports[b].per_unit_scores
        tests.append({
            "method_a": a, "method_b": b,
            "mean_diff_pct": 100.0 * float(sa.mean() - sb.mean()),
            "welch_p": welch_t_test(sa, sb).p_value,
            "paired_p": welch_t_test(sa, sb, paired=True).p_value,
        })
    return NoiseDemoResult(config=config, reports=reports, cond_std=cond,
                           per_seed=results, tests=tests,
                           wall_time=time.time() - start)


# ---------------------------------------------------------------------------
# weight diagnostics


@dataclass(frozen=True)
class WeightsResult:
    config: RunConfig
    kernel_names: list
    betas: list       # rows: (class, p, kernel index, weight)
    histograms: dict  # p -> (counts, edges)
    wall_time: float = 0.0


def run_weights(config: RunConfig) -> WeightsResult:
    """Fit MKL per (class, p) at the middle C of the grid; export weights.

    A diagnostics task: the pooled weight histograms show how the norm
    parameter shifts mass between sparse and uniform mixtures.
    """
    from .mkl import weight_histogram

    start = time.time()
    if not config.kernel_paths or not config.labels_paths:
        raise ValueError("weights needs kernel and label paths")
    kernels = _load_kernel_set(config.kernel_paths)
    kernels = [multiplicative_normalize(k) for k in kernels]
    C = config.C_grid[len(config.C_grid) // 2]
    betas = []
    models_per_p = {p: [] for p in sorted(set(config.p_grid))}
    for labels_path in config.labels_paths:
        labels = read_labels(labels_path)
        class_name = os.path.splitext(os.path.basename(labels_path))[0]
        for p in sorted(set(config.p_grid)):
            model = solve_lp_mkl(kernels, labels, C, p, epsilon=config.epsilon)
            models_per_p[p].append(model)
            for j, w in enumerate(model.beta):
                betas.append((class_name, p, j, float(w)))
    histograms = {p: weight_histogram(models, bins=config.hist_bins)
                  for p, models in models_per_p.items()}
    return WeightsResult(config=config,
                         kernel_names=[k.name for k in kernels],
                         betas=betas, histograms=histograms,
                         wall_time=time.time() - start)


# ---------------------------------------------------------------------------
# output emission


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _manifest(config: RunConfig, wall_time: float, extra=None) -> dict:
    info = {
        "config": config.to_dict(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "solver_backend": active_backend(),
        "wall_time_s": wall_time,
    }
    if extra:
        info.update(extra)
    return info


def _write_manifest(out_dir, manifest):
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_toy(result: ToyResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    methods = list(result.reports)
    rows = []
    for rep in range(len(next(iter(result.reports.values())).per_unit_scores)):
        for name in methods:
            rows.append((rep, name,
                         float(result.reports[name].per_unit_scores[rep]),
                         float(result.selected_C[name][rep])))
    _write_csv(os.path.join(out_dir, "per_repetition.csv"),
               ("rep", "method", "test_ap", "selected_C"), rows)
    _write_csv(
        os.path.join(out_dir, "summary.csv"),
        ("method", "n_reps", "ap_mean_pct", "ap_std_pct"),
        [(name, r.n_units, 100.0 * r.mean, 100.0 * r.std)
         for name, r in result.reports.items()],
    )
    _write_csv(
        os.path.join(out_dir, "significance.csv"),
        ("method_a", "method_b", "mean_diff_pct", "welch_p", "paired_p"),
        [(t["method_a"], t["method_b"], t["mean_diff_pct"], t["welch_p"],
          t["paired_p"]) for t in result.tests],
    )
    summary = {
        name: {"mean_ap_pct": 100.0 * r.mean, "std_ap_pct": 100.0 * r.std,
               "n": r.n_units}
        for name, r in result.reports.items()
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="ascii") as fh:
        json.dump({"methods": summary, "tests": result.tests}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, _manifest(result.config, result.wall_time,
                                       {"failures": result.failures}))


def emit_cv(result: CvResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for cls in result.classes:
        for fold, p, C, ap in cls.per_fold:
            rows.append((cls.class_name, fold, format_p(p), C, ap))
    _write_csv(os.path.join(out_dir, "per_fold.csv"),
               ("class", "fold", "p", "C", "val_ap"), rows)
    rows = []
    for cls in result.classes:
        for p, (C_sel, report) in cls.per_p.items():
            rows.append((cls.class_name, format_p(p), C_sel,
                         100.0 * report.mean, 100.0 * report.std))
    _write_csv(os.path.join(out_dir, "per_p.csv"),
               ("class", "p", "selected_C", "ap_mean_pct", "ap_std_pct"), rows)
    _write_csv(
        os.path.join(out_dir, "selected.csv"),
        ("class", "selected_p", "selected_C", "ap_mean_pct", "ap_std_pct"),
        [(cls.class_name, format_p(cls.selected_p), cls.selected_C,
          100.0 * cls.selected_report.mean, 100.0 * cls.selected_report.std)
         for cls in result.classes],
    )
    _write_manifest(out_dir, _manifest(result.config, result.wall_time))


def emit_align(result: AlignResult, config: RunConfig, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    header = ("kernel",) + tuple(result.kernel_names)
    rows = [(name,) + tuple(float(v) for v in result.matrix[i])
            for i, name in enumerate(result.kernel_names)]
    _write_csv(os.path.join(out_dir, "alignment_matrix.csv"), header, rows)
    header = ("class",) + tuple(result.kernel_names)
    rows = [(name,) + tuple(float(v) for v in profile)
            for name, profile in result.profiles.items()]
    _write_csv(os.path.join(out_dir, "kta_profile.csv"), header, rows)
    _write_manifest(out_dir, _manifest(config, result.wall_time))


def emit_noisedemo(result: NoiseDemoResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for name, report in result.reports.items():
        cond = {"best_single": result.cond_std["replicate_mean"],
                "sum": result.cond_std["sum"]}.get(name, "")
        rows.append((name, report.n_units, 100.0 * report.mean,
                     100.0 * report.std, cond))
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ("method", "n_seeds", "ap_mean_pct", "ap_std_pct",
                "conditional_std"), rows)
    rows = []
    for rep, item in result.per_seed:
        for name, report in result.reports.items():
            ap, C = item[name]
            rows.append((rep, name, ap, C))
    _write_csv(os.path.join(out_dir, "per_seed.csv"),
               ("seed_index", "method", "test_ap", "selected_C"), rows)
    _write_csv(
        os.path.join(out_dir, "significance.csv"),
        ("method_a", "method_b", "mean_diff_pct", "welch_p", "paired_p"),
        [(t["method_a"], t["method_b"], t["mean_diff_pct"], t["welch_p"],
          t["paired_p"]) for t in result.tests],
    )
    _write_manifest(out_dir, _manifest(result.config, result.wall_time))


def emit_weights(result: WeightsResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "betas.csv"),
        ("class", "p", "kernel", "weight"),
        [(cls, format_p(p), result.kernel_names[j], w)
         for cls, p, j, w in result.betas],
    )
    rows = []
    for p, (counts, edges) in result.histograms.items():
        for b in range(counts.size):
            rows.append((format_p(p), float(edges[b]), float(edges[b + 1]),
                         int(counts[b])))
    _write_csv(os.path.join(out_dir, "weight_histogram.csv"),
               ("p", "bin_lo", "bin_hi", "count"), rows)
    _write_manifest(out_dir, _manifest(result.config, result.wall_time))
