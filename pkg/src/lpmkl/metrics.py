"""Ranking and statistical evaluation: average precision, conditional
kernel deviation, and significance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats

from .kernels import KernelMatrix
from .labels import LabelVector


@dataclass(frozen=True)
class EvalReport:
    """Per-unit scores (class / repetition) with summary statistics.

    ``std`` is the sample standard deviation (ddof=1), zero for a single
    unit.
    """

    method_name: str
    per_unit_scores: np.ndarray
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        scores = np.asarray(self.per_unit_scores, dtype=np.float64)
        if scores.ndim != 1 or scores.size < 1:
            raise ValueError("per-unit scores must be a nonempty 1-d sequence")
        scores.setflags(write=False)
        object.__setattr__(self, "per_unit_scores", scores)
        object.__setattr__(self, "mean", float(scores.mean()))
        std = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
        object.__setattr__(self, "std", std)

    @property
    def n_units(self) -> int:
        return self.per_unit_scores.size


def average_precision(scores, labels: LabelVector, tie_break: str = "index",
                      rng=None) -> float:
    """Average precision of a ranking: mean precision at positive ranks.

    Examples are sorted by score descending; ties resolve to the original
    index order (``tie_break="index"``) or to a random order drawn from
    ``rng`` (``tie_break="random"``, used for random-baseline checks).
    AP = (1/n_pos) * sum over positions k holding a positive of
    (positives in top k) / k.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (labels.n,):
        raise ValueError("scores and labels must have equal length")
    if labels.n_pos < 1:
        raise ValueError("average precision is undefined without positives")
    if tie_break == "index":
        order = np.argsort(-scores, kind="stable")
    elif tie_break == "random":
        if rng is None:
            raise ValueError("random tie breaking needs an rng")
        perm = np.argsort(rng.uniforms(scores.size), kind="stable")
        order = perm[np.argsort(-scores[perm], kind="stable")]
    else:
        raise ValueError(f"unknown tie_break {tie_break!r}")
    ranked_pos = labels.values[order] > 0
    hits = np.cumsum(ranked_pos)
    ranks = np.arange(1, labels.n + 1)
    return float(np.sum(hits[ranked_pos] / ranks[ranked_pos]) / labels.n_pos)


def conditional_std(K: KernelMatrix, y: LabelVector) -> float:
    """Label-conditioned kernel deviation.

    Population std of off-diagonal entries over same-label pairs plus the
    population std over different-label pairs.
    """
    y.require_both_classes()
    same = np.equal.outer(y.values, y.values)
    off = ~np.eye(y.n, dtype=bool)
    same_vals = K.entries[same & off]
    diff_vals = K.entries[~same]
    if same_vals.size == 0 or diff_vals.size == 0:
        raise ValueError("a conditional pair set is empty")
    return float(same_vals.std() + diff_vals.std())


@dataclass(frozen=True)
class TestResult:
    """Two-sided significance test outcome."""

    p_value: float
    statistic: float
    degenerate: bool = False


def _signed_rank_exact_p(ranks2: np.ndarray, w2: int) -> float:
    """Exact two-sided p-value of the signed-rank statistic.

    ``ranks2`` are doubled (midranks stay integral), ``w2`` is the doubled
    statistic min(W+, W-).  Dynamic program over the distribution of W+
    with independent uniform signs.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    counts /= counts.sum()
    lower = float(counts[: w2 + 1].sum())
    upper = float(counts[w2:].sum())
    return min(1.0, 2.0 * min(lower, upper))


def wilcoxon_signed_rank(a, b, exact_limit: int = 25) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired scores.

    Zero differences are dropped.  Uses the exact sign-permutation
    distribution (with midranks for ties) up to ``exact_limit`` pairs and
    a tie-corrected normal approximation with continuity correction above.
    All-zero differences yield p = 1 with the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return TestResult(p_value=1.0, statistic=0.0, degenerate=True)
    if n < 5:
        raise ValueError(f"need at least 5 nonzero differences, got {n}")
    ranks = _sstats.rankdata(np.abs(d))
    w_pos = float(ranks[d > 0].sum())
    w_neg = float(ranks[d < 0].sum())
    w = min(w_pos, w_neg)
    if n <= exact_limit:
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        p = _signed_rank_exact_p(ranks2, int(round(2.0 * w)))
        return TestResult(p_value=p, statistic=w)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if var <= 0.0:
        return TestResult(p_value=1.0, statistic=w, degenerate=True)
    z = (w - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * float(_sstats.norm.cdf(z)))
    return TestResult(p_value=p, statistic=w)


def welch_t_test(a, b, paired: bool = False) -> TestResult:
    """Two-sided t-test for a mean difference.

    Default is Welch's unequal-variance test on independent samples;
    ``paired=True`` runs the paired t-test on the differences instead.
    Degenerate zero-variance cases return p = 1 (equal means) or p = 0
    (unequal means) with the flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("samples must be 1-d")
    if paired:
        if a.shape != b.shape:
            raise ValueError("paired test requires equal lengths")
        d = a - b
        if d.size < 2:
            raise ValueError("paired test needs at least 2 pairs")
        sd = float(d.std(ddof=1))
        if sd == 0.0:
            equal = float(d.mean()) == 0.0
            return TestResult(p_value=1.0 if equal else 0.0,
                              statistic=0.0 if equal else math.inf,
                              degenerate=True)
        t = float(d.mean()) / (sd / math.sqrt(d.size))
        df = d.size - 1
        return TestResult(p_value=float(2.0 * _sstats.t.sf(abs(t), df)),
                          statistic=t)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        equal = float(a.mean()) == float(b.mean())
        return TestResult(p_value=1.0 if equal else 0.0,
                          statistic=0.0 if equal else math.inf,
                          degenerate=True)
    sa = va / a.size
    sb = vb / b.size
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (
        sa ** 2 / (a.size - 1) + sb ** 2 / (b.size - 1)
    )
    return TestResult(p_value=float(2.0 * _sstats.t.sf(abs(t), df)), statistic=t)
