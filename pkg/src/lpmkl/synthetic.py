"""Controlled benchmark generators: disjoint informative feature groups
and noise-replicate kernel families.

Every draw comes from one `CounterRng` stream per dataset, consumed in a
fixed documented order, so identical (spec, seed) pairs produce bit-identical
datasets on any platform.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from .kernels import (FeatureGroupMatrix, KernelMatrix, gaussian_kernel,
                      mean_euclidean_distance)
from .labels import LabelVector
from .rng import CounterRng, derive_seed


@dataclass(frozen=True)
class SyntheticSpec:
    """Generative settings for a disjoint-informative-subset benchmark.

    Each feature group k is informative for its own slice of
    ``group_sizes[k]`` training examples: there the group's features are
    drawn from class-conditional normals N(0, sigma_k) / N(pos_mean_k,
    sigma_k).  Everywhere else the group's features come from the
    label-independent mixture (1 - pos_prior) N(0, noise_sigma) +
    pos_prior N(pos_mean_k, noise_sigma).
    """

    group_sizes: tuple
    pos_prior: float
    pos_means: tuple
    sigmas: tuple
    noise_sigma: float = 0.5
    features_per_group: int = 6
    n_train: int = 0
    n_test: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "group_sizes", tuple(int(v) for v in self.group_sizes))
        object.__setattr__(self, "pos_means", tuple(float(v) for v in self.pos_means))
        object.__setattr__(self, "sigmas", tuple(float(v) for v in self.sigmas))
        k = len(self.group_sizes)
        if k < 1 or len(self.pos_means) != k or len(self.sigmas) != k:
            raise ValueError("group_sizes, pos_means and sigmas must align")
        if not 0.0 < self.pos_prior < 1.0:
            raise ValueError("pos_prior must lie in (0, 1)")
        if any(s <= 0 for s in self.sigmas) or self.noise_sigma <= 0:
            raise ValueError("all standard deviations must be positive")
        if self.features_per_group < 1:
            raise ValueError("features_per_group must be >= 1")
        if self.n_train != sum(self.group_sizes):
            raise ValueError("group sizes must partition the training set "
                             f"({sum(self.group_sizes)} != {self.n_train})")
        if self.n_test < 1:
            raise ValueError("n_test must be >= 1")

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SyntheticSpec":
        return SyntheticSpec(**json.loads(text))


@dataclass(frozen=True)
class SyntheticDataset:
    """Train/test feature groups with labels and the informative partition."""

    train_groups: list
    test_groups: list
    train_labels: LabelVector
    test_labels: LabelVector
    informative_assignment: np.ndarray
    test_assignment: np.ndarray
    spec: SyntheticSpec


def experiment1_spec() -> SyntheticSpec:
    """Three kernels with disjoint informative subsets of 300/300/500."""
    return SyntheticSpec(
        group_sizes=(300, 300, 500),
        pos_prior=0.25,
        pos_means=(0.4, 0.4, 0.4),
        sigmas=(0.3, 0.3, 0.4),
        noise_sigma=0.5,
        features_per_group=6,
        n_train=1100,
        n_test=1100,
    )


def experiment2_spec() -> SyntheticSpec:
    """Five kernels, informative subsets 300/300/500/200/500, weaker means."""
    return SyntheticSpec(
        group_sizes=(300, 300, 500, 200, 500),
        pos_prior=0.25,
        pos_means=(0.4, 0.4, 0.4, 0.2, 0.2),
        sigmas=(0.3, 0.3, 0.4, 0.4, 0.4),
        noise_sigma=0.5,
        features_per_group=6,
        n_train=1800,
        n_test=1800,
    )


def _draw_labels(rng: CounterRng, n: int, pos_prior: float) -> LabelVector:
    """Exact-count labels: round(pos_prior * n) positives, randomly placed.

    Placement consumes n uniforms; the positives go to the indices holding
    the smallest draws (stable argsort).
    """
    n_pos = int(round(pos_prior * n))
    n_pos = min(max(n_pos, 1), n - 1)  # keep both classes present
    order = np.argsort(rng.uniforms(n), kind="stable")
    values = np.full(n, -1, dtype=np.int8)
    values[order[:n_pos]] = 1
    return LabelVector(values)


def _block_assignment(sizes, n: int) -> np.ndarray:
    """Contiguous group blocks covering 0..n-1 (largest-remainder split).

    Labels are placed uniformly at random, so block assignment is
    statistically equivalent to a random partition.
    """
    total = sum(sizes)
    raw = [s * n / total for s in sizes]
    counts = [int(math.floor(v)) for v in raw]
    short = n - sum(counts)
    remainders = sorted(range(len(sizes)), key=lambda k: (-(raw[k] - counts[k]), k))
    for k in remainders[:short]:
        counts[k] += 1
    out = np.empty(n, dtype=np.int64)
    start = 0
    for k, c in enumerate(counts):
        out[start:start + c] = k
        start += c
    return out


def _draw_features(rng: CounterRng, spec: SyntheticSpec, labels: LabelVector,
                   assignment: np.ndarray) -> list:
    """Feature groups for one example set.

    Per group k, in group order: first one uniform per cell (row-major)
    deciding the mixture component of uninformative cells, then one normal
    per cell (row-major).  Informative rows ignore their component draws.
    """
    n = labels.n
    d = spec.features_per_group
    ypos = labels.values > 0
    groups = []
    for k in range(spec.n_groups):
        comp = rng.uniforms(n * d).reshape(n, d) < spec.pos_prior
        z = rng.normals(n * d).reshape(n, d)
        informative = assignment == k
        mean = np.where(comp, spec.pos_means[k], 0.0)
        sd = np.full((n, d), spec.noise_sigma)
        mean[informative] = np.where(ypos[informative, None], spec.pos_means[k], 0.0)
        sd[informative] = spec.sigmas[k]
        groups.append(FeatureGroupMatrix(mean + sd * z, group_id=k))
    return groups


def generate(spec: SyntheticSpec, seed: int | None = None) -> SyntheticDataset:
    """Draw one dataset; identical (spec, seed) give bit-identical output.

    Stream consumption order: training labels, test labels, training
    feature groups 0..K-1, test feature groups 0..K-1 (see _draw_features
    for the per-group order).
    """
    if seed is None:
        seed = spec.seed
    rng = CounterRng(seed)
    train_labels = _draw_labels(rng, spec.n_train, spec.pos_prior)
    test_labels = _draw_labels(rng, spec.n_test, spec.pos_prior)
    train_assignment = _block_assignment(spec.group_sizes, spec.n_train)
    test_assignment = _block_assignment(spec.group_sizes, spec.n_test)
    train_groups = _draw_features(rng, spec, train_labels, train_assignment)
    test_groups = _draw_features(rng, spec, test_labels, test_assignment)
    return SyntheticDataset(
        train_groups=train_groups,
        test_groups=test_groups,
        train_labels=train_labels,
        test_labels=test_labels,
        informative_assignment=train_assignment,
        test_assignment=test_assignment,
        spec=spec,
    )


def noise_feature_group(n: int, d: int, pos_mean: float, pos_prior: float,
                        noise_sigma: float, seed: int,
                        group_id: int = 0) -> FeatureGroupMatrix:
    """A pure-noise group: every row drawn from the uninformative mixture."""
    rng = CounterRng(seed)
    comp = rng.uniforms(n * d).reshape(n, d) < pos_prior
    z = rng.normals(n * d).reshape(n, d)
    mean = np.where(comp, pos_mean, 0.0)
    return FeatureGroupMatrix(mean + noise_sigma * z, group_id=group_id)


def noise_replicate_kernels(base: FeatureGroupMatrix, y: LabelVector,
                            count: int, noise_level: float, seed: int) -> list:
    """Gaussian kernels on independently noise-perturbed feature copies.

    Each replicate adds independent N(0, noise_level * column std) noise to
    the base features, then applies a Gaussian kernel with the mean-distance
    width heuristic of the perturbed copy.  All replicates share the base
    signal and differ only in their noise.
    """
    if count < 2:
        raise ValueError("need at least two replicates")
    if noise_level <= 0:
        raise ValueError("noise_level must be positive")
    if y.n != base.n:
        raise ValueError("labels do not match the feature matrix")
    col_std = base.values.std(axis=0)
    rng = CounterRng(seed)
    kernels = []
    for r in range(count):
        z = rng.normals(base.n * base.d).reshape(base.n, base.d)
        perturbed = base.values + noise_level * col_std * z
        width = mean_euclidean_distance(perturbed)
        kernels.append(gaussian_kernel(perturbed, width, name=f"replicate{r}"))
    return kernels


def write_dataset_csv(dataset: SyntheticDataset, out_dir):
    """Export one dataset as CSV feature files plus +1/-1 label files."""
    from .labels import write_labels

    os.makedirs(out_dir, exist_ok=True)
    for tag, groups, labels in (
        ("train", dataset.train_groups, dataset.train_labels),
        ("test", dataset.test_groups, dataset.test_labels),
    ):
        for g in groups:
            path = os.path.join(out_dir, f"{tag}_group{g.group_id}.csv")
            np.savetxt(path, g.values, delimiter=",", fmt="%.17g")
        write_labels(os.path.join(out_dir, f"{tag}_labels.txt"), labels)
    with open(os.path.join(out_dir, "spec.json"), "w", encoding="ascii") as fh:
        fh.write(dataset.spec.to_json() + "\n")
