"""Binary label vectors over {-1, +1} and their file format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LabelVector:
    """Per-example labels y in {-1, +1} with class counts."""

    values: np.ndarray
    n_pos: int = field(init=False)
    n_neg: int = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int8)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("labels must be a nonempty 1-d sequence")
        if not np.all(np.abs(values) == 1):
            raise ValueError("labels must take values in {-1, +1}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n_pos", int(np.sum(values == 1)))
        object.__setattr__(self, "n_neg", int(np.sum(values == -1)))

    @property
    def n(self) -> int:
        return self.values.size

    def both_classes(self) -> bool:
        return self.n_pos >= 1 and self.n_neg >= 1

    def require_both_classes(self):
        if not self.both_classes():
            raise ValueError(
                "both classes must be present "
                f"(n_pos={self.n_pos}, n_neg={self.n_neg})"
            )

    def to_float(self) -> np.ndarray:
        return self.values.astype(np.float64)


def read_labels(path) -> LabelVector:
    """Read a labels file: one +1 / -1 token per line."""
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.strip()
            if not tok:
                continue
            if tok not in ("+1", "-1", "1"):
                raise ValueError(f"{path}:{lineno}: expected +1 or -1, got {tok!r}")
            values.append(1 if tok in ("+1", "1") else -1)
    if not values:
        raise ValueError(f"{path}: empty labels file")
    return LabelVector(np.asarray(values, dtype=np.int8))


def write_labels(path, y: LabelVector):
    with open(path, "w", encoding="ascii") as fh:
        for v in y.values:
            fh.write("+1\n" if v > 0 else "-1\n")
