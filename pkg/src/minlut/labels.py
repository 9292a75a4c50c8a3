"""Sign/magnitude structure of an even, LLR-ordered message alphabet.

Labels ``0 .. K-1`` are sorted by reproducer LLR. The upper half is positive,
the lower half negative, and ``K-1-j`` is the negation of ``j``. Magnitudes
run from 1 (labels next to the centre) to ``K/2`` (the extremes).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["MessageAlphabet", "cn_label_table", "cn_labels_minsum"]


@dataclass(frozen=True)
class MessageAlphabet:
    size: int

    def __post_init__(self):
        if self.size < 2 or self.size % 2:
            raise ValueError(f"alphabet size must be even and >= 2, got {self.size}")

    @property
    def half(self) -> int:
        return self.size // 2

    def neg(self, j):
        return self.size - 1 - np.asarray(j)

    def sign(self, j):
        return np.where(np.asarray(j) >= self.half, 1, -1)

    def mag(self, j):
        j = np.asarray(j)
        return np.where(j >= self.half, j - self.half + 1, self.half - j)

    def label(self, sign, mag):
        sign = np.asarray(sign)
        mag = np.asarray(mag)
        return np.where(sign > 0, self.half - 1 + mag, self.half - mag)


@lru_cache(maxsize=None)
def cn_label_table(size: int) -> np.ndarray:
    """``table[a, b]``: min-sum combination of labels ``a`` and ``b``."""
    alpha = MessageAlphabet(size)
    j = np.arange(size)
    s = alpha.sign(j)
    m = alpha.mag(j)
    table = alpha.label(np.outer(s, s), np.minimum.outer(m, m)).astype(np.int64)
    table.flags.writeable = False
    return table


def cn_labels_minsum(labels, size: int) -> int:
    """Min-sum check-node rule on labels: product of signs, minimum magnitude."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("need at least one input label")
    if labels.min() < 0 or labels.max() >= size:
        raise ValueError("label out of range")
    alpha = MessageAlphabet(size)
    sign = np.prod(alpha.sign(labels))
    return int(alpha.label(sign, alpha.mag(labels).min()))
