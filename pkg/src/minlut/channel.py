"""BI-AWGN channel, symmetric LLR quantizer design and label sampling.

Convention: bit 0 is sent as +1, bit 1 as -1, ``y = s + n`` with
``n ~ N(0, sigma^2)`` and the channel LLR is ``2 y / sigma^2``. Positive LLR
therefore favours bit 0, and label index grows with LLR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .mi_quantizer import (
    ConditionalPmf,
    mutual_information,
    optimal_symmetric_quantizer,
    reproducer_values,
)

__all__ = [
    "LlrQuantizer",
    "channel_pmf",
    "design_llr_quantizer",
    "fine_llr_density",
    "sample_llr_label",
    "sample_llr_labels",
    "sigma_to_snr",
    "snr_to_sigma",
    "uniform_llr_quantizer",
]

DEFAULT_GRID_SIZE = 2000
DEFAULT_CLIP = 40.0


def snr_to_sigma(gamma_db: float, rate: float) -> float:
    """Noise standard deviation for ``Eb/N0 = gamma_db`` at code rate ``rate``."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if not np.isfinite(gamma_db):
        if gamma_db > 0:
            return 0.0
        raise ValueError("gamma_db must be finite")
    return float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (gamma_db / 10.0))))


def sigma_to_snr(sigma: float, rate: float) -> float:
    """Inverse of :func:`snr_to_sigma`, in dB."""
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return float(10.0 * np.log10(1.0 / (2.0 * rate * sigma**2)))


@dataclass(frozen=True, eq=False)
class LlrQuantizer:
    """Symmetric scalar quantizer on the LLR axis.

    ``boundaries`` holds the ``num_levels - 1`` inner thresholds; region ``k``
    is ``[boundaries[k-1], boundaries[k])``. ``reproducers`` are the label LLRs
    at the design point.
    """

    boundaries: np.ndarray
    reproducers: np.ndarray

    def __post_init__(self):
        b = np.array(self.boundaries, dtype=float)
        r = np.array(self.reproducers, dtype=float)
        n = b.size + 1
        if n % 2:
            raise ValueError(f"number of levels must be even, got {n}")
        if r.size != n:
            raise ValueError("need one reproducer value per level")
        if np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if np.max(np.abs(b + b[::-1]), initial=0.0) > 1e-9:
            raise ValueError("boundaries must be anti-symmetric about 0")
        b.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "reproducers", r)

    @property
    def num_levels(self) -> int:
        return self.boundaries.size + 1

    def quantize(self, llr) -> np.ndarray:
        """Region index of each LLR value."""
        return np.searchsorted(self.boundaries, llr, side="right")

    def __eq__(self, other):
        if not isinstance(other, LlrQuantizer):
            return NotImplemented
        return np.array_equal(self.boundaries, other.boundaries) and np.array_equal(
            self.reproducers, other.reproducers
        )

    def __repr__(self):
        return f"LlrQuantizer(levels={self.num_levels}, boundaries={np.round(self.boundaries, 4).tolist()})"


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")


def _gaussian_region_mass(lo, hi, mean, sd):
    """P(lo <= Y < hi) for ``Y ~ N(mean, sd^2)``, accurate deep in the tails."""
    a = (np.asarray(lo, dtype=float) - mean) / sd
    b = (np.asarray(hi, dtype=float) - mean) / sd
    # integrate on whichever side of the mean keeps the cdf small
    upper = a >= 0
    out = np.empty(np.broadcast(a, b).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        lf = np.exp(log_ndtr(b)) - np.exp(log_ndtr(a))
        rt = np.exp(log_ndtr(-a)) - np.exp(log_ndtr(-b))
    out[...] = np.where(upper, rt, lf)
    return np.maximum(out, 0.0)


def fine_llr_density(
    sigma: float, grid_size: int = DEFAULT_GRID_SIZE, clip: float = DEFAULT_CLIP
) -> ConditionalPmf:
    """Channel LLR distribution on a fine uniform grid over ``[-clip, clip]``.

    Tail mass beyond the clip is folded into the end bins. The result is
    symmetric by construction (``p1`` is the mirror of ``p0``).
    """
    _check_sigma(sigma)
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    if not clip > 0:
        raise ValueError("clip must be positive")
    edges = np.linspace(-clip, clip, grid_size + 1)
    edges[0], edges[-1] = -np.inf, np.inf
    # LLR = 2y/sigma^2 with y ~ N(1, sigma^2) given bit 0
    scale = sigma**2 / 2.0
    p0 = _gaussian_region_mass(edges[:-1] * scale, edges[1:] * scale, 1.0, sigma)
    p1 = _gaussian_region_mass(edges[:-1] * scale, edges[1:] * scale, -1.0, sigma)
    p0 = 0.5 * (p0 + p1[::-1])
    p0 /= p0.sum()
    return ConditionalPmf.from_p0(p0)


def fine_grid_edges(grid_size: int = DEFAULT_GRID_SIZE, clip: float = DEFAULT_CLIP) -> np.ndarray:
    return np.linspace(-clip, clip, grid_size + 1)


def design_llr_quantizer(
    fine: ConditionalPmf,
    num_levels: int,
    clip: float = DEFAULT_CLIP,
) -> LlrQuantizer:
    """MI-optimal symmetric quantizer for a fine-grid LLR pmf.

    ``fine`` must come from :func:`fine_llr_density` with the same ``clip``;
    its grid fixes where boundaries may fall.
    """
    if num_levels % 2 or num_levels < 2:
        raise ValueError(f"num_levels must be even and positive, got {num_levels}")
    if not fine.symmetric:
        raise ValueError("fine pmf must be symmetric")
    n = fine.alphabet_size
    if num_levels > n:
        raise ValueError("num_levels exceeds the fine grid size")
    # fine bins are already in LLR order, so no sort is needed
    lut, out, _ = optimal_symmetric_quantizer(fine, num_levels)
    edges = fine_grid_edges(n, clip)
    cuts = np.flatnonzero(np.diff(lut.map)) + 1
    boundaries = edges[cuts]
    # exact anti-symmetry (linspace rounding can leave ulp-level offsets)
    boundaries = 0.5 * (boundaries - boundaries[::-1])
    reps, _ = reproducer_values(out)
    return LlrQuantizer(boundaries, reps)


def uniform_llr_quantizer(num_levels: int, step: float, sigma: float | None = None) -> LlrQuantizer:
    """Mid-rise uniform quantizer with ``num_levels`` levels of width ``step``.

    Reproducers are the region midpoints, or the exact label LLRs when
    ``sigma`` is given.
    """
    if num_levels % 2 or num_levels < 2:
        raise ValueError("num_levels must be even and positive")
    if not step > 0:
        raise ValueError("step must be positive")
    half = num_levels // 2
    boundaries = step * np.arange(-(half - 1), half, dtype=float)
    reps = step * (np.arange(num_levels) - half + 0.5)
    q = LlrQuantizer(boundaries, reps)
    if sigma is not None:
        reps, _ = reproducer_values(channel_pmf(q, sigma))
        q = LlrQuantizer(boundaries, reps)
    return q


def channel_pmf(quantizer: LlrQuantizer, sigma: float) -> ConditionalPmf:
    """Exact pmf of the quantized LLR label given the code bit."""
    if sigma == 0:
        p0 = np.zeros(quantizer.num_levels)
        p0[-1] = 1.0
        return ConditionalPmf.from_p0(p0)
    _check_sigma(sigma)
    edges = np.r_[-np.inf, quantizer.boundaries, np.inf]
    scale = sigma**2 / 2.0
    p0 = _gaussian_region_mass(edges[:-1] * scale, edges[1:] * scale, 1.0, sigma)
    p0 /= p0.sum()
    return ConditionalPmf.from_p0(p0)


def sample_llr_labels(bits, sigma: float, quantizer: LlrQuantizer, rng: np.random.Generator) -> np.ndarray:
    """Transmit ``bits`` over the channel and return quantized LLR labels."""
    bits = np.asarray(bits)
    y = (1.0 - 2.0 * bits) + sigma * rng.standard_normal(bits.shape)
    if sigma == 0:
        return quantizer.quantize(np.sign(y) * np.inf)
    return quantizer.quantize(2.0 * y / sigma**2)


def sample_llr_label(bit: int, sigma: float, quantizer: LlrQuantizer, rng: np.random.Generator) -> int:
    """Single-draw version of :func:`sample_llr_labels`."""
    return int(sample_llr_labels(np.array([bit]), sigma, quantizer, rng)[0])


def channel_information(quantizer: LlrQuantizer, sigma: float) -> float:
    return mutual_information(channel_pmf(quantizer, sigma))
