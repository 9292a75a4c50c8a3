"""Pmf algebra and mutual-information-maximizing quantizers for binary-input channels.

A binary-input discrete channel is stored as a :class:`ConditionalPmf`, i.e. the
pair ``p(k | x=0)``, ``p(k | x=1)`` over an ordered label alphabet. Quantizers
are deterministic maps (:class:`Lut`) from input labels to output labels.

The optimal quantizer search relies on the classic structure result for
binary-input channels: an MI-optimal deterministic quantizer partitions the
inputs into contiguous runs once they are sorted by LLR. The search is a
dynamic program over run boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConditionalPmf",
    "Lut",
    "apply_lut",
    "cluster_information",
    "mutual_information",
    "optimal_quantizer",
    "optimal_symmetric_quantizer",
    "reproducer_values",
    "sort_by_llr",
]

_SUM_TOL = 1e-12
# LLRs closer than this are treated as ties (products of equal factors taken
# in different order differ by a few ulp).
_LLR_TIE_DECIMALS = 9


@dataclass(frozen=True, eq=False)
class ConditionalPmf:
    """Pair of label pmfs conditioned on the code bit.

    Parameters
    ----------
    p0, p1 : array_like
        ``p0[k] = P(label k | x=0)`` and ``p1[k] = P(label k | x=1)``.
    symmetric : bool
        Marks ``p0[k] == p1[K-1-k]``. Checked on construction.
    """

    p0: np.ndarray
    p1: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        p0 = np.array(self.p0, dtype=float)
        p1 = np.array(self.p1, dtype=float)
        if p0.ndim != 1 or p0.shape != p1.shape or p0.size == 0:
            raise ValueError("p0 and p1 must be non-empty vectors of equal length")
        if (p0 < 0).any() or (p1 < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(p0.sum() - 1.0) > _SUM_TOL or abs(p1.sum() - 1.0) > _SUM_TOL:
            raise ValueError(
                f"pmfs must sum to 1 (got {p0.sum():.15g}, {p1.sum():.15g})"
            )
        if self.symmetric and np.max(np.abs(p0 - p1[::-1])) > _SUM_TOL:
            raise ValueError("pmf flagged symmetric but p0[k] != p1[K-1-k]")
        p0.flags.writeable = False
        p1.flags.writeable = False
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @classmethod
    def from_p0(cls, p0) -> "ConditionalPmf":
        """Build a symmetric pmf from ``p0`` alone (``p1`` is its mirror image)."""
        p0 = np.asarray(p0, dtype=float)
        return cls(p0, p0[::-1].copy(), symmetric=True)

    @property
    def alphabet_size(self) -> int:
        return self.p0.size

    def __len__(self):
        return self.p0.size

    def __eq__(self, other):
        if not isinstance(other, ConditionalPmf):
            return NotImplemented
        return (
            self.symmetric == other.symmetric
            and np.array_equal(self.p0, other.p0)
            and np.array_equal(self.p1, other.p1)
        )

    def __repr__(self):
        return (
            f"ConditionalPmf(K={self.alphabet_size}, symmetric={self.symmetric}, "
            f"MI={mutual_information(self):.6f})"
        )

    def llr(self) -> np.ndarray:
        """Raw ``log(p0/p1)`` per label; ``nan`` where both masses vanish."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.p0) - np.log(self.p1)


@dataclass(frozen=True, eq=False)
class Lut:
    """Deterministic map from ``input_size`` labels onto ``output_size`` labels."""

    map: np.ndarray
    output_size: int
    symmetric: bool = False
    degenerate: bool = False
    input_size: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.map, dtype=np.int64)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("lut map must be a non-empty vector")
        if m.min() < 0 or m.max() >= self.output_size:
            raise ValueError("lut entries out of range")
        if self.symmetric and not np.array_equal(m[::-1], self.output_size - 1 - m):
            raise ValueError("lut flagged symmetric violates map[n-1-a] = K-1-map[a]")
        if not self.degenerate and np.unique(m).size != self.output_size:
            raise ValueError("lut is not surjective and not flagged degenerate")
        m.flags.writeable = False
        object.__setattr__(self, "map", m)
        object.__setattr__(self, "input_size", m.size)

    @classmethod
    def identity(cls, size: int, symmetric: bool = True) -> "Lut":
        return cls(np.arange(size), size, symmetric=symmetric)

    def __eq__(self, other):
        if not isinstance(other, Lut):
            return NotImplemented
        return self.output_size == other.output_size and np.array_equal(
            self.map, other.map
        )

    def __repr__(self):
        return f"Lut({self.input_size} -> {self.output_size}, symmetric={self.symmetric})"


def _plogq(p, q):
    """Elementwise ``p * log2(p / q)`` with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.zeros(np.broadcast(p, q).shape)
    pos = np.broadcast_to(p > 0, out.shape)
    pb = np.broadcast_to(p, out.shape)
    qb = np.broadcast_to(q, out.shape)
    out[pos] = pb[pos] * np.log2(pb[pos] / qb[pos])
    return out


def cluster_information(P0, P1):
    """Contribution of a cluster with masses ``P0 = P(A|0)``, ``P1 = P(A|1)``.

    Summing this over the clusters of a partition gives the MI (in bits) between
    the cluster index and a uniform code bit. Works elementwise on arrays.
    """
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    avg = 0.5 * (P0 + P1)
    return 0.5 * (_plogq(P0, avg) + _plogq(P1, avg))


def mutual_information(pmf: ConditionalPmf) -> float:
    """Mutual information ``I(label; x)`` in bits for a uniform code bit."""
    mi = float(cluster_information(pmf.p0, pmf.p1).sum())
    return min(max(mi, 0.0), 1.0)


def reproducer_values(pmf: ConditionalPmf) -> tuple[np.ndarray, np.ndarray]:
    """Reproducer LLR ``log(p0/p1)`` for every label.

    Labels with zero mass under both hypotheses get a value interpolated from
    their neighbours. Returns ``(values, interpolated_mask)``.
    """
    llr = pmf.llr()
    bad = np.isnan(llr)
    if bad.any():
        good = np.flatnonzero(~bad)
        if good.size == 0:
            return np.zeros_like(llr), bad
        finite = good[np.isfinite(llr[good])]
        if finite.size == 0:
            finite = good
        llr = llr.copy()
        llr[bad] = np.interp(np.flatnonzero(bad), finite, llr[finite])
    return llr, bad


def _sort_keys(pmf: ConditionalPmf) -> np.ndarray:
    llr = pmf.llr()
    llr[np.isnan(llr)] = 0.0
    return np.round(llr, _LLR_TIE_DECIMALS)


def sort_by_llr(pmf: ConditionalPmf) -> tuple[np.ndarray, ConditionalPmf]:
    """Stable sort of the labels by ascending LLR.

    Returns ``(perm, sorted_pmf)`` with ``sorted_pmf.p0 == pmf.p0[perm]``. For a
    symmetric pmf the permutation is chosen complement-consistent
    (``perm[n-1-s] == n-1-perm[s]``) so the sorted pmf stays symmetric.
    """
    n = pmf.alphabet_size
    keys = _sort_keys(pmf)
    if pmf.symmetric and n % 2 == 0:
        perm = _symmetric_order(keys)
    else:
        perm = np.argsort(keys, kind="stable")
    sorted_pmf = ConditionalPmf(pmf.p0[perm], pmf.p1[perm], symmetric=pmf.symmetric and n % 2 == 0)
    return perm, sorted_pmf


def _symmetric_order(keys: np.ndarray) -> np.ndarray:
    """Complement-consistent ascending order for a symmetric alphabet.

    Each complement pair ``{a, n-1-a}`` contributes its larger-LLR member to the
    upper half (ties at LLR 0 go to the larger index); the lower half mirrors it.
    """
    n = keys.size
    a = np.arange(n // 2, n)
    b = n - 1 - a
    upper = np.where(keys[a] >= keys[b], a, b)
    upper = upper[np.argsort(keys[upper], kind="stable")]
    lower = (n - 1 - upper)[::-1]
    return np.concatenate([lower, upper])


def _tie_groups(keys: np.ndarray, k: int) -> np.ndarray:
    """Start offsets of runs of equal keys, split further until there are ``k`` runs.

    Merging equal-LLR inputs loses no information and shrinks the DP. When
    fewer than ``k`` distinct values exist, leading members are peeled off the
    first multi-element runs so every output cluster stays non-empty.
    """
    n = keys.size
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    if starts.size >= k:
        return starts
    need = k - starts.size
    is_start = np.zeros(n, dtype=bool)
    is_start[starts] = True
    for idx in range(n):
        if need == 0:
            break
        if not is_start[idx]:
            is_start[idx] = True
            need -= 1
    return np.flatnonzero(is_start)


def _contiguous_dp(q0: np.ndarray, q1: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Best split of ``len(q0)`` atoms into ``k`` non-empty contiguous runs.

    Returns the run start offsets (length ``k``, first is 0) and the summed
    cluster information. Ties go to the smallest boundary index.
    """
    m = q0.size
    c0 = np.r_[0.0, np.cumsum(q0)]
    c1 = np.r_[0.0, np.cumsum(q1)]
    # gain[a, b]: run covering atoms a..b-1
    P0 = c0[None, :] - c0[:, None]
    P1 = c1[None, :] - c1[:, None]
    np.maximum(P0, 0.0, out=P0)
    np.maximum(P1, 0.0, out=P1)
    gain = cluster_information(P0, P1)
    invalid = np.tril(np.ones((m + 1, m + 1), dtype=bool))
    gain[invalid] = -np.inf

    best = gain[0].copy()  # best[b]: one run covering 0..b-1
    back = np.zeros((k, m + 1), dtype=np.int64)
    for j in range(1, k):
        cand = best[:, None] + gain
        back[j] = np.argmax(cand, axis=0)
        best = cand[back[j], np.arange(m + 1)]
    starts = np.empty(k, dtype=np.int64)
    b = m
    for j in range(k - 1, 0, -1):
        a = back[j, b]
        starts[j] = a
        b = a
    starts[0] = 0
    return starts, float(best[m])


def _runs_to_map(atom_starts: np.ndarray, run_starts: np.ndarray, n: int) -> np.ndarray:
    """Output label per sorted input, given atom offsets and chosen run starts."""
    bounds = atom_starts[run_starts]
    return np.searchsorted(bounds, np.arange(n), side="right") - 1


def optimal_quantizer(pmf: ConditionalPmf, k: int):
    """MI-maximizing deterministic quantizer of a sorted pmf onto ``k`` labels.

    Parameters
    ----------
    pmf : ConditionalPmf
        Input channel, labels already in ascending-LLR order.
    k : int
        Output alphabet size.

    Returns
    -------
    lut : Lut
    out : ConditionalPmf
        Push-forward of ``pmf`` through ``lut``.
    mi : float
        Achieved mutual information in bits.
    """
    n = pmf.alphabet_size
    if k < 1:
        raise ValueError("output size must be at least 1")
    if k > n:
        raise ValueError(f"output size {k} exceeds input size {n}")
    keys = _sort_keys(pmf)
    if np.any(keys[1:] < keys[:-1]):
        raise ValueError("pmf must be sorted by LLR")
    if k == n:
        lut = Lut(np.arange(n), n, symmetric=pmf.symmetric)
    else:
        atoms = _tie_groups(keys, k)
        q0 = np.add.reduceat(pmf.p0, atoms)
        q1 = np.add.reduceat(pmf.p1, atoms)
        runs, _ = _contiguous_dp(q0, q1, k)
        lut = Lut(_runs_to_map(atoms, runs, n), k)
    out = apply_lut(pmf, lut)
    return lut, out, mutual_information(out)


def optimal_symmetric_quantizer(pmf: ConditionalPmf, k: int):
    """MI-maximizing quantizer constrained to the label symmetry.

    The cut between the lower and upper halves of the sorted input is fixed at
    the centre; the upper half is split optimally into ``k/2`` runs and the
    lower half mirrors it, so ``map[n-1-a] == k-1-map[a]``.

    Returns ``(lut, out, mi)`` like :func:`optimal_quantizer`.
    """
    n = pmf.alphabet_size
    if k < 2 or k % 2:
        raise ValueError(f"symmetric quantizer needs an even output size, got {k}")
    if not pmf.symmetric or n % 2:
        raise ValueError("symmetric quantizer needs a symmetric pmf of even size")
    if k > n:
        raise ValueError(f"output size {k} exceeds input size {n}")
    keys = _sort_keys(pmf)
    if np.any(keys[1:] < keys[:-1]):
        raise ValueError("pmf must be sorted by LLR")
    half = n // 2
    kh = k // 2
    if k == n:
        upper_map = np.arange(half)
    else:
        up_keys = keys[half:]
        atoms = _tie_groups(up_keys, kh)
        q0 = np.add.reduceat(pmf.p0[half:], atoms)
        q1 = np.add.reduceat(pmf.p1[half:], atoms)
        if kh == 1:
            runs = np.zeros(1, dtype=np.int64)
        else:
            runs, _ = _contiguous_dp(q0, q1, kh)
        upper_map = _runs_to_map(atoms, runs, half)
    full = np.concatenate([kh - 1 - upper_map[::-1], kh + upper_map])
    lut = Lut(full, k, symmetric=True)
    out = apply_lut(pmf, lut)
    return lut, out, mutual_information(out)


def apply_lut(pmf: ConditionalPmf, lut: Lut) -> ConditionalPmf:
    """Push a pmf forward through a lut: ``out(j|x) = sum_{map[a]=j} in(a|x)``."""
    if lut.input_size != pmf.alphabet_size:
        raise ValueError(
            f"lut expects {lut.input_size} inputs, pmf has {pmf.alphabet_size}"
        )
    p0 = np.bincount(lut.map, weights=pmf.p0, minlength=lut.output_size)
    if pmf.symmetric and lut.symmetric:
        return ConditionalPmf.from_p0(p0)
    p1 = np.bincount(lut.map, weights=pmf.p1, minlength=lut.output_size)
    return ConditionalPmf(p0, p1)
