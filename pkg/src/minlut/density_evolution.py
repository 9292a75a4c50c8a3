"""Discretized density evolution and LUT design for min-LUT decoders.

Check nodes run the label-domain min-sum rule; variable nodes run a tree of
small LUTs, each designed greedily (bottom-up) to maximize the mutual
information of its output with the code bit. All message pmfs stay symmetric,
so the all-zero codeword analysis is exact.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    LlrQuantizer,
    channel_pmf,
    design_llr_quantizer,
    fine_llr_density,
    snr_to_sigma,
)
from .labels import cn_label_table
from .mi_quantizer import (
    ConditionalPmf,
    Lut,
    apply_lut,
    mutual_information,
    optimal_symmetric_quantizer,
    reproducer_values,
    sort_by_llr,
)
from .trees import LLR, LutTree, decision_tree_for, move_llr_deeper, parse_tree, validate_for_degree

__all__ = [
    "DEResult",
    "DecoderSpec",
    "DesignParams",
    "Stage",
    "ThresholdIntervalError",
    "ThresholdResult",
    "cn_pair_combine",
    "cn_update_distribution",
    "design_decision_lut",
    "design_decoder",
    "design_vn_stage",
    "find_threshold",
    "run_de",
]

logger = logging.getLogger(__name__)

_SYM_TOL = 1e-10


class ThresholdIntervalError(ValueError):
    """Density evolution fails even at the lower end of the search interval."""


@dataclass(frozen=True)
class DesignParams:
    """Configuration of a min-LUT decoder design.

    ``alphabet_schedule`` holds the VN output alphabet size per iteration; a
    single int is expanded to all iterations. ``reuse`` lists the iterations
    that get freshly designed LUTs (``None`` means every iteration).
    ``node_sizes`` optionally overrides the output size of non-root tree
    nodes, keyed by bottom-up node index.
    """

    dv: int
    dc: int
    iterations: int = 100
    alphabet_schedule: tuple[int, ...] | int = 8
    reuse: tuple[int, ...] | None = None
    tree: LutTree | str = "((mu mu)(mu mu) mu L)"
    decision_tree: LutTree | str | None = None
    llr_policy: str = "fixed"
    llr_levels: int = 8
    epsilon: float = 1e-4
    node_sizes: dict | None = None

    def __post_init__(self):
        tree = parse_tree(self.tree) if isinstance(self.tree, str) else self.tree
        dtree = self.decision_tree
        if dtree is None:
            dtree = decision_tree_for(tree)
        elif isinstance(dtree, str):
            dtree = parse_tree(dtree)
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "decision_tree", dtree)
        sched = self.alphabet_schedule
        if isinstance(sched, (int, np.integer)):
            sched = (int(sched),) * self.iterations
        sched = tuple(int(s) for s in sched)
        object.__setattr__(self, "alphabet_schedule", sched)
        reuse = tuple(range(1, self.iterations + 1)) if self.reuse is None else tuple(sorted(set(int(i) for i in self.reuse)))
        object.__setattr__(self, "reuse", reuse)
        self._validate()

    def _validate(self):
        if self.dv < 2 or self.dc < 2:
            raise ValueError("degrees must be at least 2")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if len(self.alphabet_schedule) != self.iterations:
            raise ValueError("alphabet schedule length must equal the iteration count")
        if any(s < 2 or s % 2 for s in self.alphabet_schedule):
            raise ValueError("message alphabet sizes must be even and >= 2")
        if any(b > a for a, b in zip(self.alphabet_schedule, self.alphabet_schedule[1:])):
            raise ValueError("alphabet schedule must be non-increasing")
        if self.llr_levels < 2 or self.llr_levels % 2:
            raise ValueError("llr_levels must be even and >= 2")
        if not self.reuse or self.reuse[0] != 1:
            raise ValueError("iteration 1 must be in the reuse set")
        if self.reuse[-1] > self.iterations:
            raise ValueError("reuse set exceeds the iteration count")
        sched = self.alphabet_schedule
        for i in range(2, self.iterations + 1):
            if i not in self.reuse:
                # a reused stage must see the same input and output alphabets
                if sched[i - 1] != sched[i - 2] or (i > 2 and sched[i - 2] != sched[i - 3]):
                    raise ValueError(
                        f"iteration {i} reuses a LUT but the message resolution changes"
                    )
        if self.llr_policy not in ("fixed", "switch"):
            raise ValueError("llr_policy must be 'fixed' or 'switch'")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        for role, t in (("vn", self.tree), ("decision", self.decision_tree)):
            problems = validate_for_degree(t, self.dv, role)
            if problems:
                raise ValueError(f"{role} tree {t}: " + "; ".join(problems))

    def stage_source(self, i: int) -> int:
        """Iteration whose LUTs iteration ``i`` runs (latest reuse point ``<= i``)."""
        return max(j for j in self.reuse if j <= i)


@dataclass(eq=False)
class Stage:
    """One VN update (or decision): a tree plus one LUT per internal node."""

    tree: LutTree
    luts: list[Lut]
    msg_size: int
    llr_size: int

    @property
    def output_size(self) -> int:
        return self.luts[-1].output_size

    def __eq__(self, other):
        if not isinstance(other, Stage):
            return NotImplemented
        return (
            str(self.tree) == str(other.tree)
            and self.msg_size == other.msg_size
            and self.llr_size == other.llr_size
            and self.luts == other.luts
        )


@dataclass(eq=False)
class DecoderSpec:
    """A designed decoder: channel quantizer, per-iteration LUT stages and decision."""

    params: DesignParams
    quantizer: LlrQuantizer
    initial: Lut
    stages: dict[int, Stage]
    decision: Stage
    design_sigma: float
    gamma_db: float | None = None
    rate: float | None = None
    mi_trace: list[float] = field(default_factory=list)
    cn_mi_trace: list[float] = field(default_factory=list)
    reproducers: list[np.ndarray] = field(default_factory=list)

    def stage_for(self, i: int) -> Stage:
        """Stage object run at iteration ``i`` (shared for reused iterations)."""
        return self.stages[self.params.stage_source(i)]

    @property
    def iterations(self) -> int:
        return self.params.iterations

    def message_sizes(self) -> list[int]:
        """VN output alphabet actually produced at each iteration."""
        return [self.stage_for(i).output_size for i in range(1, self.iterations + 1)]


# --------------------------------------------------------------------------- CN

def _renorm(p0: np.ndarray) -> np.ndarray:
    """Remove rounding drift from a pmf; drift beyond ``1e-10`` is an error."""
    total = p0.sum()
    if abs(total - 1.0) > _SYM_TOL:
        raise AssertionError(f"pmf normalisation drifted to {total!r}")
    return p0 / total


def cn_pair_combine(a: ConditionalPmf, b: ConditionalPmf) -> ConditionalPmf:
    """Distribution of the min-sum CN output for two independent inputs."""
    if a.alphabet_size != b.alphabet_size:
        raise ValueError("inputs must share the message alphabet")
    table = cn_label_table(a.alphabet_size).ravel()
    k = a.alphabet_size
    same = np.outer(a.p0, b.p0) + np.outer(a.p1, b.p1)
    diff = np.outer(a.p0, b.p1) + np.outer(a.p1, b.p0)
    p0 = 0.5 * np.bincount(table, weights=same.ravel(), minlength=k)
    if a.symmetric and b.symmetric:
        return ConditionalPmf.from_p0(_renorm(p0))
    p1 = 0.5 * np.bincount(table, weights=diff.ravel(), minlength=k)
    return ConditionalPmf(p0, p1)


def cn_update_distribution(msg: ConditionalPmf, dc: int) -> ConditionalPmf:
    """CN-to-VN message pmf from ``dc - 1`` iid VN-to-CN messages."""
    if dc < 2:
        raise ValueError("dc must be at least 2")
    out = msg
    for _ in range(dc - 2):
        out = cn_pair_combine(out, msg)
    return out


# --------------------------------------------------------------------------- VN

def _joint(pmfs: list[ConditionalPmf]) -> ConditionalPmf:
    """Product pmf over the mixed-radix joint index, first factor most significant."""
    p0 = pmfs[0].p0
    for p in pmfs[1:]:
        p0 = np.multiply.outer(p0, p.p0).ravel()
    if all(p.symmetric for p in pmfs):
        return ConditionalPmf.from_p0(_renorm(p0))
    p1 = pmfs[0].p1
    for p in pmfs[1:]:
        p1 = np.multiply.outer(p1, p.p1).ravel()
    return ConditionalPmf(p0, p1)


def _design_node(joint: ConditionalPmf, k: int) -> tuple[Lut, ConditionalPmf]:
    n = joint.alphabet_size
    if n <= k:
        # fewer joint inputs than requested outputs: pass through unchanged
        lut = Lut(np.arange(n), n, symmetric=True, degenerate=n < k)
        return lut, joint
    perm, sorted_pmf = sort_by_llr(joint)
    lut_sorted, _, _ = optimal_symmetric_quantizer(sorted_pmf, k)
    mapping = np.empty(n, dtype=np.int64)
    mapping[perm] = lut_sorted.map
    lut = Lut(mapping, k, symmetric=True)
    return lut, apply_lut(joint, lut)


def _forward(tree, p_llr, p_msg, sizes=None, luts=None):
    """Push leaf pmfs through a tree, designing node LUTs unless ``luts`` is given.

    Returns ``(node luts bottom-up, root output pmf)``.
    """
    nodes = tree.internal_nodes()
    out_luts: list[Lut] = []
    results: dict[int, ConditionalPmf] = {}
    cache: dict[str, tuple[Lut, ConditionalPmf]] = {}
    for idx, node in enumerate(nodes):
        kids = []
        for c in node.children:
            if c.is_leaf:
                kids.append(p_llr if c.kind == LLR else p_msg)
            else:
                kids.append(results[id(c)])
        joint = _joint(kids)
        if luts is not None:
            lut = luts[idx]
            if lut.input_size != joint.alphabet_size:
                raise ValueError(
                    f"node {idx} LUT expects {lut.input_size} inputs, got {joint.alphabet_size}"
                )
            out = apply_lut(joint, lut)
        else:
            key = (str(node), sizes[idx])
            if key not in cache:
                cache[key] = _design_node(joint, sizes[idx])
            lut, out = cache[key]
        out_luts.append(lut)
        results[id(node)] = out
    return out_luts, results[id(nodes[-1])]


def _node_sizes(tree: LutTree, root_size: int, overrides=None) -> list[int]:
    n = len(tree.internal_nodes())
    sizes = [root_size] * n
    for idx, k in (overrides or {}).items():
        if int(idx) < n - 1:
            sizes[int(idx)] = int(k)
    return sizes


def design_vn_stage(tree, p_llr, p_msg, node_sizes):
    """Design the node LUTs of one VN update tree.

    Parameters
    ----------
    tree : LutTree
    p_llr, p_msg : ConditionalPmf
        Symmetric pmfs of the channel label and of each incoming CN message.
    node_sizes : int or sequence of int
        Output alphabet per internal node (bottom-up); an int applies to all.

    Returns
    -------
    luts : list of Lut
    out : ConditionalPmf
        VN-to-CN message pmf at the root.
    mi : float
    """
    if isinstance(tree, str):
        tree = parse_tree(tree)
    n = len(tree.internal_nodes())
    if isinstance(node_sizes, (int, np.integer)):
        node_sizes = [int(node_sizes)] * n
    if len(node_sizes) != n:
        raise ValueError(f"need {n} node sizes, got {len(node_sizes)}")
    if any(k % 2 or k < 2 for k in node_sizes):
        raise ValueError("node output sizes must be even")
    luts, out = _forward(tree, p_llr, p_msg, sizes=list(node_sizes))
    return luts, out, mutual_information(out)


def design_decision_lut(tree, p_llr, p_msg, node_size=None):
    """Design a decision tree whose root outputs 2 labels (label 1 means bit 1).

    Returns ``(luts, out_pmf)``; ``out_pmf.p0[1]`` is the bit error probability.
    """
    if isinstance(tree, str):
        tree = parse_tree(tree)
    n = len(tree.internal_nodes())
    inner = node_size if node_size is not None else p_msg.alphabet_size
    sizes = [inner] * (n - 1) + [2]
    luts, out = _forward(tree, p_llr, p_msg, sizes=sizes)
    # label 0 collects the lower-LLR half, i.e. the inputs favouring bit 1
    flipped = [*luts[:-1], Lut(1 - luts[-1].map, 2, symmetric=True, degenerate=luts[-1].degenerate)]
    return flipped, ConditionalPmf.from_p0(out.p0[::-1].copy())


def _check_symmetric(pmf: ConditionalPmf, what: str):
    if np.max(np.abs(pmf.p0 - pmf.p1[::-1])) > _SYM_TOL or abs(pmf.p0.sum() - 1) > _SYM_TOL:
        raise AssertionError(f"{what} lost symmetry or normalisation")


# --------------------------------------------------------------------------- DE

@dataclass
class DEResult:
    mi_trace: list[float]
    cn_mi_trace: list[float]
    achieved: bool
    spec: DecoderSpec | None
    iterations_run: int
    degenerate: bool = False


def _initial_lut(p_llr: ConditionalPmf, size: int) -> tuple[Lut, ConditionalPmf]:
    n = p_llr.alphabet_size
    if size >= n:
        return Lut.identity(n), p_llr
    perm, sorted_pmf = sort_by_llr(p_llr)
    lut_sorted, _, _ = optimal_symmetric_quantizer(sorted_pmf, size)
    mapping = np.empty(n, dtype=np.int64)
    mapping[perm] = lut_sorted.map
    lut = Lut(mapping, size, symmetric=True)
    return lut, apply_lut(p_llr, lut)


def run_de(
    sigma: float,
    params: DesignParams,
    quantizer: LlrQuantizer | None = None,
    stop_early: bool = True,
    with_decision: bool = False,
) -> DEResult:
    """Density evolution with LUT design at noise level ``sigma``.

    The LLR quantizer is designed at ``sigma`` unless one is supplied. With
    ``stop_early`` the loop ends as soon as the VN message MI exceeds
    ``1 - epsilon``; otherwise all iterations run and every stage is kept.
    """
    if quantizer is None:
        quantizer = design_llr_quantizer(fine_llr_density(sigma), params.llr_levels)
    p_llr = channel_pmf(quantizer, sigma)
    mi_llr = mutual_information(p_llr)
    initial, p_msg = _initial_lut(p_llr, params.alphabet_schedule[0])

    stages: dict[int, Stage] = {}
    mi_trace, cn_trace, reps = [], [], []
    achieved = False
    degenerate = initial.degenerate
    switched = False
    tree = params.tree
    i = 0
    for i in range(1, params.iterations + 1):
        p_cn = cn_update_distribution(p_msg, params.dc)
        _check_symmetric(p_cn, f"CN pmf at iteration {i}")
        mi_cn = mutual_information(p_cn)
        cn_trace.append(mi_cn)
        if i in params.reuse:
            if params.llr_policy == "switch" and not switched and mi_cn >= mi_llr:
                switched = True
                tree = move_llr_deeper(params.tree)
            sizes = _node_sizes(tree, params.alphabet_schedule[i - 1], params.node_sizes)
            luts, p_msg = _forward(tree, p_llr, p_cn, sizes=sizes)
            stages[i] = Stage(tree, luts, p_cn.alphabet_size, p_llr.alphabet_size)
            degenerate |= any(l.degenerate for l in luts)
        else:
            stage = stages[params.stage_source(i)]
            if stage.msg_size != p_cn.alphabet_size:
                raise ValueError(f"iteration {i} cannot reuse a stage built for other alphabets")
            _, p_msg = _forward(stage.tree, p_llr, p_cn, luts=stage.luts)
        _check_symmetric(p_msg, f"VN pmf at iteration {i}")
        mi = mutual_information(p_msg)
        mi_trace.append(mi)
        reps.append(reproducer_values(p_msg)[0])
        if mi > 1.0 - params.epsilon:
            achieved = True
            if stop_early:
                break

    spec = None
    if with_decision:
        # the decision sees the CN messages of the last iteration
        dluts, _ = design_decision_lut(params.decision_tree, p_llr, p_cn)
        decision = Stage(params.decision_tree, dluts, p_cn.alphabet_size, p_llr.alphabet_size)
        spec = DecoderSpec(
            params=params,
            quantizer=quantizer,
            initial=initial,
            stages=stages,
            decision=decision,
            design_sigma=float(sigma),
            mi_trace=mi_trace,
            cn_mi_trace=cn_trace,
            reproducers=reps,
        )
    return DEResult(mi_trace, cn_trace, achieved, spec, i, degenerate)


@dataclass
class ThresholdResult:
    sigma: float
    at_upper: bool
    probes: list[tuple[float, bool, list[float]]]
    last_achieving: DEResult | None


def find_threshold(
    params: DesignParams,
    sigma_min: float = 0.3,
    sigma_max: float = 0.8,
    delta: float = 1e-4,
    check_endpoints: bool = True,
) -> ThresholdResult:
    """Bisection for the largest noise level at which DE converges.

    At least one midpoint is probed. With ``check_endpoints``, an interval whose
    probes all fail is verified at ``sigma_min`` (raising
    :class:`ThresholdIntervalError` if DE fails there too), and one whose
    probes all succeed is tested at ``sigma_max``.
    """
    if not sigma_min < sigma_max:
        raise ValueError("need sigma_min < sigma_max")
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = sigma_min, sigma_max
    probes = []
    last = None
    sigma = 0.5 * (lo + hi)
    while True:
        sigma = 0.5 * (lo + hi)
        res = run_de(sigma, params)
        probes.append((sigma, res.achieved, res.mi_trace))
        logger.debug("sigma=%.6f achieved=%s iterations=%d", sigma, res.achieved, res.iterations_run)
        if res.achieved:
            lo, last = sigma, res
        else:
            hi = sigma
        if hi - lo <= delta:
            break
    if check_endpoints:
        if last is None:
            res = run_de(sigma_min, params)
            probes.append((sigma_min, res.achieved, res.mi_trace))
            if not res.achieved:
                raise ThresholdIntervalError(
                    f"DE does not converge at sigma_min={sigma_min}; lower the interval"
                )
            last = res
        elif hi == sigma_max:
            res = run_de(sigma_max, params)
            probes.append((sigma_max, res.achieved, res.mi_trace))
            if res.achieved:
                return ThresholdResult(sigma_max, True, probes, res)
    return ThresholdResult(sigma, False, probes, last)


def design_decoder(
    gamma_db: float,
    rate: float,
    params: DesignParams,
    threshold: float | None = None,
) -> DecoderSpec:
    """Design a complete decoder at Eb/N0 ``gamma_db`` for a rate-``rate`` code.

    All ``params.iterations`` stages are materialized. If ``threshold`` is
    given and the design noise exceeds it, a warning is issued.
    """
    sigma = snr_to_sigma(gamma_db, rate)
    if threshold is not None and sigma >= threshold:
        warnings.warn(
            f"design sigma {sigma:.4f} is not below the threshold {threshold:.4f}",
            stacklevel=2,
        )
    res = run_de(sigma, params, stop_early=False, with_decision=True)
    spec = res.spec
    spec.gamma_db = float(gamma_db)
    spec.rate = float(rate)
    for i, r in enumerate(spec.reproducers, start=1):
        logger.info("iteration %d reproducers %s", i, np.round(r, 3).tolist())
    return spec
