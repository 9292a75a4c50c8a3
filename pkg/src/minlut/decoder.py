"""Bit-exact min-LUT and min-sum decoders (flooding schedule).

The min-LUT decoder only ever touches integer labels: VN updates walk the
designed LUT tree, CN updates apply min-sum on labels. Kernels are compiled
with numba and process whole batches of frames; a batch is independent of
any other, so batches can run on separate threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .density_evolution import DecoderSpec, Stage
from .labels import cn_labels_minsum
from .tanner import TannerGraph
from .trees import LLR

__all__ = [
    "CompiledSpec",
    "CorruptSpecError",
    "DecodeResult",
    "compile_spec",
    "cn_labels_minsum",
    "decode_min_lut",
    "decode_minsum",
    "quantize_fixed",
    "vn_lut_eval",
]

_KIND_LLR, _KIND_MSG, _KIND_NODE = 0, 1, 2


class CorruptSpecError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    iterations: np.ndarray
    syndrome_ok: np.ndarray


@dataclass(frozen=True)
class _StageTables:
    node_start: np.ndarray  # per stage
    node_count: np.ndarray
    nchild: np.ndarray  # per node
    child_kind: np.ndarray  # (nodes, max_children)
    child_ref: np.ndarray
    child_radix: np.ndarray
    table_off: np.ndarray
    table: np.ndarray
    out_size: np.ndarray  # per stage


@dataclass(frozen=True)
class CompiledSpec:
    """Flat integer arrays describing a :class:`DecoderSpec` for the kernels."""

    initial: np.ndarray
    llr_size: int
    iter_stage: np.ndarray  # stage slot run at iteration i (0-based i)
    iter_in_size: np.ndarray  # CN message alphabet seen at iteration i
    stages: _StageTables  # slots 0..S-1 are VN stages, slot S is the decision
    decision_slot: int
    decision_msg_size: int
    max_iter: int
    dv: int
    dc: int


def _stage_nodes(stage: Stage, n_msg: int):
    """Per-node child descriptions for one stage, bottom-up."""
    nodes = stage.tree.internal_nodes()
    pos = {id(n): k for k, n in enumerate(nodes)}
    slot = 0
    slots = {}
    for leaf in stage.tree.leaves():
        if leaf.kind != LLR:
            slots[id(leaf)] = slot
            slot += 1
    if slot != n_msg:
        raise CorruptSpecError(f"tree has {slot} message leaves, expected {n_msg}")
    out = []
    for k, node in enumerate(nodes):
        kids = []
        for c in node.children:
            if c.is_leaf and c.kind == LLR:
                kids.append((_KIND_LLR, 0, stage.llr_size))
            elif c.is_leaf:
                kids.append((_KIND_MSG, slots[id(c)], stage.msg_size))
            else:
                j = pos[id(c)]
                kids.append((_KIND_NODE, j, stage.luts[j].output_size))
        size = int(np.prod([r for _, _, r in kids]))
        if size != stage.luts[k].input_size:
            raise CorruptSpecError(
                f"node {k} table has {stage.luts[k].input_size} entries, inputs span {size}"
            )
        out.append((kids, stage.luts[k].map))
    return out


def _build_tables(stage_list, msg_counts):
    per_stage = [_stage_nodes(s, n) for s, n in zip(stage_list, msg_counts)]
    max_kids = max(len(k) for nodes in per_stage for k, _ in nodes)
    total = sum(len(nodes) for nodes in per_stage)
    node_start = np.zeros(len(per_stage), dtype=np.int64)
    node_count = np.zeros(len(per_stage), dtype=np.int64)
    nchild = np.zeros(total, dtype=np.int64)
    kind = np.zeros((total, max_kids), dtype=np.int64)
    ref = np.zeros((total, max_kids), dtype=np.int64)
    radix = np.ones((total, max_kids), dtype=np.int64)
    off = np.zeros(total, dtype=np.int64)
    tables = []
    g = 0
    t_off = 0
    for s, nodes in enumerate(per_stage):
        node_start[s] = g
        node_count[s] = len(nodes)
        for kids, table in nodes:
            nchild[g] = len(kids)
            for c, (kd, rf, rx) in enumerate(kids):
                kind[g, c], ref[g, c], radix[g, c] = kd, rf, rx
            off[g] = t_off
            tables.append(table)
            t_off += table.size
            g += 1
    out_size = np.array([s.output_size for s in stage_list], dtype=np.int64)
    return _StageTables(
        node_start, node_count, nchild, kind, ref, radix, off,
        np.concatenate(tables).astype(np.int64), out_size,
    )


def compile_spec(spec: DecoderSpec) -> CompiledSpec:
    """Flatten a decoder spec into kernel arrays."""
    params = spec.params
    sources = sorted(spec.stages)
    slot_of = {src: k for k, src in enumerate(sources)}
    stage_list = [spec.stages[s] for s in sources] + [spec.decision]
    msg_counts = [params.dv - 1] * len(sources) + [params.dv]
    tables = _build_tables(stage_list, msg_counts)
    I = params.iterations
    iter_stage = np.array([slot_of[params.stage_source(i)] for i in range(1, I + 1)], dtype=np.int64)
    # CN messages at iteration i carry the previous VN output alphabet
    in_sizes = [spec.initial.output_size] + [spec.stage_for(i).output_size for i in range(1, I)]
    for i in range(1, I + 1):
        if spec.stage_for(i).msg_size != in_sizes[i - 1]:
            raise CorruptSpecError(f"stage used at iteration {i} expects other message alphabet")
    if spec.initial.input_size != spec.quantizer.num_levels:
        raise CorruptSpecError("initial LUT does not match the LLR quantizer")
    return CompiledSpec(
        initial=spec.initial.map.astype(np.int64),
        llr_size=spec.initial.input_size,
        iter_stage=iter_stage,
        iter_in_size=np.array(in_sizes, dtype=np.int64),
        stages=tables,
        decision_slot=len(sources),
        decision_msg_size=spec.decision.msg_size,
        max_iter=I,
        dv=params.dv,
        dc=params.dc,
    )


# --------------------------------------------------------------------------- kernels

@nb.njit(cache=True, nogil=True)
def _eval_tree(slot, llr, msgs, node_start, node_count, nchild, kind, ref, radix, off, table, outs):
    first = node_start[slot]
    cnt = node_count[slot]
    for k in range(cnt):
        g = first + k
        idx = 0
        for c in range(nchild[g]):
            kd = kind[g, c]
            if kd == 0:
                v = llr
            elif kd == 1:
                v = msgs[ref[g, c]]
            else:
                v = outs[ref[g, c]]
            idx = idx * radix[g, c] + v
        outs[k] = table[off[g] + idx]
    return outs[cnt - 1]


@nb.njit(cache=True, nogil=True)
def _cn_phase_labels(v2c, c2v, cn_ptr, cn_edges, size):
    half = size // 2
    M = cn_ptr.size - 1
    for m in range(M):
        sgn = 1
        min1 = size
        min2 = size
        arg = -1
        for p in range(cn_ptr[m], cn_ptr[m + 1]):
            lab = v2c[cn_edges[p]]
            if lab >= half:
                mg = lab - half + 1
            else:
                mg = half - lab
                sgn = -sgn
            if mg < min1:
                min2 = min1
                min1 = mg
                arg = p
            elif mg < min2:
                min2 = mg
        for p in range(cn_ptr[m], cn_ptr[m + 1]):
            e = cn_edges[p]
            lab = v2c[e]
            s = sgn if lab >= half else -sgn
            mg = min2 if p == arg else min1
            c2v[e] = half - 1 + mg if s > 0 else half - mg


@nb.njit(cache=True, nogil=True)
def _syndrome_zero(bits, cn_ptr, cn_edges, edge_vn):
    M = cn_ptr.size - 1
    for m in range(M):
        par = 0
        for p in range(cn_ptr[m], cn_ptr[m + 1]):
            par ^= bits[edge_vn[cn_edges[p]]]
        if par:
            return False
    return True


@nb.njit(cache=True, nogil=True)
def _decode_lut_batch(
    labels, vn_ptr, cn_ptr, cn_edges, edge_vn,
    initial, iter_stage, iter_in_size, decision_slot, decision_msg_size, max_iter,
    node_start, node_count, nchild, kind, ref, radix, off, table,
    bits_out, iters_out, ok_out,
):
    F, N = labels.shape
    E = edge_vn.size
    v2c = np.empty(E, dtype=np.int64)
    c2v = np.empty(E, dtype=np.int64)
    max_deg = 0
    for n in range(N):
        d = vn_ptr[n + 1] - vn_ptr[n]
        if d > max_deg:
            max_deg = d
    msgs = np.empty(max_deg, dtype=np.int64)
    outs = np.empty(nchild.size, dtype=np.int64)
    bits = np.empty(N, dtype=np.uint8)
    for f in range(F):
        for e in range(E):
            v2c[e] = initial[labels[f, edge_vn[e]]]
        used = max_iter
        ok = False
        for it in range(max_iter):
            _cn_phase_labels(v2c, c2v, cn_ptr, cn_edges, iter_in_size[it])
            last = it == max_iter - 1
            if iter_in_size[it] == decision_msg_size:
                for n in range(N):
                    a = vn_ptr[n]
                    d = vn_ptr[n + 1] - a
                    for k in range(d):
                        msgs[k] = c2v[a + k]
                    bits[n] = _eval_tree(decision_slot, labels[f, n], msgs, node_start, node_count,
                                         nchild, kind, ref, radix, off, table, outs)
                if _syndrome_zero(bits, cn_ptr, cn_edges, edge_vn):
                    used = it + 1
                    ok = True
                    break
            if last:
                break
            slot = iter_stage[it]
            for n in range(N):
                a = vn_ptr[n]
                d = vn_ptr[n + 1] - a
                L = labels[f, n]
                for k in range(d):
                    j = 0
                    for q in range(d):
                        if q != k:
                            msgs[j] = c2v[a + q]
                            j += 1
                    v2c[a + k] = _eval_tree(slot, L, msgs, node_start, node_count,
                                            nchild, kind, ref, radix, off, table, outs)
        bits_out[f, :] = bits
        iters_out[f] = used
        ok_out[f] = ok


@nb.njit(cache=True, nogil=True)
def _decode_minsum_batch(llr, vn_ptr, cn_ptr, cn_edges, edge_vn, max_iter, sat,
                         bits_out, iters_out, ok_out, msg_trace):
    # sat <= 0 selects floating point; otherwise messages saturate at +-sat
    F, N = llr.shape
    E = edge_vn.size
    v2c = np.empty(E)
    c2v = np.empty(E)
    bits = np.empty(N, dtype=np.uint8)
    M = cn_ptr.size - 1
    for f in range(F):
        for e in range(E):
            x = llr[f, edge_vn[e]]
            if sat > 0:
                x = min(max(x, -sat), sat)
            v2c[e] = x
        used = max_iter
        ok = False
        peak = 0.0
        for it in range(max_iter):
            for m in range(M):
                sgn = 1.0
                min1 = np.inf
                min2 = np.inf
                arg = -1
                for p in range(cn_ptr[m], cn_ptr[m + 1]):
                    x = v2c[cn_edges[p]]
                    if x < 0:
                        sgn = -sgn
                    a = abs(x)
                    if a < min1:
                        min2 = min1
                        min1 = a
                        arg = p
                    elif a < min2:
                        min2 = a
                for p in range(cn_ptr[m], cn_ptr[m + 1]):
                    e = cn_edges[p]
                    s = -sgn if v2c[e] < 0 else sgn
                    c2v[e] = s * (min2 if p == arg else min1)
            for n in range(N):
                a = vn_ptr[n]
                total = llr[f, n]
                for q in range(a, vn_ptr[n + 1]):
                    total += c2v[q]
                bits[n] = 1 if total < 0 else 0
            if _syndrome_zero(bits, cn_ptr, cn_edges, edge_vn):
                used = it + 1
                ok = True
                break
            if it == max_iter - 1:
                break
            for n in range(N):
                a = vn_ptr[n]
                total = llr[f, n]
                for q in range(a, vn_ptr[n + 1]):
                    total += c2v[q]
                for q in range(a, vn_ptr[n + 1]):
                    x = total - c2v[q]
                    if abs(x) > peak:
                        peak = abs(x)
                    if sat > 0:
                        x = min(max(x, -sat), sat)
                    v2c[q] = x
        bits_out[f, :] = bits
        iters_out[f] = used
        ok_out[f] = ok
        msg_trace[f] = peak


# --------------------------------------------------------------------------- API

def _check_graph(graph: TannerGraph, dv, dc):
    if not graph.is_regular or graph.dv != dv or graph.dc != dc:
        raise ValueError(f"decoder built for ({dv},{dc}) but graph is {graph!r}")


def _graph_arrays(graph: TannerGraph):
    vn_ptr, cn_ptr, cn_edges = graph.edge_arrays()
    return vn_ptr, cn_ptr, cn_edges, graph.edge_vn.astype(np.int64)


def vn_lut_eval(spec, iteration: int, llr_label: int, msg_labels) -> int:
    """Evaluate the VN update of ``iteration`` (1-based) on one input vector.

    ``msg_labels`` are the ``dv - 1`` incoming CN labels in ascending
    neighbour order.
    """
    cs = spec if isinstance(spec, CompiledSpec) else compile_spec(spec)
    if not 1 <= iteration <= cs.max_iter:
        raise ValueError("iteration out of range")
    msgs = np.asarray(msg_labels, dtype=np.int64)
    if msgs.size != cs.dv - 1:
        raise ValueError(f"need {cs.dv - 1} message labels")
    size = cs.iter_in_size[iteration - 1]
    if not 0 <= llr_label < cs.llr_size or msgs.min() < 0 or msgs.max() >= size:
        raise CorruptSpecError("input label out of range for this iteration")
    t = cs.stages
    outs = np.empty(t.nchild.size, dtype=np.int64)
    return int(_eval_tree(cs.iter_stage[iteration - 1], int(llr_label), msgs, t.node_start,
                          t.node_count, t.nchild, t.child_kind, t.child_ref, t.child_radix,
                          t.table_off, t.table, outs))


def decision_eval(spec, llr_label: int, msg_labels) -> int:
    cs = spec if isinstance(spec, CompiledSpec) else compile_spec(spec)
    msgs = np.asarray(msg_labels, dtype=np.int64)
    t = cs.stages
    outs = np.empty(t.nchild.size, dtype=np.int64)
    return int(_eval_tree(cs.decision_slot, int(llr_label), msgs, t.node_start, t.node_count,
                          t.nchild, t.child_kind, t.child_ref, t.child_radix, t.table_off,
                          t.table, outs))


def decode_min_lut(spec, graph: TannerGraph, llr_labels) -> DecodeResult:
    """Decode one frame (1-D labels) or a batch (2-D, one frame per row).

    Stops a frame early once the decisions satisfy every parity check.
    Decisions are only taken at iterations whose CN alphabet matches the
    decision LUT, and always after the last iteration.
    """
    cs = spec if isinstance(spec, CompiledSpec) else compile_spec(spec)
    _check_graph(graph, cs.dv, cs.dc)
    labels = np.asarray(llr_labels, dtype=np.int64)
    single = labels.ndim == 1
    labels = np.atleast_2d(labels)
    if labels.shape[1] != graph.N:
        raise ValueError(f"expected {graph.N} labels per frame")
    if labels.size and (labels.min() < 0 or labels.max() >= cs.llr_size):
        raise ValueError("LLR label out of range")
    F = labels.shape[0]
    bits = np.zeros((F, graph.N), dtype=np.uint8)
    iters = np.zeros(F, dtype=np.int64)
    ok = np.zeros(F, dtype=np.bool_)
    t = cs.stages
    _decode_lut_batch(
        labels, *_graph_arrays(graph),
        cs.initial, cs.iter_stage, cs.iter_in_size, cs.decision_slot, cs.decision_msg_size,
        cs.max_iter, t.node_start, t.node_count, t.nchild, t.child_kind, t.child_ref,
        t.child_radix, t.table_off, t.table, bits, iters, ok,
    )
    if single:
        return DecodeResult(bits[0], iters[0], ok[0])
    return DecodeResult(bits, iters, ok)


def quantize_fixed(llr, step: float, bits: int) -> np.ndarray:
    """Uniform mid-tread LLR quantizer onto integers in ``[-(2^(b-1)-1), 2^(b-1)-1]``."""
    if bits < 2:
        raise ValueError("need at least 2 bits")
    if not step > 0:
        raise ValueError("step must be positive")
    top = 2 ** (bits - 1) - 1
    return np.clip(np.rint(np.asarray(llr, dtype=float) / step), -top, top)


def decode_minsum(graph: TannerGraph, llr_values, iterations: int, bits: int | None = None,
                  return_peak: bool = False):
    """Flooding min-sum; ``bits=None`` is floating point, else saturating fixed point.

    In fixed point ``llr_values`` must already be integers in the message
    range (see :func:`quantize_fixed`); VN outputs saturate at
    ``+-(2^(bits-1)-1)``. A zero a-posteriori sum decides bit 0 and a zero
    message counts as positive in the CN sign product.
    """
    if iterations < 1:
        raise ValueError("iterations must be positive")
    llr = np.atleast_2d(np.asarray(llr_values, dtype=float))
    single = np.ndim(llr_values) == 1
    if llr.shape[1] != graph.N:
        raise ValueError(f"expected {graph.N} values per frame")
    sat = 0.0
    if bits is not None:
        sat = float(2 ** (bits - 1) - 1)
        if np.any(llr != np.rint(llr)) or np.any(np.abs(llr) > sat):
            raise ValueError("fixed-point input must be integers within the message range")
    F = llr.shape[0]
    out = np.zeros((F, graph.N), dtype=np.uint8)
    iters = np.zeros(F, dtype=np.int64)
    ok = np.zeros(F, dtype=np.bool_)
    peak = np.zeros(F)
    _decode_minsum_batch(llr, *_graph_arrays(graph), iterations, sat, out, iters, ok, peak)
    if single:
        res = DecodeResult(out[0], iters[0], ok[0])
        peak = peak[0]
    else:
        res = DecodeResult(out, iters, ok)
    return (res, peak) if return_peak else res
