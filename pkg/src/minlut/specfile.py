"""Text serialization of :class:`~minlut.density_evolution.DecoderSpec`.

Layout (one record per line, whitespace separated)::

    minlut-spec 1
    dv 6
    dc 32
    llr_levels 8
    iterations 8
    reuse 1 5
    schedule 8 8 8 8 8 8 8 8
    tree ((mu mu)(mu mu) mu L)
    decision_tree ((mu mu)(mu mu) mu L mu)
    llr_policy fixed
    epsilon 0.0001
    design_sigma 0.49...
    gamma_db 4.0
    rate 0.8125
    quantizer_boundaries ...
    quantizer_reproducers ...
    initial in=8 out=8
    <map>
    stage 1 msg=8 llr=8 tree=((mu mu)(mu mu) mu L)
    node 0 in=64 out=8
    <map>
    ...
    decision msg=8 llr=8 tree=...
    node 0 in=64 out=8
    <map>
    ...
    mi_trace ...
    cn_mi_trace ...
    reproducers 1 ...
    end

Node maps index the joint input in mixed radix over the node's children,
first child most significant. Floats are written with ``repr`` so a file
round-trips bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .channel import LlrQuantizer
from .density_evolution import DecoderSpec, DesignParams, Stage
from .mi_quantizer import Lut
from .trees import parse_tree

__all__ = ["FORMAT_VERSION", "SpecFormatError", "dumps", "loads", "read_spec", "write_spec"]

FORMAT_VERSION = 1
_MAGIC = "minlut-spec"


class SpecFormatError(ValueError):
    def __init__(self, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(message + where)
        self.line = line


def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _ints(values) -> str:
    return " ".join(str(int(v)) for v in values)


def _table(lines, header, lut: Lut):
    lines.append(f"{header} in={lut.input_size} out={lut.output_size}")
    lines.append(_ints(lut.map))


def _stage_block(lines, head, stage: Stage):
    lines.append(f"{head} msg={stage.msg_size} llr={stage.llr_size} tree={stage.tree}")
    for k, lut in enumerate(stage.luts):
        _table(lines, f"node {k}", lut)


def dumps(spec: DecoderSpec) -> str:
    p = spec.params
    lines = [
        f"{_MAGIC} {FORMAT_VERSION}",
        f"dv {p.dv}",
        f"dc {p.dc}",
        f"llr_levels {p.llr_levels}",
        f"iterations {p.iterations}",
        f"reuse {_ints(p.reuse)}",
        f"schedule {_ints(p.alphabet_schedule)}",
        f"tree {p.tree}",
        f"decision_tree {p.decision_tree}",
        f"llr_policy {p.llr_policy}",
        f"epsilon {p.epsilon!r}",
    ]
    if p.node_sizes:
        lines.append("node_sizes " + " ".join(f"{k}:{v}" for k, v in sorted(p.node_sizes.items())))
    lines.append(f"design_sigma {spec.design_sigma!r}")
    if spec.gamma_db is not None:
        lines.append(f"gamma_db {spec.gamma_db!r}")
    if spec.rate is not None:
        lines.append(f"rate {spec.rate!r}")
    lines.append(f"quantizer_boundaries {_floats(spec.quantizer.boundaries)}")
    lines.append(f"quantizer_reproducers {_floats(spec.quantizer.reproducers)}")
    _table(lines, "initial", spec.initial)
    for i in sorted(spec.stages):
        _stage_block(lines, f"stage {i}", spec.stages[i])
    _stage_block(lines, "decision", spec.decision)
    lines.append(f"mi_trace {_floats(spec.mi_trace)}")
    lines.append(f"cn_mi_trace {_floats(spec.cn_mi_trace)}")
    for i, r in enumerate(spec.reproducers, start=1):
        lines.append(f"reproducers {i} {_floats(r)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _kv(tokens):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise ValueError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        out[k] = v
    return out


class _Reader:
    def __init__(self, text):
        self.lines = [(n, ln.rstrip()) for n, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
        self.pos = 0

    def peek(self):
        if self.pos >= len(self.lines):
            return None, None
        n, ln = self.lines[self.pos]
        return n, ln

    def next(self):
        if self.pos >= len(self.lines):
            raise SpecFormatError("unexpected end of file")
        item = self.lines[self.pos]
        self.pos += 1
        return item


def _parse_table(reader, header_word):
    n, line = reader.next()
    parts = line.split()
    if parts[0] != header_word:
        raise SpecFormatError(f"expected '{header_word}' record", n)
    try:
        kv = _kv(parts[1:] if header_word != "node" else parts[2:])
        n_in, n_out = int(kv["in"]), int(kv["out"])
    except (KeyError, ValueError) as exc:
        raise SpecFormatError(f"bad table header: {exc}", n) from None
    n2, body = reader.next()
    try:
        m = np.array([int(t) for t in body.split()], dtype=np.int64)
    except ValueError:
        raise SpecFormatError("non-integer table entry", n2) from None
    if m.size != n_in:
        raise SpecFormatError(f"table has {m.size} entries, header says {n_in}", n2)
    try:
        lut = Lut(m, n_out, symmetric=bool(np.array_equal(m[::-1], n_out - 1 - m)),
                  degenerate=np.unique(m).size != n_out)
    except ValueError as exc:
        raise SpecFormatError(str(exc), n2) from None
    return lut


def _parse_stage(reader, n, line):
    head, _, tree_text = line.partition("tree=")
    parts = head.split()
    kv = _kv(p for p in parts if "=" in p)
    try:
        tree = parse_tree(tree_text)
    except ValueError as exc:
        raise SpecFormatError(f"bad tree: {exc}", n) from None
    luts = []
    for k in range(len(tree.internal_nodes())):
        luts.append(_parse_table(reader, "node"))
    return Stage(tree, luts, int(kv["msg"]), int(kv["llr"]))


def loads(text: str) -> DecoderSpec:
    reader = _Reader(text)
    n, line = reader.next()
    parts = line.split()
    if len(parts) != 2 or parts[0] != _MAGIC:
        raise SpecFormatError("not a min-LUT decoder spec", n)
    if int(parts[1]) != FORMAT_VERSION:
        raise SpecFormatError(f"unsupported format version {parts[1]}", n)
    header = {}
    stages = {}
    decision = None
    initial = None
    reps = []
    while True:
        n, line = reader.next()
        key, _, rest = line.partition(" ")
        if key == "end":
            break
        if key == "initial":
            reader.pos -= 1
            initial = _parse_table(reader, "initial")
        elif key == "stage":
            idx = int(rest.split()[0])
            stages[idx] = _parse_stage(reader, n, rest)
        elif key == "decision":
            decision = _parse_stage(reader, n, rest)
        elif key == "reproducers":
            vals = rest.split()
            reps.append(np.array([float(v) for v in vals[1:]]))
        else:
            header[key] = rest.strip()

    try:
        node_sizes = None
        if "node_sizes" in header:
            node_sizes = {int(a): int(b) for a, b in (t.split(":") for t in header["node_sizes"].split())}
        params = DesignParams(
            dv=int(header["dv"]),
            dc=int(header["dc"]),
            iterations=int(header["iterations"]),
            alphabet_schedule=tuple(int(v) for v in header["schedule"].split()),
            reuse=tuple(int(v) for v in header["reuse"].split()),
            tree=header["tree"],
            decision_tree=header["decision_tree"],
            llr_policy=header["llr_policy"],
            llr_levels=int(header["llr_levels"]),
            epsilon=float(header["epsilon"]),
            node_sizes=node_sizes,
        )
        quantizer = LlrQuantizer(
            [float(v) for v in header["quantizer_boundaries"].split()],
            [float(v) for v in header["quantizer_reproducers"].split()],
        )
    except KeyError as exc:
        raise SpecFormatError(f"missing header field {exc}") from None
    except ValueError as exc:
        raise SpecFormatError(str(exc)) from None
    if initial is None or decision is None:
        raise SpecFormatError("spec lacks the initial or decision table")
    if set(stages) != set(params.reuse):
        raise SpecFormatError("stage records do not match the reuse set")
    return DecoderSpec(
        params=params,
        quantizer=quantizer,
        initial=initial,
        stages=stages,
        decision=decision,
        design_sigma=float(header["design_sigma"]),
        gamma_db=float(header["gamma_db"]) if "gamma_db" in header else None,
        rate=float(header["rate"]) if "rate" in header else None,
        mi_trace=[float(v) for v in header.get("mi_trace", "").split()],
        cn_mi_trace=[float(v) for v in header.get("cn_mi_trace", "").split()],
        reproducers=reps,
    )


def write_spec(spec: DecoderSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(spec))


def read_spec(path) -> DecoderSpec:
    with open(path) as fh:
        return loads(fh.read())


def specs_equal(a: DecoderSpec, b: DecoderSpec) -> bool:
    """Structural equality, used to check round-trips."""
    return dumps(a) == dumps(b)
