"""Tanner graphs: alist I/O, random regular construction and syndromes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AlistError",
    "TannerGraph",
    "format_alist",
    "generate_regular",
    "parse_alist",
    "read_alist",
    "syndrome",
    "write_alist",
]


class AlistError(ValueError):
    """Malformed or inconsistent alist content.

    ``kind`` is one of ``"format"``, ``"range"``, ``"duplicate"``,
    ``"inconsistent"``; ``edge`` names the offending ``(vn, cn)`` pair
    (0-based) when there is one.
    """

    def __init__(self, kind: str, message: str, edge: tuple[int, int] | None = None):
        super().__init__(message)
        self.kind = kind
        self.edge = edge


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite VN/CN adjacency; neighbour lists are sorted ascending."""

    vn_adjacency: tuple[tuple[int, ...], ...]
    cn_adjacency: tuple[tuple[int, ...], ...]
    # flat edge arrays, built on construction
    edge_vn: np.ndarray = field(init=False, repr=False)
    edge_cn: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vadj = tuple(tuple(sorted(int(c) for c in row)) for row in self.vn_adjacency)
        cadj = tuple(tuple(sorted(int(v) for v in row)) for row in self.cn_adjacency)
        object.__setattr__(self, "vn_adjacency", vadj)
        object.__setattr__(self, "cn_adjacency", cadj)
        _check_consistent(vadj, cadj)
        ev = np.array([n for n, row in enumerate(vadj) for _ in row], dtype=np.int64)
        ec = np.array([m for row in vadj for m in row], dtype=np.int64)
        ev.flags.writeable = False
        ec.flags.writeable = False
        object.__setattr__(self, "edge_vn", ev)
        object.__setattr__(self, "edge_cn", ec)

    @property
    def N(self) -> int:
        return len(self.vn_adjacency)

    @property
    def M(self) -> int:
        return len(self.cn_adjacency)

    @property
    def num_edges(self) -> int:
        return self.edge_vn.size

    @property
    def vn_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.vn_adjacency])

    @property
    def cn_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.cn_adjacency])

    @property
    def is_regular(self) -> bool:
        return (
            self.N > 0
            and self.M > 0
            and np.unique(self.vn_degrees).size == 1
            and np.unique(self.cn_degrees).size == 1
        )

    @property
    def dv(self) -> int | None:
        return int(self.vn_degrees[0]) if self.is_regular else None

    @property
    def dc(self) -> int | None:
        return int(self.cn_degrees[0]) if self.is_regular else None

    @property
    def rate(self) -> float:
        """Design rate ``1 - M/N`` (ignores possible rank deficiency)."""
        return 1.0 - self.M / self.N

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.M, self.N), dtype=np.uint8)
        H[self.edge_cn, self.edge_vn] = 1
        return H

    @classmethod
    def from_dense(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        vadj = [np.flatnonzero(H[:, n]).tolist() for n in range(H.shape[1])]
        cadj = [np.flatnonzero(H[m]).tolist() for m in range(H.shape[0])]
        return cls(vadj, cadj)

    def edge_arrays(self):
        """CSR-style arrays for the decoder kernels.

        Returns ``(vn_ptr, cn_ptr, cn_edges)``. Edges are numbered VN-major, so
        the edges of VN ``n`` are ``vn_ptr[n]:vn_ptr[n+1]`` in ascending CN
        order; ``cn_edges[cn_ptr[m]:cn_ptr[m+1]]`` lists the edge ids at CN
        ``m`` in ascending VN order.
        """
        vn_ptr = np.r_[0, np.cumsum(self.vn_degrees)].astype(np.int64)
        order = np.lexsort((self.edge_vn, self.edge_cn))
        cn_ptr = np.r_[0, np.cumsum(self.cn_degrees)].astype(np.int64)
        return vn_ptr, cn_ptr, order.astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return self.vn_adjacency == other.vn_adjacency and self.cn_adjacency == other.cn_adjacency

    def __repr__(self):
        reg = f", dv={self.dv}, dc={self.dc}" if self.is_regular else ""
        return f"TannerGraph(N={self.N}, M={self.M}{reg})"


def _check_consistent(vadj, cadj):
    M = len(cadj)
    N = len(vadj)
    v_edges = set()
    for n, row in enumerate(vadj):
        for m in row:
            if not 0 <= m < M:
                raise AlistError("range", f"VN {n + 1} lists CN {m + 1} outside 1..{M}", (n, m))
            if (n, m) in v_edges:
                raise AlistError("duplicate", f"duplicate edge VN {n + 1} - CN {m + 1}", (n, m))
            v_edges.add((n, m))
    c_edges = set()
    for m, row in enumerate(cadj):
        for n in row:
            if not 0 <= n < N:
                raise AlistError("range", f"CN {m + 1} lists VN {n + 1} outside 1..{N}", (n, m))
            if (n, m) in c_edges:
                raise AlistError("duplicate", f"duplicate edge VN {n + 1} - CN {m + 1}", (n, m))
            c_edges.add((n, m))
    mismatch = v_edges ^ c_edges
    if mismatch:
        n, m = min(mismatch)
        side = "VN" if (n, m) in v_edges else "CN"
        raise AlistError(
            "inconsistent",
            f"edge VN {n + 1} - CN {m + 1} appears only in the {side} half",
            (n, m),
        )


def parse_alist(text: str) -> TannerGraph:
    """Parse alist text (1-based indices, zero padding allowed)."""
    lines = [ln.split() for ln in text.strip().splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        ints = [[int(t) for t in ln] for ln in lines]
    except ValueError as exc:
        raise AlistError("format", f"non-integer token: {exc}") from None
    if len(ints) < 4 or len(ints[0]) < 2 or len(ints[1]) < 2:
        raise AlistError("format", "alist header is incomplete")
    N, M = ints[0][:2]
    max_dv, max_dc = ints[1][:2]
    if len(ints[2]) != N or len(ints[3]) != M:
        raise AlistError("format", "degree lines do not match N and M")
    if len(ints) < 4 + N + M:
        raise AlistError("format", f"expected {N + M} adjacency lines, found {len(ints) - 4}")
    vdeg, cdeg = ints[2], ints[3]
    if max(vdeg) > max_dv or max(cdeg) > max_dc:
        raise AlistError("format", "a node degree exceeds the stated maximum")
    vadj, cadj = [], []
    for n in range(N):
        row = [x - 1 for x in ints[4 + n] if x != 0]
        if len(row) != vdeg[n]:
            raise AlistError("format", f"VN {n + 1} lists {len(row)} CNs, degree says {vdeg[n]}")
        vadj.append(row)
    for m in range(M):
        row = [x - 1 for x in ints[4 + N + m] if x != 0]
        if len(row) != cdeg[m]:
            raise AlistError("format", f"CN {m + 1} lists {len(row)} VNs, degree says {cdeg[m]}")
        cadj.append(row)
    return TannerGraph(vadj, cadj)


def format_alist(graph: TannerGraph) -> str:
    """Serialize to alist (no zero padding)."""
    vdeg, cdeg = graph.vn_degrees, graph.cn_degrees
    out = [
        f"{graph.N} {graph.M}",
        f"{vdeg.max()} {cdeg.max()}",
        " ".join(map(str, vdeg)),
        " ".join(map(str, cdeg)),
    ]
    out += [" ".join(str(m + 1) for m in row) for row in graph.vn_adjacency]
    out += [" ".join(str(n + 1) for n in row) for row in graph.cn_adjacency]
    return "\n".join(out) + "\n"


def read_alist(path) -> TannerGraph:
    with open(path) as fh:
        return parse_alist(fh.read())


def write_alist(graph: TannerGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_alist(graph))


def generate_regular(N: int, dv: int, dc: int, seed: int = 0, max_attempts: int = 1000) -> TannerGraph:
    """Random ``(dv, dc)``-regular graph from a socket permutation.

    Parallel edges are removed by swapping the CN socket of an offending edge
    with a random other socket; gives up after ``max_attempts`` swaps.
    """
    if N <= 0 or dv <= 0 or dc <= 0:
        raise ValueError("N, dv and dc must be positive")
    if (N * dv) % dc:
        raise ValueError(f"N*dv = {N * dv} is not divisible by dc = {dc}")
    M = N * dv // dc
    if dv > M:
        raise ValueError("dv exceeds the number of check nodes")
    rng = np.random.default_rng(seed)
    E = N * dv
    vn_of = np.repeat(np.arange(N), dv)
    cn_of = rng.permutation(np.repeat(np.arange(M), dc))
    attempts = 0
    while True:
        keys = vn_of * M + cn_of
        _, first, counts = np.unique(keys, return_index=True, return_counts=True)
        dup_mask = np.ones(E, dtype=bool)
        dup_mask[first] = False
        dups = np.flatnonzero(dup_mask)
        if dups.size == 0:
            break
        for e in dups:
            attempts += 1
            if attempts > max_attempts:
                raise RuntimeError("could not remove parallel edges; try another seed")
            f = int(rng.integers(E))
            cn_of[e], cn_of[f] = cn_of[f], cn_of[e]
    vadj = [[] for _ in range(N)]
    cadj = [[] for _ in range(M)]
    for v, c in zip(vn_of.tolist(), cn_of.tolist()):
        vadj[v].append(c)
        cadj[c].append(v)
    return TannerGraph(vadj, cadj)


def syndrome(graph: TannerGraph, bits) -> np.ndarray:
    """Per-CN parity of ``bits`` (``H c`` over GF(2))."""
    bits = np.asarray(bits).astype(np.int64) & 1
    if bits.shape != (graph.N,):
        raise ValueError(f"expected {graph.N} bits, got shape {bits.shape}")
    return (np.bincount(graph.edge_cn, weights=bits[graph.edge_vn], minlength=graph.M).astype(np.int64) & 1).astype(np.uint8)
