"""Monte Carlo FER/BER estimation over the BI-AWGN channel.

Every frame draws its noise from its own counter-based stream keyed by
``(master_seed, snr_index, frame_index)``, so results do not depend on how
frames are spread over workers. The all-zero codeword is transmitted; this is
exact for the symmetric decoders in this package.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import snr_to_sigma
from .decoder import compile_spec, decode_min_lut, decode_minsum, quantize_fixed
from .density_evolution import DecoderSpec
from .tanner import TannerGraph

__all__ = [
    "CSV_COLUMNS",
    "MinLutRunner",
    "MinSumRunner",
    "PointResult",
    "frame_rng",
    "simulate_point",
    "simulate_sweep",
    "write_csv",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "ebn0_db", "frames", "bit_errors", "frame_errors", "ber", "fer", "avg_iterations", "elapsed_s",
)
WORKERS_ENV = "MINLUT_WORKERS"


def default_workers() -> int:
    return int(os.environ.get(WORKERS_ENV, "1"))


def frame_rng(master_seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    """Independent Philox stream for one frame."""
    return np.random.Generator(
        np.random.Philox(key=int(master_seed), counter=[0, int(frame_index), int(snr_index), 0])
    )


def _noise(master_seed, snr_index, first, count, N):
    out = np.empty((count, N))
    for k in range(count):
        out[k] = frame_rng(master_seed, snr_index, first + k).standard_normal(N)
    return out


class MinLutRunner:
    """Decodes noisy all-zero frames with a designed min-LUT spec."""

    def __init__(self, spec: DecoderSpec, graph: TannerGraph):
        self.spec = spec
        self.compiled = compile_spec(spec)
        self.graph = graph
        self.quantizer = spec.quantizer

    def __call__(self, noise, sigma):
        y = 1.0 + sigma * noise
        labels = self.quantizer.quantize(2.0 * y / sigma**2)
        return decode_min_lut(self.compiled, self.graph, labels)


class MinSumRunner:
    """Min-sum baseline; ``bits=None`` is floating point."""

    def __init__(self, graph: TannerGraph, iterations: int, bits: int | None = None, llr_step: float = 1.0):
        self.graph = graph
        self.iterations = iterations
        self.bits = bits
        self.llr_step = llr_step

    def __call__(self, noise, sigma):
        llr = 2.0 * (1.0 + sigma * noise) / sigma**2
        if self.bits is not None:
            llr = quantize_fixed(llr, self.llr_step, self.bits)
        return decode_minsum(self.graph, llr, self.iterations, bits=self.bits)


@dataclass
class PointResult:
    ebn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    iterations_total: int
    elapsed_s: float
    n: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else float("nan")

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_iterations(self) -> float:
        return self.iterations_total / self.frames if self.frames else float("nan")

    def fer_stderr(self) -> float:
        p = self.fer
        return float(np.sqrt(p * (1 - p) / self.frames)) if self.frames else float("nan")


def _run_chunk(runner, sigma, master_seed, snr_index, first, count, N):
    if sigma == 0:
        noise = np.zeros((count, N))
    else:
        noise = _noise(master_seed, snr_index, first, count, N)
    res = runner(noise, sigma)
    bit_err = res.bits.sum(axis=1).astype(np.int64)
    return bit_err, np.asarray(res.iterations, dtype=np.int64)


def simulate_point(
    runner,
    graph: TannerGraph,
    ebn0_db: float,
    rate: float,
    snr_index: int = 0,
    master_seed: int = 0,
    max_frames: int = 10**7,
    min_frame_errors: int = 100,
    workers: int = 1,
    chunk: int = 64,
    pool: ThreadPoolExecutor | None = None,
) -> PointResult:
    """Simulate one SNR point until enough frame errors or ``max_frames``.

    Frames are counted in index order up to the one that brings the error
    count to ``min_frame_errors``; surplus frames decoded in parallel are
    discarded, which keeps the counts independent of ``workers``.
    """
    if min_frame_errors < 1:
        raise ValueError("min_frame_errors must be at least 1")
    if max_frames < 1:
        raise ValueError("max_frames must be at least 1")
    sigma = snr_to_sigma(ebn0_db, rate)
    N = graph.N
    start = time.perf_counter()
    frames = bit_errors = frame_errors = iters = 0
    next_frame = 0
    own_pool = pool is None and workers > 1
    if own_pool:
        pool = ThreadPoolExecutor(max_workers=workers)
    try:
        done = False
        while not done and next_frame < max_frames:
            jobs = []
            for _ in range(max(workers, 1)):
                if next_frame >= max_frames:
                    break
                count = min(chunk, max_frames - next_frame)
                args = (runner, sigma, master_seed, snr_index, next_frame, count, N)
                jobs.append(pool.submit(_run_chunk, *args) if pool else args)
                next_frame += count
            for job in jobs:
                bit_err, it = job.result() if pool else _run_chunk(*job)
                for be, ic in zip(bit_err.tolist(), it.tolist()):
                    frames += 1
                    bit_errors += be
                    iters += ic
                    if be:
                        frame_errors += 1
                        if frame_errors >= min_frame_errors:
                            done = True
                            break
                if done:
                    break
    finally:
        if own_pool:
            pool.shutdown()
    elapsed = time.perf_counter() - start
    logger.info("Eb/N0 %.3f dB: %d frames, %d frame errors", ebn0_db, frames, frame_errors)
    return PointResult(float(ebn0_db), frames, bit_errors, frame_errors, iters, elapsed, N)


def simulate_sweep(runner, graph, ebn0_list, rate, master_seed=0, max_frames=10**7,
                   min_frame_errors=100, workers=1, chunk=64) -> list[PointResult]:
    """Simulate each SNR point in order; SNR index ``k`` keys the noise streams."""
    ebn0_list = [float(v) for v in ebn0_list]
    if not ebn0_list or not all(np.isfinite(ebn0_list)):
        raise ValueError("Eb/N0 list must be non-empty and finite")
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        return [
            simulate_point(runner, graph, g, rate, k, master_seed, max_frames,
                           min_frame_errors, workers, chunk, pool)
            for k, g in enumerate(ebn0_list)
        ]
    finally:
        if pool:
            pool.shutdown()


def format_csv(results: list[PointResult], timing: bool = True) -> str:
    """CSV text with a fixed header. ``timing=False`` writes ``elapsed_s`` as 0."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow([
            repr(r.ebn0_db), r.frames, r.bit_errors, r.frame_errors,
            repr(r.ber), repr(r.fer), repr(r.avg_iterations),
            repr(round(r.elapsed_s, 3)) if timing else "0",
        ])
    return buf.getvalue()


def write_csv(results, path, timing: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(results, timing))
