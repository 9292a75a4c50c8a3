"""Command-line front end: ``minlut design|threshold|simulate|inspect``.

Each subcommand reads an optional YAML config (a flat mapping, keys listed in
``CONFIG_KEYS``) and applies ``--set key=value`` overrides on top. Exit codes:
0 on success, 1 for configuration errors, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from .channel import sigma_to_snr
from .density_evolution import DesignParams, ThresholdIntervalError, design_decoder, find_threshold
from .simulation import MinLutRunner, MinSumRunner, default_workers, format_csv, simulate_sweep
from .specfile import SpecFormatError, read_spec, write_spec
from .tanner import AlistError, generate_regular, read_alist
from .trees import REFERENCE_TREES, cumulative_depth

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

DESIGN_KEYS = {
    "dv": 6, "dc": 32, "iterations": 8, "alphabet_schedule": 8, "reuse": None,
    "tree": "T1", "decision_tree": None, "llr_policy": "fixed", "llr_levels": 8,
    "epsilon": 1e-4, "node_sizes": None,
}
CONFIG_KEYS = {
    **DESIGN_KEYS,
    # design
    "gamma_db": 4.0, "rate": None, "threshold": None, "output": None,
    # threshold
    "trees": None, "sigma_min": 0.3, "sigma_max": 0.8, "delta": 1e-4,
    "check_endpoints": True, "csv": None,
    # simulate
    "graph": None, "N": 2048, "seed": 0, "decoder": None, "baseline": None,
    "ms_bits": 4, "ms_step": 1.0, "ebn0": None, "max_frames": 10**7,
    "min_frame_errors": 100, "master_seed": 0, "workers": None, "chunk": 64,
    "timing": True,
}


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    """Validated inputs of ``simulate``."""

    graph_path: str | None
    N: int
    dv: int
    dc: int
    seed: int
    decoder_path: str | None
    baseline: str | None
    ms_bits: int
    ms_step: float
    iterations: int
    ebn0: list[float]
    max_frames: int
    min_frame_errors: int
    master_seed: int
    workers: int
    chunk: int
    output: str | None
    timing: bool = field(default=True)

    def __post_init__(self):
        if self.min_frame_errors < 1:
            raise ConfigError("min_frame_errors must be at least 1")
        if self.max_frames < 1:
            raise ConfigError("max_frames must be at least 1")
        if not self.ebn0 or not all(np.isfinite(self.ebn0)):
            raise ConfigError("ebn0 must be a non-empty list of finite values")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if (self.decoder_path is None) == (self.baseline is None):
            raise ConfigError("give exactly one of 'decoder' (spec file) or 'baseline'")
        if self.baseline not in (None, "minsum-float", "minsum-fixed"):
            raise ConfigError("baseline must be 'minsum-float' or 'minsum-fixed'")


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = dict(CONFIG_KEYS)
    if path:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad YAML in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        cfg.update(data)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        cfg[key.strip()] = yaml.safe_load(value)
    unknown = sorted(set(cfg) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _tree_text(name):
    return REFERENCE_TREES.get(str(name), name)


def design_params(cfg: dict) -> DesignParams:
    kw = {k: cfg[k] for k in DESIGN_KEYS}
    kw["tree"] = _tree_text(kw["tree"])
    if isinstance(kw["alphabet_schedule"], list):
        kw["alphabet_schedule"] = tuple(kw["alphabet_schedule"])
    if kw["reuse"] is not None:
        kw["reuse"] = tuple(kw["reuse"])
    try:
        return DesignParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _rate(cfg):
    if cfg["rate"] is not None:
        return float(cfg["rate"])
    return 1.0 - cfg["dv"] / cfg["dc"]


def _fmt(values, digits=6):
    return " ".join(f"{v:.{digits}f}" for v in values)


def cmd_design(cfg: dict, out=None) -> int:
    out = out or sys.stdout
    params = design_params(cfg)
    if not cfg["output"]:
        raise ConfigError("design needs 'output' (spec file path)")
    rate = _rate(cfg)
    spec = design_decoder(float(cfg["gamma_db"]), rate, params, threshold=cfg["threshold"])
    write_spec(spec, cfg["output"])
    print(f"design sigma {spec.design_sigma:.6f} (Eb/N0 {cfg['gamma_db']} dB, R={rate:.6g})", file=out)
    print(f"stages {list(spec.stages)}", file=out)
    print(f"mi_trace {_fmt(spec.mi_trace)}", file=out)
    for i, r in enumerate(spec.reproducers, start=1):
        print(f"reproducers {i}: {_fmt(r, 3)}", file=out)
    print(f"wrote {cfg['output']}", file=out)
    return EXIT_OK


def cmd_threshold(cfg: dict, out=None) -> int:
    out = out or sys.stdout
    names = cfg["trees"] or [cfg["tree"]]
    if isinstance(names, str):
        names = [names]
    rate = _rate(cfg)
    rows = []
    for name in names:
        params = design_params({**cfg, "tree": name})
        res = find_threshold(params, float(cfg["sigma_min"]), float(cfg["sigma_max"]),
                             float(cfg["delta"]), bool(cfg["check_endpoints"]))
        ebn0 = sigma_to_snr(res.sigma, rate)
        flag = " (upper end of interval)" if res.at_upper else ""
        print(f"{name}: sigma* = {res.sigma:.6f}  Eb/N0 = {ebn0:.4f} dB  "
              f"lambda = {cumulative_depth(params.tree)}{flag}", file=out)
        for k, (sigma, ok, trace) in enumerate(res.probes, start=1):
            last = trace[-1] if trace else float("nan")
            print(f"  probe {k}: sigma={sigma:.6f} achieved={ok} iterations={len(trace)} "
                  f"final_mi={last:.6f}", file=out)
        rows.append((str(name), str(params.tree), res.sigma, ebn0, res.at_upper, len(res.probes)))
    if cfg["csv"]:
        with open(cfg["csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("tree", "expression", "sigma", "ebn0_db", "at_upper", "probes"))
            for name, expr, sigma, ebn0, up, n in rows:
                w.writerow((name, expr, repr(sigma), repr(ebn0), int(up), n))
    return EXIT_OK


def sim_config(cfg: dict) -> SimConfig:
    ebn0 = cfg["ebn0"]
    if isinstance(ebn0, (int, float)):
        ebn0 = [ebn0]
    workers = cfg["workers"] if cfg["workers"] is not None else default_workers()
    try:
        return SimConfig(
            graph_path=cfg["graph"], N=int(cfg["N"]), dv=int(cfg["dv"]), dc=int(cfg["dc"]),
            seed=int(cfg["seed"]), decoder_path=cfg["decoder"], baseline=cfg["baseline"],
            ms_bits=int(cfg["ms_bits"]), ms_step=float(cfg["ms_step"]),
            iterations=int(cfg["iterations"]),
            ebn0=[float(v) for v in ebn0] if ebn0 else [], max_frames=int(cfg["max_frames"]),
            min_frame_errors=int(cfg["min_frame_errors"]), master_seed=int(cfg["master_seed"]),
            workers=int(workers), chunk=int(cfg["chunk"]), output=cfg["output"],
            timing=bool(cfg["timing"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(cfg: dict, out=None) -> int:
    out = out or sys.stdout
    sc = sim_config(cfg)
    if sc.graph_path:
        graph = read_alist(sc.graph_path)
    else:
        graph = generate_regular(sc.N, sc.dv, sc.dc, sc.seed)
    rate = graph.rate
    if sc.decoder_path:
        spec = read_spec(sc.decoder_path)
        runner = MinLutRunner(spec, graph)
    else:
        bits = sc.ms_bits if sc.baseline == "minsum-fixed" else None
        runner = MinSumRunner(graph, sc.iterations, bits=bits, llr_step=sc.ms_step)
    results = simulate_sweep(runner, graph, sc.ebn0, rate, sc.master_seed, sc.max_frames,
                             sc.min_frame_errors, sc.workers, sc.chunk)
    text = format_csv(results, sc.timing)
    if sc.output:
        with open(sc.output, "w", newline="") as fh:
            fh.write(text)
    out.write(text)
    return EXIT_OK


def reuse_map(spec) -> dict[int, int]:
    """Iterations that run an earlier stage, mapped to that stage."""
    p = spec.params
    return {i: p.stage_source(i) for i in range(1, p.iterations + 1) if i not in p.reuse}


def _format_reuse(mapping: dict[int, int]) -> str:
    parts = []
    items = sorted(mapping.items())
    k = 0
    while k < len(items):
        start, src = items[k]
        end = start
        while k + 1 < len(items) and items[k + 1][1] == src and items[k + 1][0] == end + 1:
            k += 1
            end = items[k][0]
        parts.append(f"{start}..{end}→{src}" if end > start else f"{start}→{src}")
        k += 1
    return "{" + ", ".join(parts) + "}"


def cmd_inspect(path: str, out=None) -> int:
    out = out or sys.stdout
    spec = read_spec(path)
    p = spec.params
    print(f"ensemble (dv={p.dv}, dc={p.dc}), iterations {p.iterations}, |L| = {p.llr_levels}", file=out)
    seen = set()
    for i in sorted(spec.stages):
        tree = spec.stages[i].tree
        if str(tree) not in seen:
            seen.add(str(tree))
            print(f"tree {tree}  λ = {cumulative_depth(tree)}  (from stage {i})", file=out)
    print(f"decision tree {spec.decision.tree}", file=out)
    print("alphabet " + " ".join(str(s) for s in p.alphabet_schedule), file=out)
    print(f"reuse set {list(p.reuse)}  stage map {_format_reuse(reuse_map(spec))}", file=out)
    print(f"design sigma {spec.design_sigma:.6f}", file=out)
    print(f"mi_trace {_fmt(spec.mi_trace)}", file=out)
    for i, r in enumerate(spec.reproducers, start=1):
        print(f"reproducers {i}: {_fmt(r, 3)}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minlut", description="min-LUT LDPC decoder design and simulation")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("design", "design a decoder and write its spec file"),
        ("threshold", "bisect the DE noise threshold"),
        ("simulate", "Monte Carlo FER/BER sweep, CSV output"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-c", "--config", help="YAML config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (value parsed as YAML)")
        p.add_argument("-o", "--output")
    sub.choices["simulate"].add_argument("--workers", type=int)
    sub.choices["simulate"].add_argument("--seed", type=int, dest="master_seed")
    sub.choices["threshold"].add_argument("--csv")
    p = sub.add_parser("inspect", help="summarize a spec file")
    p.add_argument("spec")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "inspect":
            return cmd_inspect(args.spec)
        cfg = load_config(args.config, args.set)
        for key in ("output", "workers", "master_seed", "csv"):
            value = getattr(args, key, None)
            if value is not None:
                cfg[key] = value
        handler = {"design": cmd_design, "threshold": cmd_threshold, "simulate": cmd_simulate}
        return handler[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpecFormatError, AlistError, ThresholdIntervalError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
