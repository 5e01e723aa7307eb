"""Batch command-line interface.

Verbs: ``split`` produces a low-rank split archive for one layer,
``evaluate`` replays a saved split on held-out activations, ``compare``
benchmarks the split methods against the unsplit quantized baseline,
``sweep-rank`` repeats the comparison across ranks and dumps the singular
spectrum, and ``gen-synth`` writes a synthetic layer to tensor files.

Exit codes: 0 success, 1 runtime or data error, 2 usage or config error.
Every run writes the resolved configuration next to its outputs.
Environment: ``ARHQ_LOG`` sets the log level, ``ARHQ_WORKERS`` bounds the
thread fan-out over layers in ``compare``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from arhq.decompose import LowRankSplit
from arhq.errors import ArhqError, ConfigError, ParameterError
from arhq.io.config import METHOD_ALIASES, RunConfig, load_config
from arhq.io.reports import write_report
from arhq.io.synth import SynthSpec, gen_synthetic
from arhq.io.tensorfile import load_archive, load_tensor, save_archive, save_tensor
from arhq.pipeline import (
    LayerArtifacts,
    LayerConfig,
    compare_methods,
    run_arhq_layer,
    simulate_forward,
    snr,
    sweep_rank,
)
from arhq.quantizers import QuantizerSpec

log = logging.getLogger("arhq")


def _comma_list(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip()]


def _add_overrides(p: argparse.ArgumentParser, synth: bool = False):
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--rank", type=int, help="target rank of the low-rank branch")
    p.add_argument("--floor", type=float, help="absolute eigenvalue floor")
    p.add_argument("--alpha", type=float, help="smoothing balance exponent")
    p.add_argument("--no-smooth", action="store_true", help="disable the smoothing stage")
    p.add_argument("--seed", type=int, help="seed for synthetic data and reports")
    p.add_argument("--layer-name", help="layer id used in reports")
    if synth:
        p.add_argument("--methods", help="comma list of split methods")
        p.add_argument("--variants", help="comma list from raw,smooth")
        p.add_argument("--d-in", type=int, help="synthetic input width")
        p.add_argument("--d-out", type=int, help="synthetic output width")
        p.add_argument("--n-calib", type=int, help="synthetic calibration rows")
        p.add_argument("--n-eval", type=int, help="synthetic evaluation rows")
        p.add_argument("--anisotropy", type=float, help="target residual condition number")
        p.add_argument("--weight-spectrum", type=float, help="singular value decay rate")


def _build_config(args, need_rank: bool = True) -> RunConfig:
    if args.config is not None:
        rc = load_config(args.config)
    else:
        rank = args.rank if args.rank is not None else 1 if not need_rank else None
        if rank is None:
            raise ConfigError("rank is required: pass --rank or a config file")
        rc = RunConfig(LayerConfig(rank=rank))
    layer = rc.layer
    updates = {}
    if args.rank is not None:
        updates["rank"] = args.rank
    if args.floor is not None:
        updates["floor"] = args.floor
    if args.no_smooth:
        updates["smoothing"] = None
    elif args.alpha is not None:
        updates["smoothing"] = args.alpha
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "methods", None):
        updates["methods"] = tuple(
            METHOD_ALIASES.get(m, m) for m in _comma_list(args.methods)
        )
    if getattr(args, "variants", None):
        updates["variants"] = tuple(_comma_list(args.variants))
    if updates:
        layer = replace(layer, **updates)
    rc.layer = layer
    if args.layer_name is not None:
        rc.layer_name = args.layer_name
    return rc


def _build_synth(args, rc: RunConfig) -> SynthSpec:
    spec = rc.synth if rc.synth is not None else SynthSpec(seed=rc.layer.seed)
    updates = {}
    for flag, name in (
        ("d_in", "d_in"),
        ("d_out", "d_out"),
        ("n_calib", "n_calib"),
        ("n_eval", "n_eval"),
        ("anisotropy", "residual_anisotropy"),
        ("weight_spectrum", "weight_spectrum"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        spec = replace(spec, **updates)
    return spec


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_resolved(rc: RunConfig, out: Path):
    (out / "resolved_config.json").write_text(json.dumps(rc.to_dict(), indent=2) + "\n")


def _load_layer_tensors(args, rc: RunConfig):
    """Yield (name, w, x_calib, x_eval) for file inputs or synthetic layers."""
    if args.synth:
        spec = _build_synth(args, rc)
        rc.synth = spec
        n_layers = args.layers
        layers = []
        for i in range(n_layers):
            spec_i = replace(spec, seed=spec.seed + i)
            name = rc.layer_name if n_layers == 1 else f"{rc.layer_name}{i}"
            layers.append((name, spec_i))
        return layers, spec
    if not (args.weights and args.calib):
        raise ConfigError("either --synth or both --weights and --calib are required")
    return [(rc.layer_name, None)], None


def _materialize(entry, args, rc: RunConfig):
    name, spec = entry
    if spec is not None:
        w, x_calib, x_eval = gen_synthetic(spec)
        seed = spec.seed
    else:
        w = load_tensor(args.weights)
        x_calib = load_tensor(args.calib)
        if args.eval is not None:
            x_eval = load_tensor(args.eval)
        else:
            x_eval = x_calib
        seed = rc.layer.seed
    if rc.eval_in_sample:
        x_eval = x_calib
    return name, w, x_calib, x_eval, seed


def cmd_split(args) -> int:
    rc = _build_config(args)
    out = _out_dir(args)
    w = load_tensor(args.weights)
    x_calib = load_tensor(args.calib)
    artifacts = run_arhq_layer(w, x_calib, rc.layer)
    tensors = {
        "w_res": artifacts.split.w_res,
        "a": artifacts.split.a,
        "b": artifacts.split.b,
    }
    if artifacts.scales is not None:
        tensors["scales"] = artifacts.scales.s
    save_archive(tensors, out / "split.arhqt")
    sidecar = {
        "method": artifacts.split.method,
        "rank": artifacts.split.rank,
        "floor": artifacts.metric.floor,
        "act_quantizer": rc.layer.act_quantizer.to_dict(),
        "weight_quantizer": rc.layer.weight_quantizer.to_dict(),
        "layer_name": rc.layer_name,
        "seed": rc.layer.seed,
    }
    (out / "split.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    _write_resolved(rc, out)
    print(f"split written to {out} (rank {artifacts.split.rank}, "
          f"params added {artifacts.split.params_added()})")
    return 0


def _load_split(split_dir: Path):
    tensors = load_archive(split_dir / "split.arhqt")
    sidecar = json.loads((split_dir / "split.json").read_text())
    split = LowRankSplit(
        np.asarray(tensors["w_res"], dtype=np.float64),
        np.asarray(tensors["a"], dtype=np.float64),
        np.asarray(tensors["b"], dtype=np.float64),
        int(sidecar["rank"]),
        sidecar["method"],
    )
    scales = None
    if "scales" in tensors:
        from arhq.smoothing import SmoothingScales

        scales = SmoothingScales(np.asarray(tensors["scales"], dtype=np.float64).reshape(-1))
    cfg = LayerConfig(
        rank=split.rank,
        act_quantizer=QuantizerSpec.from_dict(sidecar["act_quantizer"]),
        weight_quantizer=QuantizerSpec.from_dict(sidecar["weight_quantizer"]),
        smoothing=None if scales is None else scales.s,
        seed=int(sidecar.get("seed", 0)),
    )
    return LayerArtifacts(split, None, scales, cfg.snapshot()), cfg


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    artifacts, cfg = _load_split(Path(args.split))
    x_eval = load_tensor(args.eval)
    y_ref = simulate_forward(x_eval, artifacts, cfg, "reference")
    y_dual = simulate_forward(x_eval, artifacts, cfg, "dual_branch")
    y_base = simulate_forward(x_eval, artifacts, cfg, "baseline_quant")
    dual_snr = snr(y_ref, y_dual)
    base_snr = snr(y_ref, y_base)
    doc = {
        "snr_dual_branch_db": dual_snr if dual_snr != float("inf") else "inf",
        "snr_baseline_db": base_snr if base_snr != float("inf") else "inf",
        "rank": artifacts.split.rank,
        "params_added": artifacts.split.params_added(),
    }
    (out / "evaluate.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"dual-branch SNR {doc['snr_dual_branch_db']} dB, "
          f"baseline SNR {doc['snr_baseline_db']} dB")
    return 0


def cmd_compare(args) -> int:
    rc = _build_config(args)
    out = _out_dir(args)
    entries, _ = _load_layer_tensors(args, rc)

    def run(entry):
        name, w, x_calib, x_eval, seed = _materialize(entry, args, rc)
        cfg = replace(rc.layer, seed=seed)
        return compare_methods(w, x_calib, x_eval, cfg, layer=name)

    workers = int(os.environ.get("ARHQ_WORKERS", "1"))
    if workers > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, entries))
    else:
        reports = [run(entry) for entry in entries]
    write_report(reports, out / "report.csv", "csv")
    write_report(reports, out / "report.json", "json")
    _write_resolved(rc, out)
    print(f"compared {len(reports)} layer(s); reports in {out}")
    return 0


def cmd_sweep_rank(args) -> int:
    rc = _build_config(args)
    out = _out_dir(args)
    try:
        ranks = sorted({int(r) for r in _comma_list(args.ranks)})
    except ValueError as exc:
        raise ConfigError(f"--ranks: {exc}") from exc
    entries, _ = _load_layer_tensors(args, rc)
    name, w, x_calib, x_eval, seed = _materialize(entries[0], args, rc)
    cfg = replace(rc.layer, seed=seed)
    reports, spectra = sweep_rank(w, x_calib, x_eval, cfg, ranks, layer=name)
    write_report(reports, out / "sweep.csv", "csv")
    write_report(reports, out / "sweep.json", "json")
    with (out / "spectrum.csv").open("w") as fh:
        fh.write("variant,index,sigma\n")
        for variant, sigma in spectra.items():
            for i, s in enumerate(sigma):
                fh.write(f"{variant},{i},{s!r}\n")
    _write_resolved(rc, out)
    print(f"swept ranks {ranks}; reports in {out}")
    return 0


def cmd_gen_synth(args) -> int:
    rc = _build_config(args, need_rank=False)
    out = _out_dir(args)
    spec = _build_synth(args, rc)
    rc.synth = spec
    w, x_calib, x_eval = gen_synthetic(spec)
    save_tensor(w, out / "weights.arhqt")
    save_tensor(x_calib, out / "x_calib.arhqt")
    save_tensor(x_eval, out / "x_eval.arhqt")
    _write_resolved(rc, out)
    print(f"synthetic layer ({spec.d_out}x{spec.d_in}) written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arhq",
        description="Residual-weighted low-rank weight splitting and SNR benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="compute and save a low-rank split")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--calib", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("evaluate", help="replay a saved split on evaluation data")
    p.add_argument("--split", type=Path, required=True, help="directory written by split")
    p.add_argument("--eval", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    for verb, fn in (("compare", cmd_compare), ("sweep-rank", cmd_sweep_rank)):
        p = sub.add_parser(verb, help=f"{verb} methods on one or more layers")
        p.add_argument("--weights", type=Path)
        p.add_argument("--calib", type=Path)
        p.add_argument("--eval", type=Path)
        p.add_argument("--synth", action="store_true", help="use generated synthetic layers")
        p.add_argument("--layers", type=int, default=1, help="number of synthetic layers")
        p.add_argument("--out", type=Path, required=True)
        if verb == "sweep-rank":
            p.add_argument("--ranks", required=True, help="comma list of ranks")
        _add_overrides(p, synth=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("gen-synth", help="write a synthetic layer to tensor files")
    p.add_argument("--out", type=Path, required=True)
    _add_overrides(p, synth=True)
    p.set_defaults(func=cmd_gen_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ARHQ_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArhqError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
