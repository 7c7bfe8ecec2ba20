"""Command-line front end: every experiment as a CSV/JSON-emitting command.

Subcommands
-----------
de-trace         error-probability sequence of one density-evolution run
pmf-dump         a-posteriori PMF snapshots at chosen iterations
region           useful / non-convergent classification over a (hw, chi) grid
threshold-sweep  decoding thresholds versus the channel scale factor
simulate         finite-length Monte-Carlo BER/FER/average-iterations
alist            generate or inspect Tanner graphs in alist format

Sweep-style outputs are headered CSV; single-run summaries are JSON.  Every
output file gets a sibling ``<file>.manifest.json`` recording the resolved
parameters, the seed and the output checksum, so any artifact can be
reproduced byte-identically.  Flags override ``--config`` (a JSON object of
flag defaults), which overrides built-in defaults.  Stochastic commands
require ``--seed`` (an integer, or ``auto`` to draw one and record it).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import secrets
import sys

import numpy as np

from . import __version__
from .channel import BiAwgn, Bsc, QuantConfig, input_error_prob, prior_pmf
from .codes import AlistError, EnsembleSpec, parse_alist, random_regular_graph, to_alist
from .density_evolution import DEConfig, de_lower_bound, de_run
from .noisy_arith import InjectorModel, NoiseParams
from .sim import DecoderConfig, run_monte_carlo
from .threshold_analysis import classify_point, eta_threshold

__all__ = ["build_parser", "run_command", "main"]


class CommandError(Exception):
    """Invalid parameter combination or unusable input file."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _range_or_list(text: str) -> list[float]:
    """Either 'start:stop:step' (stop inclusive within a half step) or a list."""
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        return list(np.arange(start, stop + 0.5 * step, step))
    return _float_list(text)


def _write_artifact(path: str, header: list[str], rows: list[list], manifest: dict) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    data = buf.getvalue().encode()
    with open(path, "wb") as fh:
        fh.write(data)
    manifest = dict(manifest)
    manifest["tool"] = "minsumlab"
    manifest["version"] = __version__
    manifest["outputs"] = {path: "sha256:" + hashlib.sha256(data).hexdigest()}
    with open(path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge flag values over config-file values over defaults."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        unknown = set(config) - set(defaults)
        if unknown:
            raise CommandError(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in config:
            resolved[key] = config[key]
        else:
            resolved[key] = default
    return resolved


def _seed_value(raw: str) -> int:
    if raw == "auto":
        return secrets.randbits(32)
    return int(raw)


def _noise_from(params: dict) -> NoiseParams:
    return NoiseParams(
        p_add=params["p_add"],
        p_comp=params["p_comp"],
        p_xor=params["p_xor"],
        p_scu=params.get("p_scu", 0.0),
        adder_model=InjectorModel(params["adder_model"]),
    )


def _channel_from(params: dict, chi: float):
    if params["channel"] == "bsc":
        return Bsc(chi)
    return BiAwgn(chi)


def _de_config(params: dict, chi: float) -> DEConfig:
    return DEConfig(
        dv=params["dv"],
        dc=params["dc"],
        channel=_channel_from(params, chi),
        quant=QuantConfig(scale=params["mu"], bits=params["msg_bits"]),
        noise=_noise_from(params),
        app_bits=params["app_bits"],
        max_iters=params["max_iters"],
    )


def _add_common_de_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--dv", type=int)
    p.add_argument("--dc", type=int)
    p.add_argument("--mu", type=float, help="channel scale factor")
    p.add_argument("--msg-bits", dest="msg_bits", type=int)
    p.add_argument("--app-bits", dest="app_bits", type=int)
    p.add_argument("--channel", choices=["bsc", "awgn"])
    p.add_argument("--p-add", dest="p_add", type=float)
    p.add_argument("--adder-model", dest="adder_model", choices=["full-depth", "sign-preserving"])
    p.add_argument("--p-comp", dest="p_comp", type=float)
    p.add_argument("--p-xor", dest="p_xor", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--out", required=True, help="output CSV path")


_DE_DEFAULTS = {
    "dv": 3,
    "dc": 6,
    "mu": 1.0,
    "msg_bits": 4,
    "app_bits": 5,
    "channel": "bsc",
    "p_add": 0.0,
    "adder_model": "sign-preserving",
    "p_comp": 0.0,
    "p_xor": 0.0,
    "p_scu": 0.0,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minsumlab",
        description="Noisy fixed-point Min-Sum decoding: density evolution, "
        "thresholds and Monte-Carlo simulation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("de-trace", help="error probability per iteration for one config")
    _add_common_de_args(p)
    p.add_argument("--chi", type=float, required=True, help="crossover prob (bsc) or sigma^2 (awgn)")

    p = sub.add_parser("pmf-dump", help="a-posteriori PMF snapshots")
    _add_common_de_args(p)
    p.add_argument("--chi", type=float, required=True)
    p.add_argument("--iterations", required=True, help="comma-separated iteration numbers")

    p = sub.add_parser("region", help="classify a (hardware, channel) grid")
    _add_common_de_args(p)
    p.add_argument("--hw-axis", dest="hw_axis", choices=["p-add", "p-comp", "p-xor"], required=True)
    p.add_argument("--hw-values", dest="hw_values", required=True, help="list of hw error probs")
    p.add_argument("--chi-values", dest="chi_values", required=True, help="'start:stop:step' or list")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("threshold-sweep", help="eta-thresholds vs channel scale factor")
    _add_common_de_args(p)
    p.add_argument("--mu-values", dest="mu_values", required=True, help="list of scale factors")
    p.add_argument("--eta", type=float, default=1e-5)
    p.add_argument("--chi-values", dest="chi_values", required=True, help="scan grid")
    p.add_argument("--resolution", type=float, default=1e-4)

    p = sub.add_parser("simulate", help="finite-length Monte-Carlo BER/FER")
    _add_common_de_args(p)
    p.add_argument("--chi-values", dest="chi_values", required=True)
    p.add_argument("--alist", help="alist file for the code graph")
    p.add_argument("--random-graph", dest="random_graph", help="'N,dv,dc' regular graph")
    p.add_argument("--girth6", action="store_true", help="avoid 4-cycles in the random graph")
    p.add_argument("--variant", choices=["ms", "ms-practical", "scms"])
    p.add_argument("--p-scu", dest="p_scu", type=float)
    p.add_argument("--frames", type=int, default=10000)
    p.add_argument("--target-errors", dest="target_errors", type=int, default=100)
    p.add_argument("--no-early-stopping", dest="no_early_stopping", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", required=True, help="integer or 'auto'")

    p = sub.add_parser("alist", help="generate or inspect alist graphs")
    asub = p.add_subparsers(dest="action", required=True)
    g = asub.add_parser("generate", help="random regular graph to alist")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dv", type=int, required=True)
    g.add_argument("--dc", type=int, required=True)
    g.add_argument("--girth6", action="store_true")
    g.add_argument("--seed", required=True, help="integer or 'auto'")
    g.add_argument("--out", required=True)
    i = asub.add_parser("inspect", help="validate and summarize an alist file")
    i.add_argument("path")

    return parser


def _cmd_de_trace(args) -> int:
    params = _resolve(args, {**_DE_DEFAULTS, "max_iters": 50_000})
    params["chi"] = args.chi
    cfg = _de_config(params, args.chi)
    trace = de_run(cfg)
    rows = [[it, pe] for it, pe in enumerate(trace.pe)]
    result = {
        "kind": trace.kind,
        "pe_limit": trace.pe_limit,
        "period": trace.period,
        "band": list(trace.band) if trace.band else None,
        "plateau": trace.plateau,
        "iterations": trace.iterations,
        "lower_bound": de_lower_bound(cfg.noise, cfg.app_max),
    }
    _write_artifact(args.out, ["iteration", "error_prob"], rows,
                    {"command": "de-trace", "params": params, "result": result})
    print(json.dumps(result))
    return 0


def _cmd_pmf_dump(args) -> int:
    params = _resolve(args, {**_DE_DEFAULTS, "max_iters": 50_000})
    params["chi"] = args.chi
    iters = _int_list(args.iterations)
    params["iterations"] = iters
    cfg = _de_config(params, args.chi)
    cfg = dataclasses.replace(cfg, max_iters=max(max(iters), 1))
    trace = de_run(cfg, capture=iters)
    rows = []
    for it in iters:
        pmf = trace.snapshots.get(it)
        if pmf is None:
            continue
        for idx, mass in enumerate(pmf):
            rows.append([it, idx - cfg.app_max, mass])
    _write_artifact(args.out, ["iteration", "value", "mass"], rows,
                    {"command": "pmf-dump", "params": params})
    return 0


def _cmd_region(args) -> int:
    params = _resolve(args, {**_DE_DEFAULTS, "max_iters": 2000})
    hw_values = _float_list(args.hw_values)
    chi_values = _range_or_list(args.chi_values)
    params["hw_axis"] = args.hw_axis
    params["hw_values"] = hw_values
    params["chi_values"] = chi_values
    key = {"p-add": "p_add", "p-comp": "p_comp", "p-xor": "p_xor"}[args.hw_axis]
    base = _de_config(params, chi_values[0])
    rows = []
    for hw in hw_values:
        noise = _noise_from({**params, key: hw})
        for chi in chi_values:
            pt = classify_point(noise, chi, base)
            rows.append([
                hw, chi, pt.classification, pt.pe_limit if pt.pe_limit is not None else "",
                pt.pe_input, pt.lower_bound, pt.trace_kind,
                pt.period if pt.period is not None else "",
            ])
    _write_artifact(
        args.out,
        ["hw_value", "chi", "classification", "pe_limit", "pe_input", "lower_bound", "trace_kind", "period"],
        rows,
        {"command": "region", "params": params},
    )
    return 0


def _cmd_threshold_sweep(args) -> int:
    params = _resolve(args, {**_DE_DEFAULTS, "max_iters": 50_000})
    mu_values = _float_list(args.mu_values)
    chi_values = _range_or_list(args.chi_values)
    params.update({"mu_values": mu_values, "chi_values": chi_values,
                   "eta": args.eta, "resolution": args.resolution})
    rows = []
    for mu in mu_values:
        base = _de_config({**params, "mu": mu}, chi_values[0])
        res = eta_threshold(args.eta, base.noise, base, chi_values, args.resolution)
        lo, hi = (res.bracket + (res.value, res.value))[:2] if res.bracket else ("", "")
        rows.append([mu, args.eta, res.value, lo, hi])
    _write_artifact(args.out, ["mu", "eta", "threshold", "bracket_lo", "bracket_hi"], rows,
                    {"command": "threshold-sweep", "params": params})
    return 0


def _load_graph(args, params: dict, rng: np.random.Generator):
    if args.alist and args.random_graph:
        raise CommandError("give either --alist or --random-graph, not both")
    if args.alist:
        try:
            with open(args.alist) as fh:
                return parse_alist(fh.read())
        except OSError as exc:
            raise CommandError(f"cannot read alist: {exc}") from None
    if args.random_graph:
        n, dv, dc = _int_list(args.random_graph)
        try:
            spec = EnsembleSpec(dv, dc, n)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
        return random_regular_graph(spec, rng, avoid_4cycles=args.girth6)
    raise CommandError("simulate needs --alist or --random-graph")


def _cmd_simulate(args) -> int:
    params = _resolve(
        args,
        {**_DE_DEFAULTS, "max_iters": 100, "variant": "ms-practical"},
    )
    seed = _seed_value(args.seed)
    chi_values = _range_or_list(args.chi_values)
    params.update({
        "chi_values": chi_values,
        "seed": seed,
        "frames": args.frames,
        "target_errors": args.target_errors,
        "early_stopping": not args.no_early_stopping,
        "alist": args.alist,
        "random_graph": args.random_graph,
        "girth6": bool(args.girth6),
    })
    graph_rng = np.random.default_rng([seed, 0xC0DE])
    graph = _load_graph(args, params, graph_rng)
    cfg = DecoderConfig(
        quant=QuantConfig(scale=params["mu"], bits=params["msg_bits"]),
        noise=_noise_from(params),
        variant=params["variant"],
        app_bits=params["app_bits"],
        max_iters=params["max_iters"],
        early_stopping=not args.no_early_stopping,
    )
    rows = []
    for chi in chi_values:
        channel = _channel_from(params, chi)
        stats = run_monte_carlo(
            graph, cfg, channel, seed=seed, max_frames=args.frames,
            target_frame_errors=args.target_errors, jobs=args.jobs,
        )
        rows.append([
            chi, stats.frames, stats.bit_errors, stats.frame_errors,
            stats.ber, stats.fer, stats.avg_iters, seed,
        ])
    _write_artifact(
        args.out,
        ["chi", "frames", "bit_errors", "frame_errors", "ber", "fer", "avg_iters", "seed"],
        rows,
        {"command": "simulate", "params": params, "seed": seed},
    )
    return 0


def _cmd_alist(args) -> int:
    if args.action == "generate":
        seed = _seed_value(args.seed)
        try:
            spec = EnsembleSpec(args.dv, args.dc, args.n)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
        graph = random_regular_graph(
            spec, np.random.default_rng([seed, 0xC0DE]), avoid_4cycles=args.girth6
        )
        text = to_alist(graph)
        with open(args.out, "w") as fh:
            fh.write(text)
        manifest = {
            "command": "alist-generate",
            "params": {"n": args.n, "dv": args.dv, "dc": args.dc, "girth6": bool(args.girth6)},
            "seed": seed,
            "tool": "minsumlab",
            "version": __version__,
            "outputs": {args.out: "sha256:" + hashlib.sha256(text.encode()).hexdigest()},
        }
        with open(args.out + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return 0
    try:
        with open(args.path) as fh:
            graph = parse_alist(fh.read())
    except OSError as exc:
        raise CommandError(f"cannot read alist: {exc}") from None
    vd, cd = graph.var_degrees, graph.chk_degrees
    print(json.dumps({
        "n_vars": graph.n_vars,
        "n_checks": graph.n_checks,
        "n_edges": graph.n_edges,
        "regular": graph.is_regular(),
        "var_degrees": {str(d): int((vd == d).sum()) for d in np.unique(vd)},
        "chk_degrees": {str(d): int((cd == d).sum()) for d in np.unique(cd)},
    }))
    return 0


_HANDLERS = {
    "de-trace": _cmd_de_trace,
    "pmf-dump": _cmd_pmf_dump,
    "region": _cmd_region,
    "threshold-sweep": _cmd_threshold_sweep,
    "simulate": _cmd_simulate,
    "alist": _cmd_alist,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except (CommandError, AlistError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
