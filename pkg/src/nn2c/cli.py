"""Command-line entry point.

Subcommands: inspect, compile, vectors, validate, profile, ids-window,
ids-eval, batt-window, batt-eval. Global flags on every subcommand:
--seed, --report <path>, --quiet.

Exit codes: 0 success; 1 usage error; 2 input or format error; 3 validation
failure (cross-accuracy below 1.0); 4 internal error. Commands that finish
with 0 or 3 write the machine-readable report when --report is given.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import Nn2cError, ParseError, ShapeMismatch, UnknownMcu, UsageError
from .errors import CompileFailure
from .fixtures import BUNDLED, load_bundled
from .graph import Graph, WeightStore, layer_maccs, layer_param_counts, param_count
from .interpreter import forward
from .memory_planner import plan_flash, plan_memory
from .model_format import load_model
from .pipelines import (
    MinMaxScaler,
    build_battery_windows,
    build_can_windows,
    compute_soh,
    eval_capacity,
    eval_detection,
    load_battery_csv,
    load_can_csv,
    load_signal_map,
    load_window_set,
    mae_score,
    select_threshold,
)
from .profiler import CYCLES_PER_MACC, MCUS, find_mcu, load_mcus, profile_graph
from .validator import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    cross_validate,
    generate_vectors,
    validate_generated,
)
from .vectorfile import read_vectors, write_vectors

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4

REPORT_VERSION = 1


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here wants 1."""

    def error(self, message: str):
        raise UsageError(message)


def _say(args: argparse.Namespace, text: str) -> None:
    if not args.quiet:
        print(text)


def _emit_report(args: argparse.Namespace, command: str, payload: dict) -> None:
    if args.report:
        doc = {"report_version": REPORT_VERSION, "command": command, **payload}
        Path(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_model_arg(spec: str) -> tuple[Graph, WeightStore]:
    path = Path(spec)
    if path.exists():
        return load_model(path)
    if spec in BUNDLED:
        return load_bundled(spec)
    raise ParseError(
        f"model {spec!r} is neither a readable file nor a bundled name {list(BUNDLED)}"
    )


def cmd_inspect(args: argparse.Namespace) -> int:
    graph, _ = _load_model_arg(args.model)
    params = layer_param_counts(graph)
    maccs = layer_maccs(graph)
    flash = plan_flash(graph)
    plan = plan_memory(graph)

    _say(args, f"model: {graph.name}")
    _say(args, f"input: {graph.input_shape}")
    header = f"{'idx':>3}  {'kind':<10}{'output':<10}{'params':>8}{'maccs':>9}"
    _say(args, header)
    rows = []
    for i, (layer, shape) in enumerate(zip(graph.layers, graph.output_shapes)):
        _say(args, f"{i:>3}  {layer.kind:<10}{str(shape):<10}{params[i]:>8}{maccs[i]:>9}")
        rows.append(
            {
                "index": i,
                "kind": layer.kind,
                "output_shape": list(shape.dims),
                "params": params[i],
                "maccs": maccs[i],
            }
        )
    _say(args, f"params: {param_count(graph)}")
    _say(args, f"maccs: {sum(maccs)}")
    _say(args, f"flash_bytes: {flash.total_bytes}")
    _say(args, f"arena_bytes: {plan.arena_bytes}")
    _emit_report(
        args,
        "inspect",
        {
            "model": graph.name,
            "input_shape": list(graph.input_shape.dims),
            "layers": rows,
            "params": param_count(graph),
            "maccs": sum(maccs),
            "flash_bytes": flash.total_bytes,
            "arena_bytes": plan.arena_bytes,
        },
    )
    return EXIT_OK


def _plan_payload(graph: Graph) -> dict:
    plan = plan_memory(graph)
    flash = plan_flash(graph)
    return {
        "model": graph.name,
        "arena_bytes": plan.arena_bytes,
        "alignment": plan.alignment,
        "flash_bytes": flash.total_bytes,
        "flash_per_layer": list(flash.per_layer_bytes),
        "buffers": [
            {
                "name": b.name,
                "size_bytes": b.size_bytes,
                "first": b.first,
                "last": b.last,
                "offset": b.offset,
            }
            for b in plan.buffers
        ],
    }


def cmd_compile(args: argparse.Namespace) -> int:
    from .codegen import emit_c

    graph, weights = _load_model_arg(args.model)
    outdir = Path(args.outdir)
    paths = emit_c(graph, weights, outdir)
    plan_payload = _plan_payload(graph)
    profile = profile_graph(graph).to_dict()
    plan_path = outdir / f"{graph.name}_plan.json"
    complexity_path = outdir / f"{graph.name}_complexity.json"
    plan_path.write_text(json.dumps(plan_payload, indent=2, sort_keys=True) + "\n")
    complexity_path.write_text(json.dumps(profile, indent=2, sort_keys=True) + "\n")

    for key in ("header", "model", "weights"):
        _say(args, f"wrote {paths[key]}")
    _say(args, f"wrote {plan_path}")
    _say(args, f"wrote {complexity_path}")
    _say(args, f"flash_bytes: {plan_payload['flash_bytes']}")
    _say(args, f"arena_bytes: {plan_payload['arena_bytes']}")
    _emit_report(
        args,
        "compile",
        {
            "model": graph.name,
            "files": [str(paths[k]) for k in ("header", "model", "weights")]
            + [str(plan_path), str(complexity_path)],
            "plan": plan_payload,
            "complexity": profile,
        },
    )
    return EXIT_OK


def cmd_vectors(args: argparse.Namespace) -> int:
    graph, _ = _load_model_arg(args.model)
    vectors = generate_vectors(graph, args.count, args.seed)
    write_vectors(args.out, vectors)
    _say(args, f"wrote {args.count} x {graph.input_shape.element_count} vectors to {args.out}")
    _emit_report(
        args,
        "vectors",
        {
            "model": graph.name,
            "count": args.count,
            "length": graph.input_shape.element_count,
            "seed": args.seed,
            "file": str(args.out),
        },
    )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    graph, weights = _load_model_arg(args.model)
    if args.c_outputs:
        if not args.inputs:
            raise UsageError("--c-outputs requires --inputs")
        inputs, _ = read_vectors(args.inputs)
        outputs, _ = read_vectors(args.c_outputs)
        report = cross_validate(graph, weights, outputs, inputs, args.atol, args.rtol)
    else:
        if args.inputs:
            vectors, _ = read_vectors(args.inputs)
        else:
            vectors = generate_vectors(graph, args.count, args.seed)
        report = validate_generated(
            graph, weights, vectors, atol=args.atol, rtol=args.rtol, workdir=args.workdir
        )
    _say(args, f"model: {report.model}")
    _say(args, f"vectors: {report.vectors}  elements: {report.elements}")
    _say(args, f"cross_accuracy: {report.cross_accuracy}")
    _say(args, f"max_abs_err: {report.max_abs_err:.3e}  max_rel_err: {report.max_rel_err:.3e}")
    _say(args, "PASS" if report.passed else "FAIL")
    _emit_report(args, "validate", report.to_dict())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_profile(args: argparse.Namespace) -> int:
    graph, _ = _load_model_arg(args.model)
    catalog = load_mcus(args.mcu_catalog) if args.mcu_catalog else MCUS
    if args.mcu:
        catalog = (find_mcu(args.mcu, catalog),)
    profile = profile_graph(graph, cycles_per_macc=args.cycles_per_macc, catalog=catalog)

    _say(args, f"model: {graph.name}  maccs: {profile.total_maccs}")
    hdr = (
        f"{'idx':>3}  {'kind':<10}{'maccs':>9}{'flash_B':>9}{'ram_B':>8}"
        f"{'macc%':>8}{'flash%':>8}{'ram%':>7}{'time%':>8}"
    )
    _say(args, hdr)
    for lp in profile.layers:
        _say(
            args,
            f"{lp.index:>3}  {lp.kind:<10}{lp.maccs:>9}{lp.flash_bytes:>9}{lp.ram_bytes:>8}"
            f"{lp.macc_pct:>8.2f}{lp.flash_pct:>8.2f}{lp.ram_pct:>7.2f}{lp.time_pct:>8.2f}",
        )
    _say(args, f"flash_bytes: {profile.flash_bytes}  arena_bytes: {profile.arena_bytes}")
    for est in profile.estimates:
        fits = []
        fits.append("flash fits" if est.flash_fits else "flash OVER")
        fits.append("ram fits" if est.ram_fits else "ram OVER")
        _say(
            args,
            f"{est.mcu} @ {est.clock_mhz:g} MHz: {est.time_ms:.3f} ms ({', '.join(fits)})",
        )
    _emit_report(args, "profile", profile.to_dict())
    return EXIT_OK


def cmd_ids_window(args: argparse.Namespace) -> int:
    if args.window < 1 or args.stride < 1:
        raise UsageError("--window and --stride must be >= 1")
    messages = load_can_csv(args.csv)
    signal_map = load_signal_map(args.map)
    result = build_can_windows(messages, signal_map, window=args.window, stride=args.stride)
    windows_path = Path(f"{args.out}_windows.tnnv")
    labels_path = Path(f"{args.out}_labels.tnnv")
    result.window_set.save(windows_path, labels_path)
    attacks = int(np.count_nonzero(result.window_set.labels))
    _say(args, f"messages: {len(messages)}  rows: {result.rows}")
    _say(args, f"skipped_unmapped: {result.skipped_unmapped}")
    _say(args, f"windows: {result.window_set.count}  attack_windows: {attacks}")
    _say(args, f"wrote {windows_path}")
    _say(args, f"wrote {labels_path}")
    _emit_report(
        args,
        "ids-window",
        {
            "messages": len(messages),
            "rows": result.rows,
            "skipped_unmapped": result.skipped_unmapped,
            "windows": result.window_set.count,
            "attack_windows": attacks,
            "window": args.window,
            "stride": args.stride,
            "files": [str(windows_path), str(labels_path)],
        },
    )
    return EXIT_OK


def _reconstruction_scores(graph: Graph, weights: WeightStore, windows: np.ndarray) -> list[float]:
    if graph.output_shape.dims != graph.input_shape.dims:
        raise ShapeMismatch(
            f"reconstruction model must emit its input shape, got {graph.output_shape}"
        )
    scores = []
    for w in windows:
        recon = forward(graph, weights, w)
        scores.append(mae_score(w, recon))
    return scores


def cmd_ids_eval(args: argparse.Namespace) -> int:
    if not 0.0 < args.quantile <= 1.0:
        raise UsageError(f"--quantile must be in (0, 1], got {args.quantile}")
    graph, weights = _load_model_arg(args.model)
    if graph.input_shape.rank != 2:
        raise ShapeMismatch("ids-eval needs a rank-2 (timesteps, features) model input")
    t, f = graph.input_shape.dims
    ws = load_window_set(args.windows, args.labels, t, f)
    codes = np.rint(ws.labels).astype(np.int64)
    scores = _reconstruction_scores(graph, weights, ws.windows)

    if args.threshold is not None:
        threshold = args.threshold
    else:
        normal_scores = [s for s, c in zip(scores, codes) if c == 0]
        threshold = select_threshold(normal_scores, args.quantile)
    flags = np.asarray(scores) > threshold
    report = eval_detection(flags, codes)

    _say(args, f"windows: {ws.count}  threshold: {threshold:.6g}")
    fmt = lambda v: "undefined" if v is None else f"{v:.4f}"
    o = report.overall
    _say(args, f"overall: precision {fmt(o.precision)}  recall {fmt(o.recall)}")
    for k in report.per_kind:
        _say(args, f"{k.kind}: precision {fmt(k.precision)}  recall {fmt(k.recall)}")
    _say(args, f"mean: precision {fmt(report.mean_precision)}  recall {fmt(report.mean_recall)}")
    _emit_report(
        args,
        "ids-eval",
        {
            "model": graph.name,
            "windows": ws.count,
            "threshold": threshold,
            "quantile": args.quantile,
            "detection": report.to_dict(),
        },
    )
    return EXIT_OK


def cmd_batt_window(args: argparse.Namespace) -> int:
    if args.samples < 2:
        raise UsageError(f"--samples must be >= 2, got {args.samples}")
    cycles = load_battery_csv(args.csv)
    ws = build_battery_windows(cycles, samples=args.samples)
    if args.scaler:
        scaler = MinMaxScaler.from_json(Path(args.scaler).read_text())
        scaler_path = Path(args.scaler)
        fitted = False
    else:
        scaler = MinMaxScaler.fit(ws.windows)
        scaler_path = Path(f"{args.out}_scaler.json")
        scaler_path.write_text(scaler.to_json())
        fitted = True
    scaled = scaler.transform(ws.windows)
    windows_path = Path(f"{args.out}_windows.tnnv")
    targets_path = Path(f"{args.out}_targets.tnnv")
    write_vectors(windows_path, scaled.reshape(ws.count, -1))
    write_vectors(targets_path, ws.labels.reshape(-1, 1))
    _say(args, f"cycles: {len(cycles)}  windows: {ws.count}")
    _say(args, f"{'fitted' if fitted else 'applied'} scaler: {scaler_path}")
    _say(args, f"wrote {windows_path}")
    _say(args, f"wrote {targets_path}")
    _emit_report(
        args,
        "batt-window",
        {
            "cycles": len(cycles),
            "windows": ws.count,
            "samples": args.samples,
            "scaler": str(scaler_path),
            "scaler_fitted": fitted,
            "files": [str(windows_path), str(targets_path)],
        },
    )
    return EXIT_OK


def cmd_batt_eval(args: argparse.Namespace) -> int:
    graph, weights = _load_model_arg(args.model)
    if graph.input_shape.rank != 2:
        raise ShapeMismatch("batt-eval needs a rank-2 (timesteps, features) model input")
    if graph.output_shape.element_count != 1:
        raise ShapeMismatch(
            f"capacity model must emit one value, got {graph.output_shape}"
        )
    t, f = graph.input_shape.dims
    ws = load_window_set(args.windows, args.targets, t, f)
    predictions = [float(forward(graph, weights, w).reshape(-1)[0]) for w in ws.windows]
    mae = eval_capacity(predictions, ws.labels.astype(np.float64))

    _say(args, f"windows: {ws.count}  mae: {mae:.6g}")
    payload: dict = {
        "model": graph.name,
        "windows": ws.count,
        "mae": mae,
        "predictions": predictions[:64],
    }
    if args.rated is not None:
        soh_rows = []
        flagged = 0
        for i, pred in enumerate(predictions):
            soh, replace = compute_soh(pred, args.rated)
            flagged += int(replace)
            soh_rows.append({"window": i, "soh": soh, "replace": replace})
        _say(args, f"rated: {args.rated}  flagged_for_replacement: {flagged}/{ws.count}")
        payload["rated"] = args.rated
        payload["soh"] = soh_rows[:64]
        payload["flagged"] = flagged
    _emit_report(args, "batt-eval", payload)
    return EXIT_OK


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="PRNG seed (default 42)")
    common.add_argument("--report", metavar="PATH", help="write a JSON report here")
    common.add_argument("--quiet", action="store_true", help="suppress normal output")

    parser = _Parser(prog="nn2c", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("inspect", parents=[common], help="print a model's topology table")
    p.add_argument("model", help="bundle path (.tnnf.json) or bundled name")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("compile", parents=[common], help="emit C sources plus reports")
    p.add_argument("model")
    p.add_argument("-o", "--outdir", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("vectors", parents=[common], help="write seeded random input vectors")
    p.add_argument("model")
    p.add_argument("-o", "--out", required=True, help="output .tnnv path")
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("validate", parents=[common], help="compare generated C to the interpreter")
    p.add_argument("model")
    p.add_argument("--inputs", help="input vector file (.tnnv); generated when omitted")
    p.add_argument("--c-outputs", help="precomputed C output file; skips compile+run")
    p.add_argument("--count", type=int, default=1000, help="vectors to generate (default 1000)")
    p.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    p.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    p.add_argument("--workdir", help="keep build artifacts here instead of a temp dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("profile", parents=[common], help="per-layer shares and time estimates")
    p.add_argument("model")
    p.add_argument("--mcu", help="restrict estimates to one catalog entry")
    p.add_argument("--cycles-per-macc", type=float, default=CYCLES_PER_MACC)
    p.add_argument("--mcu-catalog", help="alternate mcus.json")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("ids-window", parents=[common], help="CAN stream -> labeled windows")
    p.add_argument("--csv", required=True, help="message stream CSV")
    p.add_argument("--map", required=True, help="signal map file")
    p.add_argument("-o", "--out", required=True, help="output prefix")
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--stride", type=int, default=1)
    p.set_defaults(func=cmd_ids_window)

    p = sub.add_parser("ids-eval", parents=[common], help="score windows and evaluate detection")
    p.add_argument("model")
    p.add_argument("--windows", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--quantile", type=float, default=0.99)
    p.add_argument("--threshold", type=float, help="fixed threshold; overrides --quantile")
    p.set_defaults(func=cmd_ids_eval)

    p = sub.add_parser("batt-window", parents=[common], help="discharge CSV -> scaled windows")
    p.add_argument("--csv", required=True)
    p.add_argument("-o", "--out", required=True, help="output prefix")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--scaler", help="apply this scaler JSON instead of fitting")
    p.set_defaults(func=cmd_batt_window)

    p = sub.add_parser("batt-eval", parents=[common], help="predict capacity and report MAE/SoH")
    p.add_argument("model")
    p.add_argument("--windows", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--rated", type=float, help="rated capacity for SoH flags")
    p.set_defaults(func=cmd_batt_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"nn2c: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownMcu as exc:
        print(f"nn2c: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompileFailure as exc:
        print(f"nn2c: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Nn2cError as exc:
        print(f"nn2c: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"nn2c: i/o error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps everything
        print(f"nn2c: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
