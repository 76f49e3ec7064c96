"""Command-line entry point: preprocess, synth, train, eval, predict, deadreckon.

Every subcommand writes a config echo next to its primary output so any run
can be reproduced from the artifacts alone. Exit codes: 0 success, 1
runtime/training failure, 2 usage or schema errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import figures, model as model_mod, pipeline, synth as synth_mod
from .errors import SchemaError, TrainingError
from .geodesy import GeoPoint
from .kinematics import Approx, HorizonMode, Integrator, KinematicState, Scheme, dead_reckon
from .losses import PhysicsConfig, PhysicsOrder
from .metrics import ade_fde, evaluate_windows


def _write_config_echo(path: Path, subcommand: str, flags: dict) -> None:
    doc = {
        "subcommand": subcommand,
        "flags": {k: str(v) for k, v in flags.items() if k not in ("func", "subcommand")},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _slice_dataset(ds: pipeline.SplitDataset, win: int, wout: int) -> pipeline.SplitDataset:
    """Shorten windows to the last `win` inputs and first `wout` targets."""
    if win > ds.w_in or wout > ds.w_out:
        raise SchemaError(f"requested win/wout {win}/{wout} exceed dataset {ds.w_in}/{ds.w_out}")
    if win == ds.w_in and wout == ds.w_out:
        return ds

    def cut(windows):
        return [
            pipeline.WindowPair(
                x=w.x[ds.w_in - win :],
                y=w.y[:wout],
                state=w.state,
                anchor=w.anchor,
                seg_id=w.seg_id,
                idx=w.idx,
            )
            for w in windows
        ]

    return pipeline.SplitDataset(
        train=cut(ds.train),
        val=cut(ds.val),
        test=cut(ds.test),
        stats=ds.stats,
        w_in=win,
        w_out=wout,
        interval_s=ds.interval_s,
    )


def cmd_preprocess(args: argparse.Namespace) -> int:
    if not Path(args.input).exists():
        print(f"error: input file {args.input} not found", file=sys.stderr)
        return 2
    dataset, report = pipeline.run_pipeline(
        args.input,
        interval_s=args.interval_s,
        gap_min=args.gap_min,
        min_points=args.min_points,
        min_sog_kn=args.min_sog_kn,
        segment_h=args.segment_h,
    )
    pipeline.save_dataset(dataset, args.out, report)
    _write_config_echo(Path(args.out) / "config.json", "preprocess", vars(args))
    print(
        f"wrote {args.out}: {len(dataset.train)} train / {len(dataset.val)} val / "
        f"{len(dataset.test)} test windows from {report['segments_kept']} segments"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if not Path(args.spec).exists():
        print(f"error: spec file {args.spec} not found", file=sys.stderr)
        return 2
    template = synth_mod.load_template(args.spec)
    if args.noise_deg is not None:
        template["noise_sigma_deg"] = args.noise_deg
    rng = np.random.default_rng(args.seed)
    trajectories = []
    for _ in range(args.n):
        spec = synth_mod.sample_spec(template, rng)
        trajectories.append(synth_mod.generate(spec, seed=int(rng.integers(2**32))))
    synth_mod.write_ais_csv(args.out, trajectories)
    _write_config_echo(Path(args.out).with_suffix(".config.json"), "synth", vars(args))
    n_points = sum(len(t) for t in trajectories)
    print(f"wrote {args.out}: {len(trajectories)} trajectories, {n_points} points")
    return 0


def _history_to_csv(history, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["epoch", "train_data", "train_phys", "train_total", "val_data", "val_phys", "val_total", "lr", "seconds"]
        )
        for h in history:
            writer.writerow(
                [h.epoch] + [repr(float(v)) for v in (
                    h.train_data, h.train_phys, h.train_total, h.val_data, h.val_phys, h.val_total, h.lr, h.seconds,
                )]
            )


def cmd_train(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        print(f"error: dataset directory {args.data} not found", file=sys.stderr)
        return 2
    ds = _slice_dataset(pipeline.load_dataset(data_dir), args.win, args.wout)
    physics = PhysicsConfig(
        order=PhysicsOrder(args.order),
        approx=Approx.SMALL_ANGLE if args.approx == "small" else Approx.GREAT_CIRCLE,
        lam=args.lam,
        dt_s=ds.interval_s,
        lat_range=ds.stats.lat_range,
        lon_range=ds.stats.lon_range,
    )
    cfg = model_mod.TrainConfig(
        physics=physics,
        stats=ds.stats,
        arch=model_mod.Arch(args.model),
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
    )
    out = Path(args.out)
    try:
        params, history = model_mod.train(ds, cfg)
    except TrainingError as exc:
        _history_to_csv(getattr(exc, "history", []), out.with_suffix(".history.csv"))
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 1
    model_mod.save_model(out, params, ds.stats, physics)
    _history_to_csv(history, out.with_suffix(".history.csv"))
    if history:
        figures.save_history_figure(history, out.with_suffix(".curves.png"))
    _write_config_echo(out.with_suffix(".config.json"), "train", vars(args))
    best = min((h.val_total for h in history), default=float("nan"))
    print(f"wrote {out}: {len(history)} epochs, best val total loss {best:.6g}")
    return 0


def _case_windows(windows: list[pipeline.WindowPair], case: int) -> list[pipeline.WindowPair]:
    """Case 1: every window. Case 2: first/middle/last of each eligible segment."""
    if case == 1:
        return windows
    by_seg: dict[int, list[pipeline.WindowPair]] = {}
    for w in windows:
        by_seg.setdefault(w.seg_id, []).append(w)
    picked: list[pipeline.WindowPair] = []
    for seg_id in sorted(by_seg):
        seg_windows = sorted(by_seg[seg_id], key=lambda w: w.idx)
        if len(seg_windows) < 3:
            continue
        mid = seg_windows[(len(seg_windows) - 1) // 2]
        picked.extend([seg_windows[0], mid, seg_windows[-1]])
    return picked


def _predict_batch(params, stats, windows) -> tuple[np.ndarray, np.ndarray]:
    """Denormalized predictions and truth, both (N, H, 2) in degrees."""
    x = np.stack([w.x for w in windows])
    out, _, _ = model_mod._forward_batch(params, x)
    scale = stats.maxs[:2] - stats.mins[:2]
    pred_deg = out * scale + stats.mins[:2]
    truth_deg = np.stack([w.y for w in windows]) * scale + stats.mins[:2]
    return pred_deg, truth_deg


def cmd_eval(args: argparse.Namespace) -> int:
    for path, kind in ((args.model, "model file"), (args.data, "dataset directory")):
        if not Path(path).exists():
            print(f"error: {kind} {path} not found", file=sys.stderr)
            return 2
    params, stats, physics = model_mod.load_model(args.model)
    ds = _slice_dataset(pipeline.load_dataset(args.data), params.w_in, params.w_out)
    windows = _case_windows(ds.test, args.case)
    if not windows:
        print("error: no test windows to evaluate", file=sys.stderr)
        return 1
    pred_deg, truth_deg = _predict_batch(params, stats, windows)
    report = evaluate_windows(pred_deg, truth_deg)
    doc = report.to_dict()
    doc["config"] = {
        "lambda": physics.lam,
        "order": physics.order.value,
        "approx": physics.approx.value,
        "horizon": params.w_out,
        "case": args.case,
        "model": str(args.model),
        "data": str(args.data),
    }
    report_path = Path(args.report)
    with open(report_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)

    ades = []
    for i in range(pred_deg.shape[0]):
        p = [GeoPoint(float(a), float(b)) for a, b in pred_deg[i]]
        t = [GeoPoint(float(a), float(b)) for a, b in truth_deg[i]]
        ades.append(ade_fde(p, t)[0])
    figures.save_ade_figure(np.array(ades), report_path.with_suffix(".png"))
    _write_config_echo(report_path.with_suffix(".config.json"), "eval", vars(args))
    print(
        f"case {args.case}: {report.n_windows} windows, "
        f"ADE {report.ade_m:.1f} +- {report.ade_std_m:.1f} m, FDE {report.fde_m:.1f} +- {report.fde_std_m:.1f} m"
    )
    return 0


def _stitch_segment(params, stats, seg_windows, w_in: int):
    """Average overlapping window predictions into one track per trajectory index."""
    pred_deg, truth_deg = _predict_batch(params, stats, seg_windows)
    scale = stats.maxs[:2] - stats.mins[:2]
    sums: dict[int, np.ndarray] = {}
    hits: dict[int, int] = {}
    truth: dict[int, np.ndarray] = {}
    for w, pred_w, truth_w in zip(seg_windows, pred_deg, truth_deg):
        for j in range(pred_w.shape[0]):
            idx = w.idx + w_in + j
            sums[idx] = sums.get(idx, 0.0) + pred_w[j]
            hits[idx] = hits.get(idx, 0) + 1
            truth.setdefault(idx, truth_w[j])
    first = seg_windows[0]
    observed_head = first.x[:, :2] * scale + stats.mins[:2]
    indices = sorted(sums)
    predicted = [GeoPoint(*(float(v) for v in sums[i] / hits[i])) for i in indices]
    observed_tail = [GeoPoint(*(float(v) for v in truth[i])) for i in indices]
    observed = [GeoPoint(float(a), float(b)) for a, b in observed_head] + observed_tail
    return observed, predicted, observed_tail


def cmd_predict(args: argparse.Namespace) -> int:
    for path, kind in ((args.model, "model file"), (args.data, "dataset directory")):
        if not Path(path).exists():
            print(f"error: {kind} {path} not found", file=sys.stderr)
            return 2
    params, stats, _ = model_mod.load_model(args.model)
    ds = _slice_dataset(pipeline.load_dataset(args.data), params.w_in, params.w_out)
    geojson_path = Path(args.geojson)

    if not ds.test:
        with open(geojson_path, "w") as fh:
            json.dump({"type": "FeatureCollection", "features": []}, fh)
        _write_config_echo(geojson_path.with_suffix(".config.json"), "predict", vars(args))
        print("empty test set: wrote empty FeatureCollection")
        return 0

    seg_id = min(w.seg_id for w in ds.test)
    seg_windows = sorted((w for w in ds.test if w.seg_id == seg_id), key=lambda w: w.idx)
    observed, predicted, observed_tail = _stitch_segment(params, stats, seg_windows, ds.w_in)

    def line(points, kind):
        return {
            "type": "Feature",
            "properties": {"kind": kind},
            "geometry": {
                "type": "LineString",
                "coordinates": [[p.lon, p.lat] for p in points],
            },
        }

    doc = {"type": "FeatureCollection", "features": [line(observed, "observed"), line(predicted, "predicted")]}
    with open(geojson_path, "w") as fh:
        json.dump(doc, fh, indent=2)
    figures.save_track_figure(observed, predicted, geojson_path.with_suffix(".png"))
    _write_config_echo(geojson_path.with_suffix(".config.json"), "predict", vars(args))
    ade, _ = ade_fde(predicted, observed_tail)
    print(f"stitched segment {seg_id}: {len(predicted)} predicted points, track ADE {ade:.1f} m")
    return 0


def cmd_deadreckon(args: argparse.Namespace) -> int:
    if not Path(args.state).exists():
        print(f"error: state file {args.state} not found", file=sys.stderr)
        return 2
    with open(args.state) as fh:
        doc = json.load(fh)
    try:
        state = KinematicState(
            pos=GeoPoint(float(doc["lat"]), float(doc["lon"])),
            sog=float(doc["sog"]),
            cog=float(doc["cog"]),
            accel=float(doc.get("accel", 0.0)),
            cog_rate=float(doc.get("cog_rate", 0.0)),
        )
    except KeyError as exc:
        print(f"error: state file missing field {exc}", file=sys.stderr)
        return 2
    scheme = Scheme(
        Integrator.EULER1 if args.scheme == "euler" else Integrator.HEUN2,
        Approx.SMALL_ANGLE if args.approx == "small" else Approx.GREAT_CIRCLE,
    )
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t_s", "lat", "lon"])
        if args.steps > 0:
            points = dead_reckon(state, args.dt_s, args.steps, scheme, HorizonMode.PROPAGATED)
            for k, p in enumerate(points, start=1):
                writer.writerow([k, repr(k * args.dt_s), repr(p.lat), repr(p.lon)])
    _write_config_echo(out.with_suffix(".config.json"), "deadreckon", vars(args))
    print(f"wrote {out}: {args.steps} steps of {args.dt_s} s ({args.scheme}/{args.approx})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vesselcast",
        description="Physics-informed vessel trajectory prediction toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("preprocess", help="AIS CSV -> windowed dataset directory")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--interval-s", type=float, default=120.0)
    p.add_argument("--gap-min", type=float, default=60.0)
    p.add_argument("--min-points", type=int, default=300)
    p.add_argument("--min-sog-kn", type=float, default=0.5)
    p.add_argument("--segment-h", type=float, default=3.0)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate synthetic AIS trajectories")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-deg", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a forecaster on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=["mlp", "gru"], required=True)
    p.add_argument("--order", type=int, choices=[0, 1, 2], required=True)
    p.add_argument("--approx", choices=["small", "great"], default="small")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--win", type=int, default=15)
    p.add_argument("--wout", type=int, choices=[5, 10, 15], default=15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--case", type=int, choices=[1, 2], default=1)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="stitch window predictions into a GeoJSON track")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--geojson", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("deadreckon", help="extrapolate a state file forward")
    p.add_argument("--state", required=True)
    p.add_argument("--scheme", choices=["euler", "heun"], required=True)
    p.add_argument("--approx", choices=["small", "great"], default="small")
    p.add_argument("--dt-s", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_deadreckon)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
