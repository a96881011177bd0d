"""Command line front end.

Subcommands:
    simulate    one closed-loop episode, prints metrics, writes a JSONL log
    sweep       grid of episodes over depths/offsets/modes, writes tables
    fit-energy  energy dataset + per-depth polynomial fits and optima
    train-pgnn  train the depth-to-velocity network, write weights JSON
    track-eval  per-bin IoU of the spiking tracker against truth boxes

Exit status: 0 on success, 1 on usage errors (bad flags, missing files),
2 on runtime failures.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .energy import (EnergySample, fit_depths, fit_energy_poly,
                     optimal_velocity)
from .events import read_event_file
from .sim import (MODE_BASELINE, MODE_PREDICTIVE, NetworkVelocityPredictor,
                  SimConfig, aggregates_table, load_config, metrics_table,
                  run_episode, run_sweep, write_episode_log)
from .snn import BoundingBox, LifConfig, SpikingGateDetector, iou
from .velocity_net import (LossWeights, MlpModel, TrainConfig,
                           build_training_set, save_weights, train)


class UsageError(Exception):
    """Bad arguments or missing input files; maps to exit status 1."""


def _existing_file(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {path}")
    return p


def _load_sim_config(args):
    if getattr(args, "config", None):
        path = _existing_file(args.config)
        try:
            config = load_config(path)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad config {path}: {exc}")
    else:
        config = SimConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    return config

def _float_list(text, flag):
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}")
    if not values:
        raise UsageError(f"{flag} must list at least one value")
    return values


def _out_dir(args):
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    config = _load_sim_config(args)
    if args.mode:
        config.planner_mode = args.mode
    if args.depth is not None:
        from dataclasses import replace
        config.gate = replace(config.gate, depth=args.depth)
    if args.offset is not None:
        config.drone_start = (config.drone_start[0], args.offset, config.drone_start[2])
    metrics, log = run_episode(config)
    out = _out_dir(args)
    write_episode_log(out / "episode.jsonl", log)
    print(f"status={metrics.status} success={str(metrics.success).lower()} "
          f"flight_time_s={metrics.flight_time:.6f} "
          f"path_length_m={metrics.path_length:.6f} "
          f"energy_J={metrics.dynamic_energy:.6f} "
          f"mean_iou={metrics.mean_iou:.6f} miss_m={metrics.miss_distance:.6f}")
    return 0


def cmd_sweep(args):
    config = _load_sim_config(args)
    depths = _float_list(args.depths, "--depths")
    offsets = _float_list(args.offsets, "--offsets")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in (MODE_PREDICTIVE, MODE_BASELINE):
            raise UsageError(f"unknown mode {mode!r}")
    predictor = None
    if args.train:
        config.lambda_physics = args.lambda1
        config.lambda_energy = args.lambda2
        predictor = NetworkVelocityPredictor(_train_model(config, args.epochs))
    rows, aggregates = run_sweep(config, depths, offsets, modes, predictor)
    table = metrics_table(rows)
    agg = aggregates_table(aggregates)
    out = _out_dir(args)
    (out / "metrics.csv").write_text(table)
    (out / "aggregates.csv").write_text(agg)
    print(table, end="")
    print(agg, end="")
    if args.plots:
        _write_sweep_plots(rows, config, out)
    return 0


def _train_model(config, epochs, seed=None, variant=None):
    polys, _ = fit_depths(range(2, 10), config.dynamics, config.motors)
    pairs = [(p.depth, optimal_velocity(p).velocity) for p in polys]
    data = build_training_set(pairs, polys, config.dynamics.a_max)
    train_config = TrainConfig(epochs=epochs, seed=config.seed if seed is None else seed)
    if variant:
        train_config.physics_variant = variant
    weights = LossWeights(config.lambda_physics, config.lambda_energy)
    model = MlpModel.initialize(train_config)
    model, _ = train(model, data, weights, train_config)
    return model


def cmd_fit_energy(args):
    config = _load_sim_config(args)
    depths = _float_list(args.depths, "--depths")
    polys, samples = fit_depths(depths, config.dynamics, config.motors, dt=args.dt)
    out = _out_dir(args)
    lines = ["depth_m,velocity_mps,energy_J"]
    lines += [f"{s.depth:.6f},{s.velocity:.6f},{s.energy:.6f}" for s in samples]
    (out / "dataset.csv").write_text("\n".join(lines) + "\n")
    fits = []
    for poly in polys:
        opt = optimal_velocity(poly)
        fits.append({
            "depth_m": poly.depth,
            "v_min_mps": poly.v_min,
            "v_max_mps": poly.v_max,
            "coefficients": list(poly.coeffs),
            "rms_residual_J": poly.rms_residual,
            "v_opt_mps": opt.velocity,
            "at_boundary": opt.at_boundary,
        })
    (out / "fits.json").write_text(json.dumps(fits, indent=2) + "\n")
    for f in fits:
        print(f"depth={f['depth_m']:.2f} v_opt={f['v_opt_mps']:.4f} "
              f"rms={f['rms_residual_J']:.4f} boundary={str(f['at_boundary']).lower()}")
    return 0


def cmd_train_pgnn(args):
    config = _load_sim_config(args)
    config.lambda_physics = args.lambda1
    config.lambda_energy = args.lambda2
    if args.data:
        samples = _read_dataset(_existing_file(args.data))
        by_depth = {}
        for s in samples:
            by_depth.setdefault(s.depth, []).append(s)
        polys = [fit_energy_poly(group) for group in by_depth.values()]
    else:
        polys, _ = fit_depths(range(2, 10), config.dynamics, config.motors)
    pairs = [(p.depth, optimal_velocity(p).velocity) for p in polys]
    if len(pairs) < 4:
        raise UsageError("training needs at least 4 fitted depths")
    data = build_training_set(pairs, polys, config.dynamics.a_max)
    train_config = TrainConfig(epochs=args.epochs, seed=args.seed,
                               physics_variant=args.variant)
    model = MlpModel.initialize(train_config)
    model, history = train(model, data,
                           LossWeights(args.lambda1, args.lambda2), train_config)
    out = _out_dir(args)
    save_weights(model, out / "weights.json")
    lines = ["epoch,total,data,physics,energy"]
    lines += [f"{i},{row[0]:.8e},{row[1]:.8e},{row[2]:.8e},{row[3]:.8e}"
              for i, row in enumerate(history)]
    (out / "loss_history.csv").write_text("\n".join(lines) + "\n")
    preds = ", ".join(f"{d:.0f}m->{model.forward(d):.3f}" for d, _ in pairs)
    print(f"final_loss={history[-1][0]:.6e} predictions: {preds}")
    return 0


def _read_dataset(path):
    samples = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("depth_m") or line.startswith("#"):
                continue
            d, v, e = line.split(",")
            samples.append(EnergySample(float(d), float(v), float(e)))
    if not samples:
        raise UsageError(f"no samples in {path}")
    return samples


def _read_truth_file(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t, x0, x1, y0, y1 = (int(v) for v in line.split(","))
            rows.append((t, BoundingBox(x0, x1, y0, y1)))
    rows.sort(key=lambda r: r[0])
    return rows


def cmd_track_eval(args):
    events = read_event_file(_existing_file(args.events))
    truth = _read_truth_file(_existing_file(args.truth))
    if len(events) == 0:
        raise UsageError("event file holds no events")
    if not truth:
        raise UsageError("truth file holds no boxes")
    lif = LifConfig(bin_width_us=args.bin_us)
    detector = SpikingGateDetector(args.height, args.width, lif)
    t_first = int(events.t.min())
    t_last = int(events.t.max())
    start = (t_first - 1) // args.bin_us * args.bin_us
    lines = ["t_us,iou"]
    ious = []
    n_bins = 0
    t_a = start
    while t_a <= t_last:
        t_b = t_a + args.bin_us
        detection = detector.step(events, t_a, t_b)
        box_truth = None
        for t_row, row_box in truth:
            if t_row <= t_b:
                box_truth = row_box
            else:
                break
        n_bins += 1
        if detection.box is not None and box_truth is not None:
            value = iou(detection.box, box_truth)
            ious.append(value)
            lines.append(f"{t_b},{value:.6f}")
        else:
            lines.append(f"{t_b},nan")
        t_a = t_b
    mean_iou = float(np.mean(ious)) if ious else 0.0
    peak_iou = float(np.max(ious)) if ious else 0.0
    lines.append(f"# mean_iou={mean_iou:.6f} peak_iou={peak_iou:.6f} "
                 f"detected_bins={len(ious)} total_bins={n_bins}")
    table = "\n".join(lines) + "\n"
    if args.out:
        out = _out_dir(args)
        (out / "track_eval.csv").write_text(table)
    print(table, end="")
    return 0


def _write_sweep_plots(rows, config, out):
    try:
        import matplotlib
    except ImportError:
        raise UsageError("matplotlib is required for --plots")
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_t, ax_p) = plt.subplots(1, 2, figsize=(9, 3.5))
    modes = sorted({r[0] for r in rows})
    for mode in modes:
        picked = [(r[1], r[3]) for r in rows if r[0] == mode]
        depths = sorted({d for d, _ in picked})
        times = [np.nanmean([m.flight_time for d, m in picked if d == depth]) for depth in depths]
        paths = [np.nanmean([m.path_length for d, m in picked if d == depth]) for depth in depths]
        ax_t.plot(depths, times, marker="o", label=mode)
        ax_p.plot(depths, paths, marker="s", label=mode)
    ax_t.set_xlabel("depth (m)")
    ax_t.set_ylabel("flight time (s)")
    ax_p.set_xlabel("depth (m)")
    ax_p.set_ylabel("path length (m)")
    ax_t.legend()
    fig.tight_layout()
    fig.savefig(out / "flight_path_depth.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    polys, samples = fit_depths(range(2, 10), config.dynamics, config.motors)
    for poly in polys:
        vs = np.linspace(poly.v_min, poly.v_max, 100)
        ax.plot(vs, [poly.energy_at(v) for v in vs], label=f"{poly.depth:.0f} m")
    ax.set_xlabel("cruise velocity (m/s)")
    ax.set_ylabel("energy (J)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "energy_velocity.svg")
    plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gatenav",
        description="Event-camera gate navigation sandbox")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop episode")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (episode.jsonl)")
    p.add_argument("--mode", choices=[MODE_PREDICTIVE, MODE_BASELINE])
    p.add_argument("--depth", type=float, help="gate depth override (m)")
    p.add_argument("--offset", type=float, help="drone lateral start offset (m)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid of episodes, writes metric tables")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--depths", default="2,3,4,5,6")
    p.add_argument("--offsets", default="-2,0,2")
    p.add_argument("--modes", default=f"{MODE_PREDICTIVE},{MODE_BASELINE}")
    p.add_argument("--plots", action="store_true", help="write SVG plots")
    p.add_argument("--train", action="store_true",
                   help="train a velocity network first and fly with it")
    p.add_argument("--lambda1", type=float, default=0.1, help="physics loss weight")
    p.add_argument("--lambda2", type=float, default=0.1, help="energy loss weight")
    p.add_argument("--epochs", type=int, default=5000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit-energy", help="energy dataset and per-depth fits")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--depths", default="2,3,4,5,6,7,8,9")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_fit_energy)

    p = sub.add_parser("train-pgnn", help="train the depth-to-velocity network")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--data", help="dataset.csv from fit-energy (else regenerate)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--lambda1", type=float, default=0.1, help="physics loss weight")
    p.add_argument("--lambda2", type=float, default=0.1, help="energy loss weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=["zero_derivative", "dynamics"],
                   default="zero_derivative")
    p.set_defaults(func=cmd_train_pgnn)

    p = sub.add_parser("track-eval", help="IoU of the tracker on an event file")
    p.add_argument("--events", required=True, help="event file (t_us,x,y,p)")
    p.add_argument("--truth", required=True,
                   help="truth boxes file (t_us,x_min,x_max,y_min,y_max)")
    p.add_argument("--width", type=int, default=240)
    p.add_argument("--height", type=int, default=180)
    p.add_argument("--bin-us", type=int, default=10_000)
    p.add_argument("--out", help="also write track_eval.csv here")
    p.set_defaults(func=cmd_track_eval)

    return parser


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
