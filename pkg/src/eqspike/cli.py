"""Command-line entry points.

Subcommands:

* ``train``        -- train on an MNIST directory per a TOML config, writing a
                      CSV run log, a checkpoint and the resolved config.
* ``infer``        -- accuracy-versus-time curves (rate and first-spike
                      readouts) from a checkpoint, as CSV.
* ``oracle-check`` -- small-instance validation of the spiking updates
                      against the rate-based reference and finite differences.
* ``stdp``         -- timing-resolved average weight updates from saved
                      spike/update logs, as CSV.
* ``synops``       -- synaptic-operation counts and the energy estimate for a
                      saved spike log.

Exit codes: 0 success, 2 usage error, 3 missing file / IO error, 4 parse
error (config, checkpoint or data format), 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="override the configured RNG seed")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqspike",
        description="Event-driven spiking network trained by spike-gated "
                    "equilibrium propagation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network on MNIST IDX data")
    p.add_argument("--config", type=Path, default=None,
                   help="TOML config (defaults apply when omitted)")
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=None, help="override config epochs")
    p.add_argument("--train-n", type=int, default=None)
    p.add_argument("--test-n", type=int, default=None)
    p.add_argument("--log-images", type=int, default=0,
                   help="record spike/update logs for the first N images of epoch 1")
    p.add_argument("--log-update-block", type=int, default=0,
                   help="weight block recorded into the update log")
    p.add_argument("--log-pre-stride", type=int, default=1,
                   help="record updates only for every k-th presynaptic neuron")
    _add_common(p)

    p = sub.add_parser("infer", help="accuracy-vs-time curves from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--horizon-sweep", default="0:40:2",
                   help="start:stop:step horizon sweep in simulation steps")
    p.add_argument("--window", type=int, default=100,
                   help="rate-readout averaging window in steps")
    p.add_argument("--test-n", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="curve CSV path")
    _add_common(p)

    p = sub.add_parser("oracle-check",
                       help="validate spiking updates on small random instances")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--skip-gradient", action="store_true",
                   help="skip the finite-difference comparison")
    _add_common(p)

    p = sub.add_parser("stdp", help="timing-resolved update curve from logs")
    p.add_argument("--spikes", type=Path, required=True, help="spike log .npz")
    p.add_argument("--updates", type=Path, required=True, help="update log .npz")
    p.add_argument("--checkpoint", type=Path, required=True,
                   help="checkpoint supplying topology and parameters")
    p.add_argument("--block", type=int, default=0)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--rate-floor", type=float, default=0.05)
    p.add_argument("--out", type=Path, required=True, help="curve CSV path")
    _add_common(p)

    p = sub.add_parser("synops", help="SynOps and energy report for a spike log")
    p.add_argument("--spikes", type=Path, required=True, help="spike log .npz")
    p.add_argument("--layer-sizes", default="784,100,10",
                   help="comma-separated topology")
    p.add_argument("--pj-per-synop", type=float, default=10.0)
    p.add_argument("--n-images", type=int, default=1)
    _add_common(p)

    return parser


def _cmd_train(args) -> int:
    from .config import RunConfig, load_config, resolved_toml
    from .data import load_mnist
    from .checkpoint import save as save_checkpoint
    from .trainer import TrainerConfig, train
    from . import logs

    if args.config is not None:
        run_cfg = load_config(args.config)
    else:
        run_cfg = RunConfig(trainer=TrainerConfig())
    trainer_cfg = run_cfg.trainer
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        from dataclasses import replace
        trainer_cfg = replace(trainer_cfg, **overrides)
    if args.train_n is not None:
        run_cfg.train_n = args.train_n
    if args.test_n is not None:
        run_cfg.test_n = args.test_n
    run_cfg.trainer = trainer_cfg

    dataset = run_cfg.subset_dataset(load_mnist(args.data_dir))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "resolved_config.toml").write_text(resolved_toml(run_cfg))

    progress = None
    if not args.quiet:
        def progress(m):
            print(f"epoch {m.epoch}: train {m.train_acc:.4f} test {m.test_acc:.4f} "
                  f"nudged {m.nudged_images} synops {m.synops_cumulative:.4g}")

    log_state = None
    if args.log_images > 0:
        log_state = logs.TrainingLogRecorder(
            n_images=args.log_images, block=args.log_update_block,
            pre_stride=args.log_pre_stride)

    result = train(dataset, trainer_cfg, csv_path=args.out_dir / "run_log.csv",
                   progress=progress, recorder=log_state)

    rng = np.random.default_rng(trainer_cfg.seed)
    save_checkpoint(args.out_dir / "model.ckpt", result.network,
                    epoch=trainer_cfg.epochs, rng=rng)
    if log_state is not None:
        log_state.spike_log.save(args.out_dir / "spikes.npz")
        log_state.update_log.save(args.out_dir / "updates.npz")
    if not args.quiet:
        print(f"final test accuracy: {result.final_test_acc:.4f}")
        print(f"artifacts written to {args.out_dir}")
    return EXIT_OK


def _cmd_infer(args) -> int:
    from .checkpoint import load as load_checkpoint
    from .data import load_mnist
    from .readout import accuracy_vs_time

    try:
        start, stop, step = (int(x) for x in args.horizon_sweep.split(":"))
    except ValueError:
        raise SystemExit2(EXIT_USAGE, f"bad --horizon-sweep: {args.horizon_sweep!r}")
    horizons = list(range(start, stop + 1, step))
    if not horizons or horizons[-1] < 1:
        raise SystemExit2(EXIT_USAGE, "horizon sweep contains no positive horizon")

    ckpt = load_checkpoint(args.checkpoint)
    dataset = load_mnist(args.data_dir)
    if args.test_n is not None:
        dataset = dataset.subset(test_n=args.test_n)
    curve = accuracy_vs_time(ckpt.network, dataset.test_images,
                             dataset.test_labels, horizons, window=args.window)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(curve.CSV_FIELDS)
        w.writerows(curve.rows())
    if not args.quiet:
        print(f"mean first output spike at step {curve.mean_first_spike_step:.2f} "
              f"({curve.mean_first_spike_step * ckpt.network.params.dt * ckpt.network.params.f_max:.2f} / f_max)")
        print(f"mean spikes before first output spike: "
              f"{curve.mean_spikes_before_first_output:.1f}")
        print(f"curve written to {args.out}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    from .validation import run_alignment_suite

    seed0 = args.seed if args.seed is not None else 0
    seeds = range(seed0, seed0 + args.instances)
    rep = run_alignment_suite(seeds=seeds, check_gradient=not args.skip_gradient)
    print("spiking updates vs two-point reference (per instance):")
    for k, s in enumerate(rep.seeds):
        r = rep.spike_vs_two_point[k]
        print(f"  seed {s}: block0 cos {r[0, 0]:+.3f} sign {r[0, 1]:.3f} | "
              f"block1 cos {r[1, 0]:+.3f} sign {r[1, 1]:.3f}")
    ok = True
    for l, name in ((0, "block0"), (1, "block1")):
        cos, sign = rep.mean_spike_cos(l), rep.mean_spike_sign(l)
        print(f"mean {name}: cosine {cos:.3f} (>= 0.6), sign agreement {sign:.3f} (>= 0.8)")
        ok &= cos >= 0.6 and sign >= 0.8
    if not args.skip_gradient:
        for l, name in ((0, "block0"), (1, "block1")):
            cos = rep.mean_oracle_cos(l)
            print(f"two-point vs loss-descent {name}: cosine {cos:.4f} (>= 0.95)")
            ok &= cos >= 0.95
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else 1


def _cmd_stdp(args) -> int:
    from .checkpoint import load as load_checkpoint
    from .metrics import stdp_curve
    from .sim import SpikeLog, UpdateLog

    ckpt = load_checkpoint(args.checkpoint)
    spike_log = SpikeLog.load(args.spikes)
    update_log = UpdateLog.load(args.updates)
    p = ckpt.network.params
    curve = stdp_curve(spike_log, update_log, ckpt.network.topology,
                       block=args.block, window=args.window,
                       rate_floor=args.rate_floor,
                       f_max_per_step=p.f_max_per_step, beta_used=p.beta)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(curve.CSV_FIELDS)
        w.writerows(curve.rows())
    if not args.quiet:
        populated = int((curve.counts > 0).sum())
        print(f"{populated} populated bins, peak |mean dw| {curve.peak_amplitude():.3e}")
        print(f"curve written to {args.out}")
    return EXIT_OK


def _cmd_synops(args) -> int:
    from .metrics import EnergyModel, block_synops, count_synops, energy_estimate, spike_stats
    from .network import Topology
    from .sim import SpikeLog

    try:
        sizes = [int(x) for x in args.layer_sizes.split(",")]
    except ValueError:
        raise SystemExit2(EXIT_USAGE, f"bad --layer-sizes: {args.layer_sizes!r}")
    topo = Topology(sizes)
    log = SpikeLog.load(args.spikes)
    synops = count_synops(log, topo)
    per_block = block_synops(log, topo)
    stats = spike_stats(log, topo, args.n_images)
    energy = energy_estimate(synops, EnergyModel(args.pj_per_synop))
    print(f"spikes: {len(log)}")
    print(f"synops: {synops}  (per block: {', '.join(map(str, per_block))})")
    print(f"energy at {args.pj_per_synop} pJ/SynOp: {energy:.6g} J")
    print(f"spikes/neuron/image: {stats.spikes_per_neuron_per_image:.3f}")
    print(f"input-layer spike fraction: {stats.input_layer_spike_fraction:.4f}")
    print(f"input-block synop fraction: {stats.input_block_synop_fraction:.4f}")
    return EXIT_OK


class SystemExit2(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


_COMMANDS = {
    "train": _cmd_train,
    "infer": _cmd_infer,
    "oracle-check": _cmd_oracle_check,
    "stdp": _cmd_stdp,
    "synops": _cmd_synops,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .config import ConfigError
    from .checkpoint import CheckpointError
    from .data import CountMismatchError, IdxFormatError
    try:
        return _COMMANDS[args.command](args)
    except SystemExit2 as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.code
    except FileNotFoundError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, CheckpointError, IdxFormatError, CountMismatchError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
