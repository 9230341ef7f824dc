"""Command-line front end.

Every command reads its inputs from, and writes its outputs to, the output
directory, so the pipeline can be resumed at any stage::

    simulate    -> trajectory.csv
    derive-imu  trajectory.csv -> imu_ideal.csv
    corrupt     imu_ideal.csv -> imu.csv
    mechanize   trajectory.csv, imu.csv (or imu_ideal.csv) -> nav.csv
    train       trajectory.csv, nav.csv -> model_<v>.npz, train_<v>.json
    evaluate    trajectory.csv, nav.csv, model_<v>.npz -> corrected_<v>.csv, report.csv
    run-all     all of the above in order
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiment as ex
from .config import ConfigError, ScenarioConfig, load_config, validate
from .csvio import atomic_write_bytes
from .imu import ImuSeries
from .nn.serialize import load_network, save_network
from .strapdown import NavSeries
from .trajectory import TrajectorySeries

log = logging.getLogger("convins")

COMMANDS = ("simulate", "derive-imu", "corrupt", "mechanize", "train", "evaluate", "run-all")


class MissingInput(FileNotFoundError):
    pass


def _need(out: Path, name: str, producer: str) -> Path:
    p = out / name
    if not p.exists():
        raise MissingInput(f"missing input {p} (run `{producer}` first)")
    return p


def _trajectory(out: Path) -> TrajectorySeries:
    return TrajectorySeries.from_csv(_need(out, "trajectory.csv", "simulate"))


def _dataset(cfg: ScenarioConfig, out: Path):
    traj = _trajectory(out)
    nav = NavSeries.from_csv(_need(out, "nav.csv", "mechanize"), origin=traj.origin)
    return ex.build_dataset(nav, traj, cfg)


def cmd_simulate(cfg, out):
    ex.simulate(cfg).to_csv(out / "trajectory.csv")


def cmd_derive_imu(cfg, out):
    ex.derive_imu(_trajectory(out), cfg).to_csv(out / "imu_ideal.csv")


def cmd_corrupt(cfg, out):
    ideal = ImuSeries.from_csv(_need(out, "imu_ideal.csv", "derive-imu"))
    ex.corrupt_imu(ideal, cfg).to_csv(out / "imu.csv")


def cmd_mechanize(cfg, out):
    traj = _trajectory(out)
    for name in ("imu.csv", "imu_ideal.csv"):
        if (out / name).exists():
            log.info("mechanizing %s", name)
            imu = ImuSeries.from_csv(out / name)
            break
    else:
        log.info("no IMU file found; deriving ideal IMU")
        imu = ex.derive_imu(traj, cfg)
    ex.mechanize(imu, traj).to_csv(out / "nav.csv")


def cmd_train(cfg, out):
    train_ds, _ = _dataset(cfg, out)
    for v in cfg.train.variants:
        log.info("training %s on %d windows", v, len(train_ds))
        net, history, secs = ex._stage(f"train:{v}", ex.train_variant, v, train_ds, cfg)
        save_network(net, out / f"model_{v}.npz")
        meta = {"variant": v, "train_seconds": secs, "loss_history": history}
        atomic_write_bytes(out / f"train_{v}.json", json.dumps(meta, indent=2).encode())
        log.info("%s: %.1f s, final loss %.6g", v, secs, history[-1] if history else float("nan"))


def cmd_evaluate(cfg, out):
    train_ds, test_ds = _dataset(cfg, out)
    results = {}
    for v in cfg.train.variants:
        net = load_network(_need(out, f"model_{v}.npz", "train"))
        meta_path = out / f"train_{v}.json"
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        result, corrected = ex.score(v, net, test_ds, meta.get("train_seconds", 0.0),
                                     meta.get("loss_history", ()))
        ex.write_corrected(out / f"corrected_{v}.csv", test_ds, corrected)
        results[v] = result
        log.info("%s: rmse_3d_avg %.3f m, accuracy %.2f %%", v, result.rmse_3d_avg,
                 result.accuracy_pct)
    report = ex.EvalReport(ex.uncorrected_rmse(test_ds), results, cfg.train.seed, len(train_ds),
                           len(test_ds))
    report.write(out)
    _print_report(report)


def _print_report(report):
    print(f"{'variant':<12} {'rmse_e':>12} {'rmse_n':>12} {'rmse_u':>12} {'3d_avg':>12} "
          f"{'acc_%':>7} {'train_s':>8}")
    for row in report.rows():
        print(f"{row[0]:<12} " + " ".join(f"{x:12.3f}" for x in row[1:5])
              + f" {row[5]:7.2f} {row[6]:8.1f}")


STAGES = {
    "simulate": cmd_simulate,
    "derive-imu": cmd_derive_imu,
    "corrupt": cmd_corrupt,
    "mechanize": cmd_mechanize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convins", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default="default",
                        help="scenario TOML file, or 'default' (the default)")
    parser.add_argument("--seed", type=int, help="override train.seed")
    parser.add_argument("--variant", action="append", choices=("superficial", "medium", "deep"),
                        help="restrict train/evaluate to this variant (repeatable)")
    parser.add_argument("--out", help="output directory (default: $CONVINS_OUT or ./out)")
    parser.add_argument("--epochs", type=int, help="override train.epochs")
    parser.add_argument("--lr", type=float, help="override train.lr")
    parser.add_argument("--batch-size", type=int, help="override train.batch")
    parser.add_argument("--window", type=int, help="override train.window")
    parser.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    return parser


def resolve_config(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    overrides = {k: v for k, v in (("seed", args.seed), ("epochs", args.epochs), ("lr", args.lr),
                                   ("batch", args.batch_size), ("window", args.window))
                 if v is not None}
    if args.variant:
        overrides["variants"] = tuple(dict.fromkeys(args.variant))
    if overrides:
        cfg = replace(cfg, train=replace(cfg.train, **overrides))
        validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"convins: config: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.experiment.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(STAGES) if args.command == "run-all" else [args.command]
    for name in names:
        log.info("stage %s", name)
        try:
            STAGES[name](cfg, out)
        except Exception as exc:
            stage = exc.stage if isinstance(exc, ex.StageError) else name
            cause = exc.__cause__ if isinstance(exc, ex.StageError) else exc
            print(f"convins: [{stage}] {type(cause).__name__}: {cause}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
