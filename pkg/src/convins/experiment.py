"""End-to-end depth study: simulate, corrupt, dead-reckon, train, correct, score.

Accuracy is reported as the relative reduction of the 3-D average RMSE,
``max(0, 1 - corrected / uncorrected) * 100``.
"""

from __future__ import annotations

import json
import logging
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .csvio import atomic_write_bytes, write_rows, write_table
from .imu import ImuSeries, corrupt, derive_ideal
from .nn.network import Network, Normalization, build_variant
from .nn.serialize import save_network
from .nn.train import train
from .strapdown import NavSeries, NavState, run
from .trajectory import TrajectorySeries, decimate, generate

log = logging.getLogger(__name__)

REPORT_HEADER = ["variant", "rmse_e", "rmse_n", "rmse_u", "rmse_3d_avg", "accuracy_pct",
                 "train_seconds"]
CORRECTED_HEADER = ["t", "east_ref", "north_ref", "up_ref", "east_ins", "north_ins", "up_ins",
                    "east_corr", "north_corr", "up_corr"]

#: Position RMSE in meters (East, North, Up) and accuracy % reported for the
#: original MATLAB study; display only.
PUBLISHED = {
    "superficial": {"rmse_e": 23.63, "rmse_n": 22.10, "rmse_u": 81.50, "rmse_3d_avg": 42.41,
                    "accuracy_pct": 69.70},
    "medium": {"rmse_e": 5.08, "rmse_n": 6.93, "rmse_u": 66.47, "rmse_3d_avg": 26.16,
               "accuracy_pct": 70.20},
    "deep": {"rmse_e": 2.39, "rmse_n": 6.31, "rmse_u": 14.10, "rmse_3d_avg": 7.60,
             "accuracy_pct": 91.72},
}
ACCURACY_FORMULA = "accuracy_pct = max(0, 1 - rmse_3d_avg(corrected) / rmse_3d_avg(uncorrected)) * 100"


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def sub_seed(seed: int, *path: str) -> int:
    """Derive an independent 64-bit seed for a named stage.

    ``SeedSequence(seed, spawn_key=[crc32(name) for name in path])``; the
    first 64-bit word of its state is the stage seed.
    """
    key = tuple(zlib.crc32(p.encode()) for p in path)
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# datasets

@dataclass
class WindowDataset:
    """Sliding windows of INS ENU positions with the reference residual at the window end.

    ``inputs`` and ``targets`` are in meters; ``norm`` (set by
    `temporal_split`) maps them to the network's normalized units.
    """

    inputs: np.ndarray        # (N, W, 3)
    targets: np.ndarray       # (N, 3)  ref - ins at window end
    t: np.ndarray             # (N,)    time of window end
    ins_end: np.ndarray       # (N, 3)
    ref_end: np.ndarray       # (N, 3)
    norm: Normalization | None = None

    def __len__(self):
        return len(self.t)

    def subset(self, s) -> "WindowDataset":
        return WindowDataset(self.inputs[s], self.targets[s], self.t[s], self.ins_end[s],
                             self.ref_end[s], self.norm)

    @property
    def x(self) -> np.ndarray:
        n = self._norm()
        return (self.inputs - n.input_mean) / n.input_std

    @property
    def y(self) -> np.ndarray:
        n = self._norm()
        return (self.targets - n.target_mean) / n.target_std

    def _norm(self) -> Normalization:
        if self.norm is None:
            raise ValueError("dataset has no normalization; use temporal_split first")
        return self.norm


def make_windows(ins_t, ins_enu, ref_t, ref_enu, window: int) -> WindowDataset:
    """Stride-1 windows over aligned 1 Hz series of INS and reference ENU positions."""
    ins_t, ref_t = np.asarray(ins_t, float), np.asarray(ref_t, float)
    ins_enu, ref_enu = np.asarray(ins_enu, float), np.asarray(ref_enu, float)
    if ins_t.shape != ref_t.shape or np.any(np.abs(ins_t - ref_t) > 1e-9):
        raise ValueError("INS and reference series are not aligned in time")
    n = len(ins_t)
    if window < 1 or n < window:
        raise ValueError(f"series of length {n} shorter than window {window}")
    idx = np.arange(window)[None, :] + np.arange(n - window + 1)[:, None]
    end = idx[:, -1]
    return WindowDataset(ins_enu[idx], ref_enu[end] - ins_enu[end], ins_t[end],
                         ins_enu[end], ref_enu[end])


def fit_normalization(train_ds: WindowDataset) -> Normalization:
    x = train_ds.inputs.reshape(-1, 3)
    std_x = x.std(axis=0)
    std_y = train_ds.targets.std(axis=0)
    return Normalization(x.mean(axis=0), np.where(std_x > 0, std_x, 1.0),
                         train_ds.targets.mean(axis=0), np.where(std_y > 0, std_y, 1.0))


def temporal_split(ds: WindowDataset, train_fraction: float):
    """First ``floor(fraction * n)`` windows train, the rest test; train-only normalization."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    k = int(np.floor(train_fraction * len(ds)))
    if k == 0 or k == len(ds):
        raise ValueError(f"degenerate split: {k} train / {len(ds) - k} test windows")
    train_ds, test_ds = ds.subset(slice(0, k)), ds.subset(slice(k, None))
    norm = fit_normalization(train_ds)
    train_ds.norm = norm
    test_ds.norm = norm
    return train_ds, test_ds


# ---------------------------------------------------------------------------
# metrics

def rmse(ref, pred) -> float:
    ref, pred = np.asarray(ref, float), np.asarray(pred, float)
    if ref.shape != pred.shape:
        raise ValueError("length mismatch")
    if ref.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((ref - pred) ** 2)))


def accuracy_pct(rmse_corrected: float, rmse_uncorrected: float) -> float:
    if not rmse_uncorrected > 0:
        raise ValueError("uncorrected RMSE must be positive")
    return max(0.0, 1.0 - rmse_corrected / rmse_uncorrected) * 100.0


@dataclass
class VariantResult:
    variant: str
    rmse_e: float
    rmse_n: float
    rmse_u: float
    accuracy_pct: float
    train_seconds: float
    loss_history: list[float] = field(default_factory=list)

    @property
    def rmse_3d_avg(self) -> float:
        return (self.rmse_e + self.rmse_n + self.rmse_u) / 3.0


@dataclass
class EvalReport:
    uncorrected: tuple[float, float, float]
    variants: dict[str, VariantResult]
    seed: int
    n_train: int
    n_test: int

    @property
    def uncorrected_3d_avg(self) -> float:
        return float(np.mean(self.uncorrected))

    def rows(self) -> list[list]:
        e, n, u = self.uncorrected
        rows = [["uncorrected", e, n, u, self.uncorrected_3d_avg, 0.0, 0.0]]
        for r in self.variants.values():
            rows.append([r.variant, r.rmse_e, r.rmse_n, r.rmse_u, r.rmse_3d_avg,
                         r.accuracy_pct, r.train_seconds])
        return rows

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        write_rows(out / "report.csv", REPORT_HEADER, self.rows())
        meta = {
            "accuracy_formula": ACCURACY_FORMULA,
            "seed": self.seed,
            "n_train_windows": self.n_train,
            "n_test_windows": self.n_test,
            "uncorrected": dict(zip(("rmse_e", "rmse_n", "rmse_u"), self.uncorrected)),
            "variants": {k: {**asdict(v), "rmse_3d_avg": v.rmse_3d_avg}
                         for k, v in self.variants.items()},
            "published_reference": PUBLISHED,
        }
        atomic_write_bytes(out / "report.json", json.dumps(meta, indent=2).encode())


# ---------------------------------------------------------------------------
# stages

def simulate(cfg: ScenarioConfig) -> TrajectorySeries:
    t = cfg.trajectory
    return generate(t.origin, t.initial_yaw, t.script(), t.dt)


def derive_imu(traj: TrajectorySeries, cfg: ScenarioConfig) -> ImuSeries:
    return derive_ideal(traj, warmup_time=cfg.errors.warmup)


def corrupt_imu(ideal: ImuSeries, cfg: ScenarioConfig) -> ImuSeries:
    e = cfg.errors
    return corrupt(ideal, e.gyro, e.accel, sub_seed(cfg.train.seed, "corrupt"), warmup_time=e.warmup)


def mechanize(imu: ImuSeries, traj: TrajectorySeries) -> NavSeries:
    return run(imu, NavState.from_trajectory(traj), origin=traj.origin)


def position_series(nav: NavSeries, traj: TrajectorySeries, warmup: float):
    """1 Hz, post-warm-up (t, ins_enu, ref_enu) arrays."""
    factor = int(round(1.0 / traj.dt))
    ref = decimate(traj, factor)
    ins = nav.decimate(factor)
    keep = ref.t >= warmup
    ref_enu = ref.enu()
    ins_enu = ins.enu()
    return ref.t[keep], ins_enu[keep], ref_enu[keep]


def build_dataset(nav: NavSeries, traj: TrajectorySeries, cfg: ScenarioConfig):
    t, ins_enu, ref_enu = position_series(nav, traj, cfg.errors.warmup)
    ds = make_windows(t, ins_enu, t, ref_enu, cfg.train.window)
    return temporal_split(ds, cfg.experiment.train_fraction)


def train_variant(variant: str, train_ds: WindowDataset, cfg: ScenarioConfig):
    spec = build_variant(variant, cfg.train.window)
    net = Network.initialize(spec, sub_seed(cfg.train.seed, "init", variant))
    net.norm = train_ds.norm
    tc = cfg.train.train_config(sub_seed(cfg.train.seed, "shuffle", variant))
    t0 = time.perf_counter()
    net, history = train(net, (train_ds.x, train_ds.y), tc)
    return net, history, time.perf_counter() - t0


def evaluate(net: Network, test_ds: WindowDataset):
    corrected = test_ds.ins_end + net.predict_correction(test_ds.inputs)
    return corrected, [rmse(test_ds.ref_end[:, i], corrected[:, i]) for i in range(3)]


def uncorrected_rmse(test_ds: WindowDataset) -> tuple[float, float, float]:
    return tuple(rmse(test_ds.ref_end[:, i], test_ds.ins_end[:, i]) for i in range(3))


def score(variant: str, net: Network, test_ds: WindowDataset, train_seconds: float = 0.0,
          history=()) -> tuple[VariantResult, np.ndarray]:
    """Apply `net` to the test split; return its result row and the corrected positions."""
    corrected, (e, n, u) = evaluate(net, test_ds)
    unc_avg = float(np.mean(uncorrected_rmse(test_ds)))
    acc = accuracy_pct((e + n + u) / 3.0, unc_avg)
    return VariantResult(variant, e, n, u, acc, float(train_seconds), list(history)), corrected


def write_corrected(path, test_ds: WindowDataset, corrected) -> None:
    write_table(path, CORRECTED_HEADER,
                [test_ds.t, *test_ds.ref_end.T, *test_ds.ins_end.T, *np.asarray(corrected).T])


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_experiment(cfg: ScenarioConfig, out_dir=None, progress=None) -> EvalReport:
    """Run every stage for all configured variants; optionally write artifacts to `out_dir`."""
    say = progress or log.info
    say("simulate")
    traj = _stage("simulate", simulate, cfg)
    ideal = _stage("derive-imu", derive_imu, traj, cfg)
    imu = _stage("corrupt", corrupt_imu, ideal, cfg)
    say("mechanize")
    nav = _stage("mechanize", mechanize, imu, traj)
    train_ds, test_ds = _stage("dataset", build_dataset, nav, traj, cfg)
    if out_dir is not None:
        out = Path(out_dir)
        traj.to_csv(out / "trajectory.csv")
        ideal.to_csv(out / "imu_ideal.csv")
        imu.to_csv(out / "imu.csv")
        nav.to_csv(out / "nav.csv")
    return train_and_report(train_ds, test_ds, cfg, out_dir, say)


def train_and_report(train_ds, test_ds, cfg: ScenarioConfig, out_dir=None, say=None) -> EvalReport:
    say = say or log.info
    unc = uncorrected_rmse(test_ds)
    unc_avg = float(np.mean(unc))
    results = {}
    for variant in cfg.train.variants:
        say(f"train {variant}")
        net, history, secs = _stage(f"train:{variant}", train_variant, variant, train_ds, cfg)
        result, corrected = _stage(f"evaluate:{variant}", score, variant, net, test_ds, secs, history)
        results[variant] = result
        say(f"{variant}: rmse_3d_avg {result.rmse_3d_avg:.3f} m (uncorrected {unc_avg:.3f} m), "
            f"{secs:.1f} s")
        if out_dir is not None:
            save_network(net, Path(out_dir) / f"model_{variant}.npz")
            write_corrected(Path(out_dir) / f"corrected_{variant}.csv", test_ds, corrected)
    report = EvalReport(unc, results, cfg.train.seed, len(train_ds), len(test_ds))
    if out_dir is not None:
        report.write(out_dir)
    return report
