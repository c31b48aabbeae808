"""Seeded multi-trial experiments, dataset files and CSV output.

Dataset directory layout (all plain text, 17 significant digits)::

    data.csv       one observation per row, comma separated, no header
    truth_A.csv    m rows x d columns
    outliers.txt   one 0-based outlier row index per line, ascending
"""

import csv
import io
import math
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dhr import DhrConfig, DhrResult, run_dhr, run_pca
from .errors import ContractViolation
from .estimators import GroundTruth, ceil_count
from .hr import HrConfig, run_hr
from .kernel import KernelSpec, run_kernel_dhr
from .synth import SynthConfig, generate

ALGORITHMS = ("dhr", "hr", "pca", "kernel-dhr")

RUN_COLUMNS = [
    "trial", "algorithm", "m", "n", "d", "lambda", "sigma", "mag", "t_hat",
    "iteration", "opt", "ev", "best_ev", "nonzero_weights", "wall_ms", "seed",
    "termination_reason",
]
SWEEP_COLUMNS = [
    "lambda", "outliers", "algorithm", "trials", "iters_to_best_mean",
    "iters_to_best_std", "final_ev_mean", "final_ev_std", "wall_ms_mean",
]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return format(float(value), ".17g")
    return str(value)


def default_t_hat(n: int, lam: Optional[float]) -> int:
    """``ceil((1 - lam) n)`` if the outlier fraction is known, else ``ceil(n / 2)``."""
    if lam is None:
        return ceil_count(0.5 * n)
    return ceil_count((1.0 - lam) * n)


def save_dataset(directory, data, truth: Optional[GroundTruth] = None):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "data.csv"]
    np.savetxt(paths[0], data, fmt="%.17g", delimiter=",")
    if truth is not None:
        paths.append(out / "truth_A.csv")
        np.savetxt(paths[1], truth.A, fmt="%.17g", delimiter=",")
        paths.append(out / "outliers.txt")
        paths[2].write_text("".join(f"{i}\n" for i in truth.outlier_indices))
    return paths


def load_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)


def load_dataset(data_path, truth_path=None):
    """Load ``data.csv`` (or a dataset directory) and optional ground truth.

    ``truth_path`` points at ``truth_A.csv``; ``outliers.txt`` is read from the
    same directory when present. Given a directory, both are picked up
    automatically if they exist.
    """
    p = Path(data_path)
    if p.is_dir():
        if truth_path is None and (p / "truth_A.csv").exists():
            truth_path = p / "truth_A.csv"
        p = p / "data.csv"
    data = load_matrix(p)
    truth = None
    if truth_path is not None:
        tp = Path(truth_path)
        A = load_matrix(tp)
        outliers = np.zeros(0, dtype=int)
        idx_file = tp.parent / "outliers.txt"
        if idx_file.exists():
            text = idx_file.read_text().split()
            outliers = np.array([int(t) for t in text], dtype=int)
        truth = GroundTruth(A, outliers)
    return data, truth


@dataclass
class ExperimentConfig:
    """One algorithm over ``trials`` seeded runs.

    Either ``synth`` (regenerated per trial with ``seed = base_seed + i``) or
    ``data`` (a fixed matrix; the per-trial seed then only drives HR-PCA)
    must be set.
    """

    algorithm: str
    d: int = 1
    trials: int = 1
    base_seed: int = 0
    synth: Optional[SynthConfig] = None
    data: Optional[np.ndarray] = None
    truth: Optional[GroundTruth] = None
    lam: Optional[float] = None
    t_hat: Optional[int] = None
    max_iters: Optional[int] = None
    patience: int = 10
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ContractViolation(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.trials < 1:
            raise ContractViolation(f"trials must be >= 1, got {self.trials}")
        if (self.synth is None) == (self.data is None):
            raise ContractViolation("give exactly one of a synthetic config or a data matrix")


@dataclass
class TrialResult:
    trial: int
    seed: int
    m: int
    n: int
    d: int
    lam: Optional[float]
    sigma: Optional[float]
    mag: Optional[float]
    t_hat: int
    result: DhrResult

    @property
    def final_ev(self):
        return self.result.trace[-1].best_ev

    @property
    def total_wall_ms(self):
        return float(sum(r.wall_ms for r in self.result.trace))


def run_algorithm(algorithm, data, truth, d, t_hat, seed=0, max_iters=None, patience=10, kernel=None):
    if algorithm == "dhr":
        return run_dhr(data, DhrConfig(d=d, t_hat=t_hat, max_iters=max_iters, patience=patience), truth)
    if algorithm == "hr":
        return run_hr(data, HrConfig(d=d, t_hat=t_hat, max_removals=max_iters, seed=seed), truth)
    if algorithm == "pca":
        return run_pca(data, d, t_hat, truth)
    if algorithm == "kernel-dhr":
        cfg = DhrConfig(d=d, t_hat=t_hat, max_iters=max_iters, patience=patience)
        return run_kernel_dhr(data, kernel or KernelSpec(), cfg, truth)
    raise ContractViolation(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def run_trials(cfg: ExperimentConfig) -> list:
    cfg.validate()
    out = []
    for i in range(cfg.trials):
        seed = cfg.base_seed + i
        if cfg.synth is not None:
            sc = replace(cfg.synth, seed=seed)
            data, truth = generate(sc)
            lam, sigma, mag = sc.lam, sc.sigma, sc.mag
        else:
            data, truth = cfg.data, cfg.truth
            lam, sigma, mag = cfg.lam, None, None
        n, m = data.shape
        t_hat = cfg.t_hat if cfg.t_hat is not None else default_t_hat(n, lam)
        res = run_algorithm(
            cfg.algorithm, data, truth, cfg.d, t_hat, seed,
            cfg.max_iters, cfg.patience, cfg.kernel,
        )
        out.append(TrialResult(i, seed, m, n, cfg.d, lam, sigma, mag, t_hat, res))
    return out


def run_rows(trials, algorithm, timing=True):
    rows = []
    for tr in trials:
        last = len(tr.result.trace)
        for rec in tr.result.trace:
            rows.append([
                tr.trial, algorithm, tr.m, tr.n, tr.d, tr.lam, tr.sigma, tr.mag, tr.t_hat,
                rec.iteration, rec.opt, rec.ev, rec.best_ev, rec.nonzero,
                rec.wall_ms if timing else 0.0, tr.seed,
                tr.result.termination if rec.iteration == last else None,
            ])
    return rows


def mean_std(values):
    """Mean and sample standard deviation; std is None for a single value."""
    vals = [float(v) for v in values if v is not None]
    if not vals:
        return None, None
    std = statistics.stdev(vals) if len(vals) > 1 else None
    return statistics.fmean(vals), std


def summarize(trials) -> dict:
    ev = mean_std([t.final_ev for t in trials])
    itb = mean_std([t.result.iterations_to_best for t in trials])
    wall = mean_std([t.total_wall_ms for t in trials])
    return {
        "final_ev_mean": ev[0], "final_ev_std": ev[1],
        "iters_to_best_mean": itb[0], "iters_to_best_std": itb[1],
        "wall_ms_mean": wall[0], "wall_ms_std": wall[1],
    }


def sweep(base: ExperimentConfig, lambdas, algorithms=("dhr", "hr"), timing=True):
    """Run every algorithm at every outlier fraction; one aggregated row each."""
    if base.synth is None:
        raise ContractViolation("sweep needs a synthetic configuration")
    rows = []
    for lam in lambdas:
        if not 0.0 <= lam < 0.5:
            raise ContractViolation(f"lambda grid values must lie in [0, 0.5), got {lam}")
        sc = replace(base.synth, lam=lam)
        for alg in algorithms:
            cfg = replace(base, algorithm=alg, synth=sc, t_hat=base.t_hat)
            s = summarize(run_trials(cfg))
            rows.append([
                lam, base.synth.n - sc.n_authentic, alg, base.trials,
                s["iters_to_best_mean"], s["iters_to_best_std"],
                s["final_ev_mean"], s["final_ev_std"],
                s["wall_ms_mean"] if timing else 0.0,
            ])
    return rows


def write_csv(target, header, rows):
    """Write to a path or an open text stream; returns the text written."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if hasattr(target, "write"):
        target.write(text)
    else:
        p = Path(target)
        if p.parent != Path("."):
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return text


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
