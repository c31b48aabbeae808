"""Deterministic high-dimensional robust PCA.

Each iteration runs PCA on the weighted second-moment matrix, keeps the
candidate basis if its trimmed variance (on the original points) beats the
best so far, then shrinks every active weight in proportion to how much of
the point's energy lies in the candidate subspace. The point with the largest
energy is always driven to weight zero, so the loop runs at most ``n`` times.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation, DegenerateStateError, NoInformativeDirection
from .estimators import (
    GroundTruth,
    ceil_count,
    expressed_variance,
    rve_sum_from_projections,
)
from .numerics import SubspaceBasis, as_data, as_weights, top_d_eigen, weighted_second_moment

ZERO_SNAP = 1e-15
ETA_SLACK = 1e-12

PLATEAU = "plateau"
TRIMMED = "trimmed"
NO_DIRECTION = "no_informative_direction"
MAX_ITERS = "max_iters"
EXHAUSTED = "weights_exhausted"
BUDGET = "removal_budget"
SINGLE_PASS = "single_pass"


@dataclass(frozen=True)
class DhrConfig:
    """Loop parameters.

    ``max_iters=None`` resolves to ``ceil((n - t_hat) * (1 + kappa) / kappa)``
    (at least 1). ``rel_tol`` is the relative Opt gain that counts as an
    improvement for the plateau rule.
    """

    d: int
    t_hat: int
    max_iters: Optional[int] = None
    patience: int = 10
    var_floor: float = 1e-12
    kappa: float = 2.0
    rel_tol: float = 1e-6

    def validate(self, n, m):
        if not 1 <= self.d <= m:
            raise ContractViolation(f"need 1 <= d <= m={m}, got d={self.d}")
        if not 1 <= self.t_hat <= n:
            raise ContractViolation(f"need 1 <= t_hat <= n={n}, got t_hat={self.t_hat}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ContractViolation(f"max_iters must be >= 1, got {self.max_iters}")
        if self.patience < 1:
            raise ContractViolation(f"patience must be >= 1, got {self.patience}")
        if not self.var_floor > 0.0:
            raise ContractViolation(f"var_floor must be positive, got {self.var_floor}")
        if not self.kappa > 0.0:
            raise ContractViolation(f"kappa must be positive, got {self.kappa}")

    def iteration_cap(self, n):
        if self.max_iters is not None:
            return self.max_iters
        return max(1, ceil_count((n - self.t_hat) * (1.0 + self.kappa) / self.kappa))


@dataclass
class TraceRecord:
    iteration: int
    opt: float
    candidate: float
    nonzero: int
    wall_ms: float
    eta: Optional[float] = None
    authentic_mass: Optional[float] = None
    outlier_mass: Optional[float] = None
    ev: Optional[float] = None
    best_ev: Optional[float] = None


@dataclass
class RunTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name):
        return [getattr(r, name) for r in self.records]


@dataclass
class DhrResult:
    """Output of a reweighting run.

    ``best_basis`` is a :class:`SubspaceBasis` for the linear algorithms and a
    kernel basis for the kernelized one. ``iterations_to_best`` is the index of
    the last iteration whose candidate raised Opt by more than the relative
    tolerance (0 if Opt never rose above zero).
    """

    best_basis: object
    best_opt: float
    trace: RunTrace
    final_weights: np.ndarray
    iterations_run: int
    termination: str
    iterations_to_best: int
    weight_history: Optional[list] = None


def point_variances(data, basis) -> np.ndarray:
    """Energy of each observation inside the span of ``basis``."""
    y = as_data(data)
    W = basis.vectors if isinstance(basis, SubspaceBasis) else np.asarray(basis, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != y.shape[1]:
        raise ContractViolation(f"basis has m={W.shape[0]}, data has m={y.shape[1]}")
    return np.sum(np.square(y @ W), axis=1)


def eta_step(variances, weights, var_floor: float = 1e-12) -> float:
    """Largest step that keeps every active weight non-negative: ``1 / max v_i``."""
    v = np.asarray(variances, dtype=float)
    a = np.asarray(weights, dtype=float)
    if v.shape != a.shape:
        raise ContractViolation(f"{v.shape[0]} variances for {a.shape[0]} weights")
    active = a != 0.0
    if not np.any(active):
        raise DegenerateStateError("all weights are zero")
    vmax = float(np.max(v[active]))
    if vmax <= var_floor:
        raise NoInformativeDirection(f"max active variance {vmax!r} <= floor {var_floor!r}")
    return 1.0 / vmax


def weight_update(weights, variances, eta: float) -> np.ndarray:
    """Return ``alpha_i * (1 - eta * v_i)`` for active points; zeros stay zero."""
    a = np.asarray(weights, dtype=float)
    v = np.asarray(variances, dtype=float)
    if v.shape != a.shape:
        raise ContractViolation(f"{v.shape[0]} variances for {a.shape[0]} weights")
    active = a != 0.0
    scaled = eta * v[active]
    if np.any(scaled > 1.0 + ETA_SLACK):
        raise ContractViolation("eta exceeds 1 / v_i for an active point")
    factor = 1.0 - scaled
    factor[factor <= ZERO_SNAP] = 0.0
    out = a.copy()
    out[active] = a[active] * factor
    return out


def _truth_observer(n, truth, score):
    """Per-iteration diagnostics against known ground truth."""
    if truth is None:
        return None
    mask = truth.outlier_mask(n)

    def observe(basis, weights, v):
        ev = score(basis) if score is not None else None
        return (
            float(np.sum(weights[~mask] * v[~mask])),
            float(np.sum(weights[mask] * v[mask])),
            ev,
        )

    return observe


def reweighting_loop(
    n: int,
    config: DhrConfig,
    fit: Callable[[np.ndarray], tuple],
    observe=None,
    weights=None,
    record_weights: bool = False,
) -> DhrResult:
    """Shared driver for the linear and kernel variants.

    ``fit(weights)`` must return ``(basis, proj)`` where ``proj`` is the
    ``(n, d)`` matrix of projections of the *original* observations onto the
    candidate directions. ``observe(basis, weights, v)`` returns
    ``(authentic_mass, outlier_mass, ev)`` or is None.
    """
    alpha = np.ones(n) if weights is None else as_weights(weights, n).copy()
    cap = config.iteration_cap(n)
    trace = RunTrace()
    history = [alpha.copy()] if record_weights else None

    best_basis, best_opt, best_ev = None, 0.0, None
    ref, last_improved, since = 0.0, 0, 0
    termination = MAX_ITERS
    s = 0
    while True:
        s += 1
        t0 = time.perf_counter()
        basis, proj = fit(alpha)
        cand = rve_sum_from_projections(proj, config.t_hat)
        v = np.sum(np.square(proj), axis=1)
        diag = observe(basis, alpha, v) if observe is not None else (None, None, None)

        if best_basis is None or cand > best_opt:
            best_basis, best_opt, best_ev = basis, cand, diag[2]
        if cand > ref * (1.0 + config.rel_tol):
            ref, last_improved, since = cand, s, 0
        else:
            since += 1

        nonzero = int(np.count_nonzero(alpha))
        rec = TraceRecord(s, best_opt, cand, nonzero, 0.0, None, *diag, best_ev)
        trace.records.append(rec)

        stop = None
        if since >= config.patience:
            stop = PLATEAU
        elif nonzero <= config.t_hat:
            stop = TRIMMED
        else:
            try:
                eta = eta_step(v, alpha, config.var_floor)
            except NoInformativeDirection:
                stop = NO_DIRECTION
            else:
                if s >= cap:
                    stop = MAX_ITERS
                else:
                    rec.eta = eta
                    alpha = weight_update(alpha, v, eta)
                    if history is not None:
                        history.append(alpha.copy())
                    if not np.any(alpha):
                        stop = EXHAUSTED
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        if stop is not None:
            termination = stop
            break

    return DhrResult(
        best_basis=best_basis,
        best_opt=best_opt,
        trace=trace,
        final_weights=alpha,
        iterations_run=s,
        termination=termination,
        iterations_to_best=last_improved,
        weight_history=history,
    )


def run_dhr(
    data,
    config: DhrConfig,
    truth: Optional[GroundTruth] = None,
    weights=None,
    record_weights: bool = False,
    eigensolver: str = "eigh",
) -> DhrResult:
    """Run deterministic robust PCA on ``data`` (rows are observations).

    Parameters
    ----------
    data : (n, m) array
    config : DhrConfig
    truth : GroundTruth, optional
        Enables per-iteration E.V. and authentic/outlier weighted-energy
        diagnostics in the trace. Never influences the iterates.
    weights : (n,) array, optional
        Initial weights; all ones by default.
    record_weights : bool
        Keep a copy of the weight vector after every update.
    eigensolver : {"eigh", "power"}
    """
    y = as_data(data)
    n, m = y.shape
    config.validate(n, m)

    def fit(alpha):
        basis = top_d_eigen(weighted_second_moment(y, alpha), config.d, method=eigensolver)
        return basis, y @ basis.vectors

    observe = _truth_observer(n, truth, lambda b: expressed_variance(b, truth).value)
    return reweighting_loop(n, config, fit, observe, weights, record_weights)


def run_pca(data, d: int, t_hat: int, truth: Optional[GroundTruth] = None) -> DhrResult:
    """Plain PCA on the unweighted second moment, packaged like a one-iteration run."""
    y = as_data(data)
    n, m = y.shape
    DhrConfig(d=d, t_hat=t_hat).validate(n, m)
    t0 = time.perf_counter()
    basis = top_d_eigen(weighted_second_moment(y, np.ones(n)), d)
    proj = y @ basis.vectors
    opt = rve_sum_from_projections(proj, t_hat)
    alpha = np.ones(n)
    rec = TraceRecord(1, opt, opt, n, 0.0)
    observe = _truth_observer(n, truth, lambda b: expressed_variance(b, truth).value)
    if observe is not None:
        z, o, ev = observe(basis, alpha, np.sum(np.square(proj), axis=1))
        rec.authentic_mass, rec.outlier_mass, rec.ev, rec.best_ev = z, o, ev, ev
    rec.wall_ms = (time.perf_counter() - t0) * 1e3
    return DhrResult(basis, opt, RunTrace([rec]), alpha, 1, SINGLE_PASS, 1 if opt > 0 else 0)
