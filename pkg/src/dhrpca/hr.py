"""Randomized HR-PCA baseline: remove one point per iteration.

Same skeleton as the deterministic loop, but instead of shrinking all
weights it draws a single active point with probability proportional to its
energy in the candidate subspace and deletes it. Randomness comes from
numpy's PCG64 generator (``numpy.random.default_rng(seed)``).
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dhr import (
    BUDGET,
    NO_DIRECTION,
    TRIMMED,
    DhrResult,
    RunTrace,
    TraceRecord,
    _truth_observer,
)
from .errors import ContractViolation
from .estimators import GroundTruth, expressed_variance, rve_sum_from_projections
from .numerics import as_data, top_d_eigen, weighted_second_moment


@dataclass(frozen=True)
class HrConfig:
    """``max_removals=None`` resolves to the outlier budget ``n - t_hat``."""

    d: int
    t_hat: int
    max_removals: Optional[int] = None
    seed: int = 0
    rel_tol: float = 1e-6

    def validate(self, n, m):
        if not 1 <= self.d <= m:
            raise ContractViolation(f"need 1 <= d <= m={m}, got d={self.d}")
        if not 1 <= self.t_hat <= n:
            raise ContractViolation(f"need 1 <= t_hat <= n={n}, got t_hat={self.t_hat}")
        if self.max_removals is not None and not 0 <= self.max_removals <= n - 1:
            raise ContractViolation(f"max_removals must be in [0, n-1], got {self.max_removals}")

    def removal_budget(self, n):
        return n - self.t_hat if self.max_removals is None else self.max_removals


def sample_removal(variances, active, u: float) -> int:
    """Inverse-CDF draw of one active index with mass proportional to ``variances``.

    ``u`` is a single uniform draw on [0, 1). Returns -1 if the total mass is zero.
    """
    idx = np.flatnonzero(active)
    cum = np.cumsum(np.asarray(variances, dtype=float)[idx])
    total = cum[-1] if cum.size else 0.0
    if not total > 0.0:
        return -1
    k = int(np.searchsorted(cum, u * total, side="right"))
    return int(idx[min(k, idx.size - 1)])


def run_hr(data, config: HrConfig, truth: Optional[GroundTruth] = None) -> DhrResult:
    """Run HR-PCA; the trace has one record per PCA evaluation.

    The second moment is taken over active points and divided by the original
    ``n``, so Opt values are on the same scale as the deterministic algorithm.
    """
    y = as_data(data)
    n, m = y.shape
    config.validate(n, m)
    rng = np.random.default_rng(config.seed)
    budget = config.removal_budget(n)
    active = np.ones(n, dtype=bool)
    observe = _truth_observer(n, truth, lambda b: expressed_variance(b, truth).value)

    trace = RunTrace()
    best_basis, best_opt, best_ev = None, 0.0, None
    ref, last_improved = 0.0, 0
    removed = 0
    s = 0
    while True:
        s += 1
        t0 = time.perf_counter()
        alpha = active.astype(float)
        basis = top_d_eigen(weighted_second_moment(y, alpha), config.d)
        proj = y @ basis.vectors
        cand = rve_sum_from_projections(proj, config.t_hat)
        v = np.sum(np.square(proj), axis=1)
        diag = observe(basis, alpha, v) if observe is not None else (None, None, None)
        if best_basis is None or cand > best_opt:
            best_basis, best_opt, best_ev = basis, cand, diag[2]
        if cand > ref * (1.0 + config.rel_tol):
            ref, last_improved = cand, s
        nonzero = int(active.sum())
        rec = TraceRecord(s, best_opt, cand, nonzero, 0.0, None, *diag, best_ev)
        trace.records.append(rec)

        stop = None
        if removed >= budget:
            stop = BUDGET
        elif nonzero <= config.t_hat:
            stop = TRIMMED
        else:
            k = sample_removal(v, active, rng.random())
            if k < 0:
                stop = NO_DIRECTION
            else:
                active[k] = False
                removed += 1
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        if stop is not None:
            break

    return DhrResult(
        best_basis=best_basis,
        best_opt=best_opt,
        trace=trace,
        final_weights=active.astype(float),
        iterations_run=s,
        termination=stop,
        iterations_to_best=last_improved,
    )
