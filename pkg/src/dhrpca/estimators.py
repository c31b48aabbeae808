"""Robust variance estimation, expressed variance and the asymptotic bound."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ContractViolation, DegenerateTruthError
from .numerics import SubspaceBasis, as_data

UNIT_TOL = 1e-8
EV_SLACK = 1e-9
KAPPA_GRID = np.logspace(-3.0, 3.0, 2000)


def ceil_count(x: float) -> int:
    """Ceiling that ignores float fuzz such as ``(1 - 0.3) * 100 = 70.00000000000001``."""
    return int(math.ceil(x - 1e-9))


@dataclass(frozen=True)
class GroundTruth:
    """Mixing matrix ``A`` (m x d_true) and the row indices of the outliers."""

    A: np.ndarray
    outlier_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        if A.ndim != 2 or A.shape[1] > A.shape[0]:
            raise ContractViolation(f"A must be m x d with d <= m, got {A.shape}")
        idx = np.unique(np.asarray(self.outlier_indices, dtype=int))
        if idx.size and idx[0] < 0:
            raise ContractViolation("outlier indices must be non-negative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "outlier_indices", idx)

    def outlier_mask(self, n: int) -> np.ndarray:
        if self.outlier_indices.size and self.outlier_indices[-1] >= n:
            raise ContractViolation(f"outlier index out of range for n={n}")
        mask = np.zeros(n, dtype=bool)
        mask[self.outlier_indices] = True
        return mask


@dataclass(frozen=True)
class EvScore:
    value: float
    numerator: float
    denominator: float

    def __float__(self):
        return self.value


def _check_unit(w):
    if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
        raise ContractViolation(f"direction must have unit norm, got {np.linalg.norm(w)!r}")


def _check_t_hat(t_hat, n):
    if not 0 <= t_hat <= n:
        raise ContractViolation(f"t_hat must satisfy 0 <= t_hat <= n={n}, got {t_hat}")


def trimmed_energy(proj, t_hat: int, n: int) -> float:
    """(1/n) * sum of the ``t_hat`` smallest squared entries of ``proj``.

    Ties are resolved by original position (stable sort); the sum itself does
    not depend on the tie order.
    """
    sq = np.square(proj)
    keep = np.argsort(sq, kind="stable")[:t_hat]
    return float(np.sum(sq[keep]) / n)


def rve(data, w, t_hat: int) -> float:
    """Trimmed variance along ``w``: drop the ``n - t_hat`` largest projections.

    Always evaluate this on the original observations, never on a reweighted
    copy.
    """
    y = as_data(data)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != y.shape[1]:
        raise ContractViolation(f"direction has length {w.shape[0]}, data has m={y.shape[1]}")
    _check_unit(w)
    _check_t_hat(t_hat, y.shape[0])
    return trimmed_energy(y @ w, t_hat, y.shape[0])


def basis_vectors(basis) -> np.ndarray:
    if isinstance(basis, SubspaceBasis):
        return basis.vectors
    v = np.asarray(basis, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def rve_sum(data, basis, t_hat: int) -> float:
    """Sum of :func:`rve` over the basis vectors, each trimmed independently."""
    y = as_data(data)
    W = basis_vectors(basis)
    if W.shape[0] != y.shape[1]:
        raise ContractViolation(f"basis has m={W.shape[0]}, data has m={y.shape[1]}")
    for j in range(W.shape[1]):
        _check_unit(W[:, j])
    _check_t_hat(t_hat, y.shape[0])
    return rve_sum_from_projections(y @ W, t_hat)


def rve_sum_from_projections(proj, t_hat: int) -> float:
    """``proj`` is the (n, d) matrix of projections of the original data."""
    n = proj.shape[0]
    return float(sum(trimmed_energy(proj[:, j], t_hat, n) for j in range(proj.shape[1])))


def expressed_variance(basis, truth: GroundTruth) -> EvScore:
    """Share of the signal energy ``tr(A A^T)`` captured by the basis span.

    The denominator is the sum of the ``d`` largest eigenvalues of ``A A^T``,
    where ``d`` is the number of basis vectors.
    """
    W = basis_vectors(basis)
    A = truth.A
    if W.shape[0] != A.shape[0]:
        raise ContractViolation(f"basis has m={W.shape[0]}, truth has m={A.shape[0]}")
    d = W.shape[1]
    # nonzero spectrum of A A^T equals that of the small A^T A
    spec = np.sort(np.linalg.eigvalsh(A.T @ A))[::-1]
    denom = float(np.sum(np.clip(spec[:d], 0.0, None)))
    if denom <= 0.0:
        raise DegenerateTruthError("mixing matrix is zero; expressed variance undefined")
    num = float(np.sum(np.square(A.T @ W)))
    return EvScore(num / denom, num, denom)


def gaussian_tail_weight(alpha):
    """Variance carried by the central ``alpha`` mass of a standard normal.

    With ``c = Phi^{-1}((1 + alpha)/2)`` this is ``alpha - 2 c phi(c)``.
    Accepts scalars or arrays.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0) or np.any(a > 1.0) or np.any(np.isnan(a)):
        raise ContractViolation("tail weight argument must lie in [0, 1]")
    c = ndtri((1.0 + a) / 2.0)
    with np.errstate(invalid="ignore"):
        out = a - 2.0 * c * np.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    out = np.where(a >= 1.0, 1.0, out)
    out = np.where(a <= 0.0, 0.0, out)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoundResult:
    """Value of the asymptotic E.V. lower bound and where it was attained.

    ``feasible`` is False when no grid point kept every tail-weight argument
    inside [0, 1]; ``value`` is then 0.
    """

    value: float
    kappa: float
    feasible: bool
    grid_size: int

    def __float__(self):
        return self.value


def bound_objective(kappas, lambda_star, t_ratio, tail=gaussian_tail_weight):
    """Evaluate the bracketed product for every ``kappa``; NaN where infeasible."""
    k = np.asarray(kappas, dtype=float)
    first_arg = 1.0 - lambda_star * (1.0 + k) / ((1.0 - lambda_star) * k)
    second_arg = t_ratio - lambda_star / (1.0 - lambda_star)
    out = np.full(k.shape, np.nan)
    if not 0.0 <= second_arg <= 1.0:
        return out
    denom = tail(t_ratio)
    if denom <= 0.0:
        return out
    second = tail(second_arg) / denom
    ok = (first_arg >= 0.0) & (first_arg <= 1.0)
    if np.any(ok):
        out[ok] = np.asarray(tail(first_arg[ok])) / (1.0 + k[ok]) * second
    return out


def asymptotic_bound(lambda_star, t_ratio, tail=gaussian_tail_weight, kappas=None) -> BoundResult:
    """Maximize the asymptotic expressed-variance lower bound over ``kappa``.

    Parameters
    ----------
    lambda_star : float
        Limiting outlier fraction, ``0 <= lambda_star < 0.5``.
    t_ratio : float
        ``t_hat / t``: trim count over the number of authentic samples, in (0, 1].
    tail : callable
        Tail-weight function on [0, 1]; must accept numpy arrays.
    kappas : array, optional
        Search grid; defaults to 2000 log-spaced points on [1e-3, 1e3].

    Notes
    -----
    At ``lambda_star == 0`` the objective is ``tail(1) / (1 + kappa)``, whose
    supremum over ``kappa > 0`` is reached in the limit ``kappa -> 0``; that
    limit is returned exactly (with ``kappa = 0``) instead of the grid value.
    """
    if not 0.0 <= lambda_star < 0.5:
        raise ContractViolation(f"lambda_star must be in [0, 0.5), got {lambda_star}")
    if not 0.0 < t_ratio <= 1.0:
        raise ContractViolation(f"t_ratio must be in (0, 1], got {t_ratio}")
    grid = KAPPA_GRID if kappas is None else np.asarray(kappas, dtype=float)
    if lambda_star == 0.0:
        return BoundResult(float(tail(1.0)), 0.0, True, grid.size)
    vals = bound_objective(grid, lambda_star, t_ratio, tail)
    if np.all(np.isnan(vals)):
        return BoundResult(0.0, float("nan"), False, grid.size)
    i = int(np.nanargmax(vals))
    return BoundResult(float(vals[i]), float(grid[i]), True, grid.size)


def s0_bound(lam: float, n: int, kappa: float) -> int:
    """Iteration count within which the good event is guaranteed to occur."""
    if kappa <= 0.0:
        raise ContractViolation(f"kappa must be positive, got {kappa}")
    if not 0.0 <= lam < 0.5:
        raise ContractViolation(f"lambda must be in [0, 0.5), got {lam}")
    return ceil_count(lam * n * (1.0 + kappa) / kappa)
