"""Kernelized reweighting loop.

With ``D = diag(alpha)`` the feature-space weighted second moment
``(1/n) sum_i alpha_i phi(y_i) phi(y_i)^T`` shares its nonzero spectrum with
the n x n matrix ``(1/n) D^{1/2} K D^{1/2}``. If ``u`` is a unit eigenvector of
the latter with eigenvalue ``mu``, the feature-space direction is
``sum_j a_j phi(y_j)`` with ``a = D^{1/2} u / sqrt(n mu)``, which has unit norm
(``a^T K a = 1``). Projections of a point ``v`` are ``sum_j a_j k(y_j, v)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dhr import DhrConfig, DhrResult, _truth_observer, reweighting_loop
from .errors import ContractViolation, RankDeficiencyError
from .estimators import GroundTruth, expressed_variance
from .numerics import as_data, as_weights, top_d_eigen

KINDS = ("linear", "gaussian", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """``gaussian``: ``exp(-|x - y|^2 / (2 bandwidth^2))``;
    ``polynomial``: ``(<x, y> + offset)^degree``; ``linear``: ``<x, y>``."""

    kind: str = "linear"
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown kernel {self.kind!r}; expected one of {KINDS}")
        if self.kind == "gaussian" and not self.bandwidth > 0.0:
            raise ContractViolation(f"gaussian bandwidth must be positive, got {self.bandwidth}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ContractViolation(f"polynomial degree must be a positive integer, got {self.degree}")


@dataclass(frozen=True)
class KernelBasis:
    """Feature-space directions as coefficient vectors over the training points.

    ``coefficients`` is ``(n, d)``; column ``q`` already includes the scaling
    ``normalization[q] = 1 / sqrt(n * eigenvalues[q])``.
    """

    coefficients: np.ndarray
    eigenvalues: np.ndarray
    normalization: np.ndarray

    @property
    def d(self):
        return self.coefficients.shape[1]


def cross_gram(x, z, spec: KernelSpec) -> np.ndarray:
    """Kernel evaluations ``k(x_i, z_j)`` as an ``(len(x), len(z))`` array."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    inner = x @ z.T
    if spec.kind == "linear":
        return inner
    if spec.kind == "polynomial":
        return (inner + spec.offset) ** int(spec.degree)
    sq = np.sum(x * x, axis=1)[:, None] + np.sum(z * z, axis=1)[None, :] - 2.0 * inner
    return np.exp(-np.clip(sq, 0.0, None) / (2.0 * spec.bandwidth**2))


def gram(data, spec: KernelSpec) -> np.ndarray:
    y = as_data(data)
    K = cross_gram(y, y, spec)
    K = 0.5 * (K + K.T)
    if spec.kind == "gaussian":
        np.fill_diagonal(K, 1.0)
    return K


def center_gram(K) -> np.ndarray:
    """Double-centering ``(I - 1/n) K (I - 1/n)``."""
    K = np.asarray(K, dtype=float)
    col = K.mean(axis=0)
    Kc = K - col[None, :] - K.mean(axis=1)[:, None] + col.mean()
    return 0.5 * (Kc + Kc.T)


def weighted_kernel_pca(K, weights, d: int) -> KernelBasis:
    """Top-``d`` feature-space principal directions of the weighted second moment."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n):
        raise ContractViolation(f"gram matrix must be square, got {K.shape}")
    a = as_weights(weights, n)
    active = int(np.count_nonzero(a))
    if not 1 <= d <= active:
        raise RankDeficiencyError(f"requested d={d} with {active} active points")
    root = np.sqrt(a)
    surrogate = root[:, None] * K * root[None, :] / n
    eig = top_d_eigen(0.5 * (surrogate + surrogate.T), d)
    mu = eig.eigenvalues
    if not mu[-1] > 1e-12 * max(mu[0], 0.0):
        raise RankDeficiencyError(f"only {int(np.sum(mu > 1e-12 * max(mu[0], 0.0)))} positive eigenvalues, need {d}")
    scale = 1.0 / np.sqrt(n * mu)
    coeffs = root[:, None] * eig.vectors * scale[None, :]
    return KernelBasis(coeffs, mu, scale)


def kernel_project(basis: KernelBasis, k_cross) -> np.ndarray:
    """Project points given their kernel rows against the training set.

    ``k_cross`` has length ``n`` (one point) or shape ``(n, p)`` (p points);
    returns ``d`` values or a ``(d, p)`` array.
    """
    k = np.asarray(k_cross, dtype=float)
    if k.shape[0] != basis.coefficients.shape[0]:
        raise ContractViolation(f"expected {basis.coefficients.shape[0]} kernel values, got {k.shape[0]}")
    return basis.coefficients.T @ k


def run_kernel_dhr(
    data,
    spec: KernelSpec,
    config: DhrConfig,
    truth: Optional[GroundTruth] = None,
    center: bool = False,
    record_weights: bool = False,
) -> DhrResult:
    """Kernel version of :func:`dhrpca.dhr.run_dhr`.

    Uses the uncentered gram matrix by default so the linear kernel reproduces
    the linear algorithm; ``center=True`` double-centers it first. E.V. is
    tracked only for the uncentered linear kernel, where the feature space is
    the data space.
    """
    y = as_data(data)
    n, m = y.shape
    K = gram(y, spec)
    if center:
        K = center_gram(K)
    # feature-space dimension is not bounded by m for nonlinear kernels
    config.validate(n, m if spec.kind == "linear" else max(m, n))

    def fit(alpha):
        basis = weighted_kernel_pca(K, alpha, config.d)
        return basis, K @ basis.coefficients

    score = None
    if truth is not None and spec.kind == "linear" and not center:
        score = lambda b: expressed_variance(y.T @ b.coefficients, truth).value  # noqa: E731
    observe = _truth_observer(n, truth, score)
    return reweighting_loop(n, config, fit, observe, record_weights=record_weights)
