"""Synthetic contaminated data: a low-rank Gaussian signal plus outliers on a line.

Random numbers come from ``numpy.random.default_rng(seed)`` (PCG64). Draw
order is fixed: A, signals x, noise, outlier direction, outlier magnitudes,
row permutation. Output is bit-reproducible for a given seed and numpy build.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .estimators import GroundTruth, ceil_count
from .numerics import top_d_eigen


@dataclass(frozen=True)
class SynthConfig:
    m: int
    n: int
    d: int = 1
    sigma: float = 5.0
    mag: float = 10.0
    lam: float = 0.0
    seed: int = 0
    noise: float = 1.0

    def validate(self):
        if self.m < 1 or self.n < 1:
            raise ContractViolation(f"m and n must be >= 1, got m={self.m}, n={self.n}")
        if not 1 <= self.d <= self.m:
            raise ContractViolation(f"need 1 <= d <= m, got d={self.d}")
        if not 0.0 <= self.lam < 0.5:
            raise ContractViolation(f"lambda must be in [0, 0.5), got {self.lam}")
        if not self.sigma > 0.0:
            raise ContractViolation(f"sigma must be positive, got {self.sigma}")
        if not self.mag > 0.0:
            raise ContractViolation(f"mag must be positive, got {self.mag}")
        if self.noise < 0.0:
            raise ContractViolation(f"noise must be non-negative, got {self.noise}")

    @property
    def n_authentic(self):
        return ceil_count((1.0 - self.lam) * self.n)


def largest_singular_value(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if not np.any(M):
        raise ContractViolation("largest singular value of a zero matrix is not informative")
    gram = M.T @ M
    top = top_d_eigen(0.5 * (gram + gram.T), 1).eigenvalues[0]
    return float(np.sqrt(max(top, 0.0)))


def generate(config: SynthConfig):
    """Return ``(data, truth)``.

    Authentic rows are ``A x + noise`` with ``x ~ N(0, I_d)`` and
    ``noise ~ N(0, noise^2 I_m)``; ``A`` is Gaussian rescaled so its largest
    singular value equals ``sigma``. The remaining rows are ``u * r`` for one
    random unit direction ``r`` and ``u ~ U[-sigma*mag, sigma*mag]``.
    Rows are shuffled; ``truth.outlier_indices`` refer to shuffled positions.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    m, n, d = config.m, config.n, config.d
    t = config.n_authentic

    A = rng.standard_normal((m, d))
    A *= config.sigma / largest_singular_value(A)

    x = rng.standard_normal((t, d))
    noise = rng.standard_normal((t, m)) * config.noise
    authentic = x @ A.T + noise

    r = rng.standard_normal(m)
    r /= np.linalg.norm(r)
    bound = config.sigma * config.mag
    u = rng.uniform(-bound, bound, size=n - t)
    outliers = u[:, None] * r[None, :]

    perm = rng.permutation(n)
    rows = np.vstack([authentic, outliers])
    data = np.empty_like(rows)
    data[perm] = rows
    outlier_idx = np.sort(perm[t:])
    return data, GroundTruth(A, outlier_idx)
