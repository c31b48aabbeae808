"""Weighted second moments and top-d symmetric eigendecomposition.

Observations are rows of an ``(n, m)`` float array. Weights are a length-``n``
array with entries in ``[0, 1]``. Neither is wrapped in a custom class; the
helpers :func:`as_data` and :func:`as_weights` validate and coerce.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractViolation, DegenerateStateError

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class SubspaceBasis:
    """``d`` orthonormal directions in R^m, stored as the columns of ``vectors``.

    ``eigenvalues`` are the matching eigenvalues of the matrix the basis was
    extracted from, in non-increasing order.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def m(self):
        return self.vectors.shape[0]

    def projector(self):
        return self.vectors @ self.vectors.T


def as_data(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ContractViolation(f"data must be 2-D (n, m), got shape {y.shape}")
    if y.shape[0] < 1 or y.shape[1] < 1:
        raise ContractViolation(f"data must have n >= 1 and m >= 1, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ContractViolation("data contains non-finite entries")
    return y


def as_weights(alphas, n: int) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    if a.shape != (n,):
        raise ContractViolation(f"expected {n} weights, got shape {a.shape}")
    if np.any(a < 0.0) or np.any(a > 1.0) or not np.all(np.isfinite(a)):
        raise ContractViolation("weights must lie in [0, 1]")
    return a


def weighted_second_moment(data, weights) -> np.ndarray:
    """Return ``(1/n) * sum_i alpha_i y_i y_i^T``.

    The data is *not* centered: the signal model is zero-mean and the
    reweighting acts on raw second moments.

    Raises
    ------
    ContractViolation
        If the number of weights differs from the number of rows.
    DegenerateStateError
        If every weight is zero.
    """
    y = as_data(data)
    n = y.shape[0]
    a = as_weights(weights, n)
    if not np.any(a > 0.0):
        raise DegenerateStateError("all weights are zero")
    sigma = (y.T * a) @ y / n
    # the product is symmetric in exact arithmetic; remove roundoff asymmetry
    return 0.5 * (sigma + sigma.T)


def _check_symmetric(sigma):
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {s.shape}")
    scale = np.linalg.norm(s) + 1.0
    if np.linalg.norm(s - s.T) > SYMMETRY_RTOL * scale:
        raise ContractViolation("matrix is not symmetric within tolerance")
    return s


def _fix_signs(vectors):
    # largest-magnitude entry of each column made positive, for reproducibility
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def top_d_eigen(sigma, d: int, method: str = "eigh") -> SubspaceBasis:
    """Top-``d`` eigenpairs of a symmetric positive semidefinite matrix.

    Parameters
    ----------
    sigma : (m, m) array
        Symmetric matrix. Asymmetry beyond ``1e-10 * (||sigma||_F + 1)`` is
        rejected.
    d : int
        Number of leading eigenpairs, ``1 <= d <= m``.
    method : {"eigh", "power"}
        ``"eigh"`` uses a dense symmetric eigendecomposition; ``"power"`` runs
        deflated power iteration through :func:`power_top_d`.

    Returns
    -------
    SubspaceBasis
        Eigenvectors as columns, each with its largest-magnitude entry
        positive; eigenvalues non-increasing.
    """
    s = _check_symmetric(sigma)
    m = s.shape[0]
    if not 1 <= d <= m:
        raise ContractViolation(f"need 1 <= d <= m, got d={d}, m={m}")
    s = 0.5 * (s + s.T)
    if method == "eigh":
        vals, vecs = np.linalg.eigh(s)
        order = np.argsort(vals, kind="stable")[::-1][:d]
        vals = vals[order]
        vecs = vecs[:, order]
    elif method == "power":
        return power_top_d(lambda v: s @ v, m, d)
    else:
        raise ContractViolation(f"unknown eigensolver {method!r}")
    return SubspaceBasis(_fix_signs(vecs), vals)


def power_top_d(
    matvec: Callable[[np.ndarray], np.ndarray],
    m: int,
    d: int,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> SubspaceBasis:
    """Deflated power iteration driven only by a multiply callback.

    Each vector starts from the first standard basis vector whose image is
    not annihilated after deflation, and iterates until the angle between
    successive iterates drops below ``tol`` or ``max_iter`` (default ``10*m``)
    is reached. Suitable for PSD operators; convergence speed depends on the
    eigengap.
    """
    if not 1 <= d <= m:
        raise ContractViolation(f"need 1 <= d <= m, got d={d}, m={m}")
    if max_iter is None:
        max_iter = 10 * m
    found = np.zeros((m, 0))
    vals = []

    def deflate(v):
        return v - found @ (found.T @ v)

    for _ in range(d):
        v = None
        for k in range(m):
            e = np.zeros(m)
            e[k] = 1.0
            e = deflate(e)
            w = deflate(matvec(e))
            if np.linalg.norm(w) > 1e-14 and np.linalg.norm(e) > 1e-14:
                v = w / np.linalg.norm(w)
                break
        if v is None:
            # operator vanishes on the remaining complement: any unit vector works
            e = deflate(np.eye(m)[:, len(vals)] + 1e-3 * np.arange(1, m + 1))
            v = e / np.linalg.norm(e)
            found = np.column_stack([found, v])
            vals.append(0.0)
            continue
        for _ in range(max_iter):
            w = deflate(matvec(v))
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break
            w = w / norm
            # chord length between unit vectors ~ angle, without cos roundoff
            step = np.linalg.norm(w - np.copysign(1.0, v @ w) * v)
            v = w
            if step < tol:
                break
        found = np.column_stack([found, v])
        vals.append(float(v @ matvec(v)))

    vals = np.asarray(vals)
    order = np.argsort(vals, kind="stable")[::-1]
    return SubspaceBasis(_fix_signs(found[:, order]), vals[order])
