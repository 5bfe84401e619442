"""
Gaussian kernels, Gram matrices and the dense linear algebra the estimators
are built on.

The kernel is ``k(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2))`` with a single
length-scale in raw feature units. Everything here is dense; problem sizes of a
few thousand points are the intended range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.spatial.distance import cdist, pdist

from .errors import DegenerateInputError, InputError, NumericError

KERNEL_FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family plus its length-scale."""

    bandwidth: float = 1.0
    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}")
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray
    source_points: np.ndarray
    config: KernelConfig

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def as_points(points, name="points") -> np.ndarray:
    """Coerce to a finite 2-D float array, promoting vectors to one column."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def kernel_eval(x, y, config: KernelConfig) -> float:
    """Evaluate the kernel between two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * config.bandwidth**2)))


def cross_gram(a, b, config: KernelConfig) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(a[i], b[j])."""
    a = as_points(a, "a")
    b = as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    d2 = cdist(a, b, "sqeuclidean")
    return np.exp(d2 * (-0.5 / config.bandwidth**2))


def gram_matrix(points, config: KernelConfig) -> GramMatrix:
    """Symmetric Gram matrix of a point set with itself."""
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise InputError("empty point set")
    return GramMatrix(cross_gram(pts, pts, config), pts, config)


def median_heuristic(points) -> float:
    """Median of pairwise Euclidean distances over distinct index pairs."""
    pts = as_points(points)
    if pts.shape[0] < 2:
        raise InputError("median heuristic needs at least two points")
    dists = pdist(pts)
    if not np.any(dists > 0):
        raise DegenerateInputError("all points are identical")
    return float(np.median(dists))


def standardize(points, reference=None):
    """Z-score columns, using ``reference`` for the location/scale if given.

    Constant columns are centred but left unscaled.
    """
    pts = as_points(points)
    ref = pts if reference is None else as_points(reference, "reference")
    mean = ref.mean(axis=0)
    scale = ref.std(axis=0)
    scale[scale == 0] = 1.0
    return (pts - mean) / scale


def default_rank_tol(singular_values, shape) -> float:
    if singular_values.size == 0:
        return 0.0
    return float(np.finfo(float).eps * max(shape) * np.max(singular_values))


def pseudo_inverse(M, rank_tol=None, symmetric=False, return_rank=False):
    """Moore-Penrose pseudoinverse with singular values below ``rank_tol`` zeroed.

    Parameters
    ----------
    M : array_like, shape (n, m)
    rank_tol : float, optional
        Absolute cut-off on singular values. Defaults to
        ``eps * max(n, m) * largest singular value``.
    symmetric : bool
        Declare ``M`` symmetric so the decomposition can use ``eigh``. For a
        symmetric matrix the absolute eigenvalues are its singular values, so
        the result is the same pseudoinverse at roughly a third of the cost.
    return_rank : bool
        Also return the number of singular values kept.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InputError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix contains non-finite entries")
    if rank_tol is not None and rank_tol < 0:
        raise InputError("rank_tol must be nonnegative")

    if symmetric:
        if M.shape[0] != M.shape[1]:
            raise InputError("symmetric pseudoinverse needs a square matrix")
        sym = 0.5 * (M + M.T)
        evals, evecs = np.linalg.eigh(sym)
        svals = np.abs(evals)
        tol = default_rank_tol(svals, M.shape) if rank_tol is None else rank_tol
        keep = svals > tol
        V = evecs[:, keep]
        pinv = (V / evals[keep]) @ V.T
    else:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        tol = default_rank_tol(s, M.shape) if rank_tol is None else rank_tol
        keep = s > tol
        pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    if return_rank:
        return pinv, int(np.count_nonzero(keep))
    return pinv


def solve_spd(M, B) -> np.ndarray:
    """Solve ``M X = B`` for symmetric positive-definite ``M`` via Cholesky.

    Raises
    ------
    NumericError
        If the factorization breaks down; ``.pivot`` holds the 0-based index of
        the first non-positive leading minor.
    """
    M = np.asarray(M, dtype=float)
    B = np.asarray(B, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    if B.shape[0] != M.shape[0]:
        raise InputError(f"right-hand side has {B.shape[0]} rows, expected {M.shape[0]}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(B))):
        raise InputError("non-finite entries in solve_spd inputs")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-10 * scale:
        raise InputError("matrix is not symmetric")

    c, info = lapack.dpotrf(M, lower=True, clean=True)
    if info > 0:
        raise NumericError(f"matrix is not positive definite at pivot {info - 1}", pivot=info - 1)
    if info < 0:
        raise NumericError(f"illegal argument {-info} passed to dpotrf")
    X, info = lapack.dpotrs(c, B, lower=True)
    if info != 0:
        raise NumericError(f"dpotrs failed with info={info}")
    return X[:, 0] if vector_rhs else X
