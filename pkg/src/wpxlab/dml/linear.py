"""Least squares and L1-penalized fitting used by the causal pipeline.

``lasso_fit`` minimizes (1/2n)*||y - X b||^2 + lam*||b||_1 on the raw scale.
Columns are rescaled to unit root-mean-square internally purely for
conditioning; the per-coordinate penalty is adjusted so the solved problem is
identical, and coefficients are reported on the original scale.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, EstimationError
from ..rng import stream

LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 10_000
LASSO_GRID_SPAN = 1e-4  # smallest grid point relative to lambda_max


def ols_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ordinary least squares with classical standard errors.

    Requires more rows than columns and a full-column-rank design; a
    rank-deficient X raises instead of silently pseudo-inverting.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"X must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if len(y) != n:
        raise DomainError(f"y length {len(y)} != {n} rows")
    if n <= p:
        raise EstimationError(f"need n > p, got n={n}, p={p}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite values in X or y")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise EstimationError(f"design matrix is rank deficient (rank {rank} < {p})")
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = rss / (n - p)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return beta, stderr


def _soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    beta_init: np.ndarray | None = None,
) -> np.ndarray:
    """Coordinate descent for the L1-penalized least squares objective.

    Sweeps until the largest coefficient change falls below ``LASSO_TOL`` or
    ``LASSO_MAX_SWEEPS`` is reached. ``beta_init`` (original scale) warm-starts
    path computations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"X must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if len(y) != n:
        raise DomainError(f"y length {len(y)} != {n} rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.isfinite(lam)):
        raise DomainError("non-finite values in lasso inputs")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")

    scale = np.linalg.norm(X, axis=0) / np.sqrt(n)
    live = scale > 0.0
    Xs = np.where(live, X / np.where(live, scale, 1.0), 0.0)
    penalty = np.where(live, lam / np.where(live, scale, 1.0), np.inf)

    b = np.zeros(p)
    if beta_init is not None:
        b = np.asarray(beta_init, dtype=float) * np.where(live, scale, 0.0)
    r = y - Xs @ b
    cols = [j for j in range(p) if live[j]]
    for _ in range(LASSO_MAX_SWEEPS):
        max_change = 0.0
        for j in cols:
            old = b[j]
            # unit-RMS columns make the curvature along each coordinate 1/n-normalized to 1
            rho = (Xs[:, j] @ r) / n + old
            new = _soft_threshold(rho, penalty[j])
            if new != old:
                r -= Xs[:, j] * (new - old)
                b[j] = new
            change = abs(new - old)
            if change > max_change:
                max_change = change
        if max_change < LASSO_TOL:
            break
    # snap float dust: a soft threshold hit at exact equality (lam == lam_max)
    # leaves ~1e-17 residue that must read as an exact zero
    snap = 1e-12 * max(1.0, float(np.abs(b).max(initial=0.0)))
    b[np.abs(b) < snap] = 0.0
    return np.where(live, b / np.where(live, scale, 1.0), 0.0)


def lasso_lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty that forces all coefficients to zero."""
    return float(np.max(np.abs(np.asarray(X).T @ np.asarray(y))) / len(y))


def lasso_cv_path(
    X: np.ndarray,
    y: np.ndarray,
    grid_points: int = 20,
    folds: int = 3,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Cross-validated penalty search over a log-spaced grid.

    Returns (grid, mean out-of-fold MSE per grid point, selected lambda,
    coefficients refit on all rows at the selected lambda). Ties in CV error
    resolve toward the larger penalty.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if folds < 2:
        raise DomainError(f"folds must be >= 2, got {folds}")
    if n < folds:
        raise EstimationError(f"need at least {folds} rows, got {n}")
    if float(np.var(y)) == 0.0:
        raise EstimationError("degenerate target: zero variance")
    lam_max = lasso_lambda_max(X, y)
    if lam_max <= 0.0:
        raise EstimationError("degenerate problem: all columns orthogonal to target")
    # descending grid so each fit warm-starts the next
    grid = np.geomspace(lam_max, LASSO_GRID_SPAN * lam_max, grid_points)

    perm = stream(seed, "lasso_cv_folds").permutation(n)
    fold_of = np.empty(n, dtype=np.intp)
    for f, chunk in enumerate(np.array_split(perm, folds)):
        fold_of[chunk] = f

    fold_mse = np.zeros((grid_points, folds))
    for f in range(folds):
        tr = fold_of != f
        te = ~tr
        beta = None
        for i, lam in enumerate(grid):
            beta = lasso_fit(X[tr], y[tr], lam, beta_init=beta)
            err = y[te] - X[te] @ beta
            fold_mse[i, f] = float(err @ err) / int(te.sum())
    mean_mse = fold_mse.mean(axis=1)
    best = 0
    for i in range(1, grid_points):
        if mean_mse[i] < mean_mse[best]:
            best = i
    lam_star = float(grid[best])
    beta = lasso_fit(X, y, lam_star)
    return grid, mean_mse, lam_star, beta


def lasso_cv(
    X: np.ndarray,
    y: np.ndarray,
    grid_points: int = 20,
    folds: int = 3,
    seed: int = 0,
) -> tuple[float, np.ndarray]:
    """Select the penalty by cross-validation and refit on all rows."""
    _, _, lam_star, beta = lasso_cv_path(X, y, grid_points, folds, seed)
    return lam_star, beta
