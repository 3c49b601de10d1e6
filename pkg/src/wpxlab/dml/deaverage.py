"""Iterative removal of crossed fixed effects by alternating group demeaning.

Subtracting group means over one key, then the other, and repeating converges
to the residual of the joint projection onto both sets of group indicators,
i.e. the same transformation as regressing out a full dummy encoding, without
materializing dummies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

EARLY_STOP_TOL = 1e-9


@dataclass(frozen=True)
class DeaverageDiagnostics:
    """Convergence record: per-key max absolute residual group mean, and the
    iteration count actually run."""

    max_group_means: tuple[float, ...]
    iterations_run: int


def _group_codes(keys: np.ndarray) -> tuple[np.ndarray, int]:
    _, codes = np.unique(keys, return_inverse=True)
    return codes.astype(np.intp), int(codes.max()) + 1


def deaverage(
    values: np.ndarray,
    group_keys: list[np.ndarray],
    iterations: int,
) -> tuple[np.ndarray, DeaverageDiagnostics]:
    """Alternately demean ``values`` columns within each key's groups.

    ``values`` is (n, c); ``group_keys`` holds one length-n key array per
    grouping dimension (any dtype; values are grouped by equality). Runs
    ``iterations`` full passes, stopping early once every group mean is below
    ``EARLY_STOP_TOL`` in absolute value. Returns the transformed copy and
    convergence diagnostics.
    """
    if iterations < 1:
        raise DomainError(f"iterations must be >= 1, got {iterations}")
    if values.ndim != 2:
        values = np.asarray(values, dtype=float).reshape(len(values), -1)
    n = values.shape[0]
    if n == 0:
        raise DomainError("cannot de-average an empty dataset")
    if not group_keys:
        raise DomainError("need at least one group key")
    codes: list[tuple[np.ndarray, int]] = []
    for keys in group_keys:
        if len(keys) != n:
            raise DomainError(f"group key length {len(keys)} != {n} rows")
        codes.append(_group_codes(np.asarray(keys)))

    out = np.array(values, dtype=float, copy=True)
    counts = [np.bincount(c, minlength=g).astype(float) for c, g in codes]
    iterations_run = 0
    for _ in range(iterations):
        iterations_run += 1
        for (c, g), cnt in zip(codes, counts):
            for j in range(out.shape[1]):
                means = np.bincount(c, weights=out[:, j], minlength=g) / cnt
                out[:, j] -= means[c]
        if _max_group_mean(out, codes, counts) < EARLY_STOP_TOL:
            break
    maxima = tuple(
        float(np.max(np.abs(_group_sums(out, c, g) / cnt.reshape(-1, 1))))
        for (c, g), cnt in zip(codes, counts)
    )
    return out, DeaverageDiagnostics(max_group_means=maxima, iterations_run=iterations_run)


def _group_sums(values: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    sums = np.zeros((n_groups, values.shape[1]))
    for j in range(values.shape[1]):
        sums[:, j] = np.bincount(codes, weights=values[:, j], minlength=n_groups)
    return sums


def _max_group_mean(
    values: np.ndarray,
    codes: list[tuple[np.ndarray, int]],
    counts: list[np.ndarray],
) -> float:
    worst = 0.0
    for (c, g), cnt in zip(codes, counts):
        means = _group_sums(values, c, g) / cnt.reshape(-1, 1)
        worst = max(worst, float(np.max(np.abs(means))))
    return worst
