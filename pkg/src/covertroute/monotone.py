"""Weighted isotonic regression (pool-adjacent-violators) and the
two-axis monotone fit used for detector calibration tables."""

from __future__ import annotations

import numpy as np


def pav_nonincreasing(y, weights=None) -> np.ndarray:
    """L2 projection of y onto the non-increasing cone (weighted PAV)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    # pool on the reversed sequence so the standard non-decreasing PAV applies
    vals = list(y[::-1])
    wts = list(w[::-1])
    # blocks of (value, weight, count)
    blocks: list[list[float]] = []
    for v, ww in zip(vals, wts):
        blocks.append([v, ww, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v1, w1, c1 = blocks[-2]
            v2, w2, c2 = blocks[-1]
            merged = [(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2]
            blocks[-2:] = [merged]
    out = np.empty_like(y)
    i = 0
    for v, _, c in blocks:
        out[i : i + c] = v
        i += c
    return out[::-1]


def fit_bimonotone_nonincreasing(matrix, weights=None, max_iter: int = 200,
                                 tol: float = 1e-12) -> np.ndarray:
    """Fit a matrix non-increasing along both axes by alternating PAV sweeps.

    Alternating projections onto the two (convex) isotonic cones converge to
    a point satisfying both constraints; iteration stops once neither sweep
    moves anything by more than tol.
    """
    m = np.asarray(matrix, dtype=float).copy()
    w = np.ones_like(m) if weights is None else np.asarray(weights, dtype=float)
    for _ in range(max_iter):
        delta = 0.0
        for i in range(m.shape[0]):
            new = pav_nonincreasing(m[i, :], w[i, :])
            delta = max(delta, float(np.max(np.abs(new - m[i, :]))))
            m[i, :] = new
        for j in range(m.shape[1]):
            new = pav_nonincreasing(m[:, j], w[:, j])
            delta = max(delta, float(np.max(np.abs(new - m[:, j]))))
            m[:, j] = new
        if delta <= tol:
            break
    # squeeze out any residual float dust so monotonicity checks are exact
    m = np.minimum.accumulate(m, axis=0)
    m = np.minimum.accumulate(m, axis=1)
    return m
