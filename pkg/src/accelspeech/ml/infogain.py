"""Mutual information between binned features and the class label."""

from __future__ import annotations

import numpy as np

from .data import Dataset


def entropy_bits(counts) -> float:
    c = np.asarray(counts, dtype=float)
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    p = c / c.sum()
    return float(-np.sum(p * np.log2(p)))


def equal_width_bins(col: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(col.min()), float(col.max())
    if hi <= lo:
        return np.zeros(len(col), dtype=np.int64)
    b = np.floor((col - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(b, 0, bins - 1)


def information_gain(col, y, bins: int = 10) -> float:
    """H(label) - H(label | binned feature), in bits; never negative."""
    y = np.asarray(y)
    b = equal_width_bins(np.asarray(col, dtype=float), bins)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((bins, yi.max() + 1))
    np.add.at(joint, (b, yi), 1)
    n = len(y)
    h_y = entropy_bits(joint.sum(axis=0))
    h_cond = sum(row.sum() / n * entropy_bits(row) for row in joint if row.sum() > 0)
    return max(0.0, h_y - h_cond)


def info_gain_ranking(data: Dataset, bins: int = 10) -> list[tuple[str, float]]:
    """Features by descending information gain; ties keep canonical order."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    y = data.y
    gains = [(name, information_gain(data.X[:, j], y, bins)) for j, name in enumerate(data.feature_names)]
    order = sorted(range(len(gains)), key=lambda j: (-gains[j][1], j))
    return [gains[j] for j in order]
