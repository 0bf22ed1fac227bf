"""Small numeric helpers shared by the analysis modules."""

from __future__ import annotations

import os

import numpy as np


def weighted_mean_std(x: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Mean and std of the distribution with samples x and weights w.

    Weights are normalized internally. Negative entries are allowed (a
    floor-subtracted histogram is an unbiased signed measure), but the
    total weight and resulting variance must be positive or ValueError
    is raised.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    total = w.sum()
    if not total > 0:
        raise ValueError("total weight must be positive")
    mean = float((w * x).sum() / total)
    var = float((w * (x - mean) ** 2).sum() / total)
    if var <= 0:
        raise ValueError("variance is not positive")
    return mean, float(np.sqrt(var))


def windowed_std(x: np.ndarray, w: np.ndarray, half_window: float) -> float:
    """Std of (x, w) restricted to |x| <= half_window.

    Used for spectra whose mathematical second moment diverges (Lorentzian
    tails): any physical scan integrates over a finite window, and the std
    quoted for such a spectrum only means something together with that window.
    """
    x = np.asarray(x, dtype=float)
    keep = np.abs(x) <= half_window
    if not np.any(keep):
        raise ValueError("window excludes every sample")
    _, std = weighted_mean_std(x[keep], np.asarray(w, dtype=float)[keep])
    return std


def thread_count() -> int:
    """Worker cap from BIPHOTON_LAB_THREADS (default 1, minimum 1)."""
    raw = os.environ.get("BIPHOTON_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
