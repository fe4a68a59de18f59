"""Batch-means Monte Carlo standard errors."""

import numpy as np


def batch_means_se(x, n_batches: int | None = None) -> np.ndarray | float:
    """
    Monte Carlo standard error of the mean of a correlated sequence.

    The chain is cut into ``n_batches`` (default ``floor(sqrt(N))``)
    contiguous batches of equal size; trailing draws that do not fill a batch
    are dropped.

    Parameters
    ----------
    x : array_like
        Draws, shape ``(N,)`` or ``(N, k)``.
    n_batches : int, optional
        Number of batches.

    Returns
    -------
    float or ndarray
        Standard error per column.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    n = x.shape[0]
    a = int(np.floor(np.sqrt(n))) if n_batches is None else int(n_batches)
    if a < 2:
        raise ValueError("need at least two batches")
    b = n // a
    batches = x[: a * b].reshape(a, b, -1).mean(axis=1)
    se = np.sqrt(batches.var(axis=0, ddof=1) / a)
    return float(se[0]) if squeeze else se
