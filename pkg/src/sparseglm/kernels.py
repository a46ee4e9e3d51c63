"""Coordinate-descent sweep kernels.

Two implementations of the same sweep live here:

* ``_sweep_loops`` is written with scalar loops and is compiled with
  ``numba.njit`` when numba is importable.
* ``_sweep_numpy`` vectorizes over rows with numpy and is used when numba is
  missing or ``SPARSEGLM_DISABLE_NUMBA`` is set to a truthy value.

Both update ``beta`` and the residual vector ``r`` in place.
"""
from __future__ import annotations

import os
import warnings

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}
DISABLE_NUMBA = os.environ.get("SPARSEGLM_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    if not DISABLE_NUMBA:
        warnings.warn("numba not importable; using the numpy coordinate-descent kernel")

HAVE_NUMBA = numba is not None


def _sweep_loops(x, w, r, beta, col_sq, alpha, n):
    n_rows, n_cols = x.shape
    max_change = 0.0
    for j in range(n_cols):
        cj = col_sq[j]
        if cj == 0.0:
            continue
        old = beta[j]
        g = 0.0
        for i in range(n_rows):
            g += w[i] * x[i, j] * r[i]
        z = g / n + cj * old
        if z > alpha:
            new = (z - alpha) / cj
        elif z < -alpha:
            new = (z + alpha) / cj
        else:
            new = 0.0
        if not np.isfinite(new):
            return max_change, j
        delta = new - old
        if delta != 0.0:
            for i in range(n_rows):
                r[i] -= x[i, j] * delta
            beta[j] = new
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change, -1


def _sweep_numpy(x, w, r, beta, col_sq, alpha, n):
    max_change = 0.0
    for j in range(x.shape[1]):
        cj = col_sq[j]
        if cj == 0.0:
            continue
        xj = x[:, j]
        old = beta[j]
        z = np.dot(xj, w * r) / n + cj * old
        if z > alpha:
            new = (z - alpha) / cj
        elif z < -alpha:
            new = (z + alpha) / cj
        else:
            new = 0.0
        if not np.isfinite(new):
            return max_change, j
        delta = new - old
        if delta != 0.0:
            r -= xj * delta
            beta[j] = new
            max_change = max(max_change, abs(delta))
    return max_change, -1


sweep_numpy = _sweep_numpy
if HAVE_NUMBA:
    sweep_numba = numba.njit(cache=True, nogil=True)(_sweep_loops)
else:  # pragma: no cover
    sweep_numba = None

BACKENDS = {"numpy": sweep_numpy}
if sweep_numba is not None:
    BACKENDS["numba"] = sweep_numba

DEFAULT_BACKEND = "numba" if HAVE_NUMBA and not DISABLE_NUMBA else "numpy"


def get_sweep(backend: str | None = None):
    """Return the sweep function for ``backend`` (default chosen at import)."""
    name = DEFAULT_BACKEND if backend is None else backend
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None
