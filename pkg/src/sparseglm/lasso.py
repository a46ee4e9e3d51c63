"""L1-penalized least squares by cyclic coordinate descent.

Minimizes ``(1/2N) sum_i w_i (y_i - b0 - x_i.b)^2 + alpha * ||b||_1`` with the
intercept left unpenalized. Each coordinate is set to
``S((1/N) sum_i w_i x_ij r_ij, alpha) / c_j`` where ``r_ij`` is the partial
residual and ``c_j = (1/N) sum_i w_i x_ij^2``; for unit-norm columns ``c_j = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .data_model import EncodedDataset, LinearModel


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LassoConfig:
    alpha: float
    max_sweeps: int = 10_000
    tol: float = 1e-7
    weights: np.ndarray | None = None
    track_objective: bool = False
    backend: str | None = None

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


def soft_threshold(z, gamma):
    """sign(z) * max(|z| - gamma, 0); works elementwise on arrays."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be >= 0")
    if np.ndim(z) == 0 and np.ndim(gamma) == 0:
        z = float(z)
        if z > gamma:
            return z - gamma
        if z < -gamma:
            return z + gamma
        return 0.0
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


def _weights(weights, n):
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n:
        raise ValueError(f"{w.shape[0]} weights for {n} rows")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if w.sum() <= 0:
        raise ValueError("weights sum to zero")
    return w


def objective_arrays(x, y, intercept, coef, alpha, weights=None) -> float:
    w = _weights(weights, y.shape[0])
    r = y - intercept - x @ coef
    return float(0.5 * np.dot(w, r * r) / y.shape[0] + alpha * np.abs(coef).sum())


def objective(ds: EncodedDataset, model: LinearModel, weights=None) -> float:
    return objective_arrays(ds.x, ds.y, model.intercept, model.coefficients, model.alpha, weights)


def alpha_max(x, y, weights=None) -> float:
    """Smallest alpha at which every coefficient is zero."""
    x = np.asfortranarray(x, dtype=np.float64)  # same memory layout as the solver, same rounding
    y = np.asarray(y, dtype=np.float64)
    w = _weights(weights, y.shape[0])
    ybar = np.dot(w, y) / w.sum()
    return float(np.max(np.abs(x.T @ (w * (y - ybar)))) / y.shape[0])


@dataclass
class FitResult:
    intercept: float
    coef: np.ndarray
    n_sweeps: int
    converged: bool
    objective_path: list


def fit_arrays(x, y, alpha, *, weights=None, init=None, max_sweeps=10_000, tol=1e-7,
               track_objective=False, backend=None) -> FitResult:
    """Coordinate descent on raw arrays. ``x`` should be Fortran-ordered float64."""
    x = np.asfortranarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    w = _weights(weights, n)
    wsum = w.sum()
    sweep = kernels.get_sweep(backend)
    with np.errstate(over="ignore"):
        col_sq = (w @ (x * x)) / n
    bad_cols = np.flatnonzero(~np.isfinite(col_sq))
    if bad_cols.size:
        raise ConvergenceError(f"column {bad_cols[0]} has a non-finite squared norm")
    with np.errstate(over="ignore", invalid="ignore"):
        null = p == 0 or alpha >= alpha_max(x, y, w)
    if null:
        # KKT: the intercept-only model is optimal; skip the sweeps so the
        # zero coefficients are exact rather than rounding-level residue
        b0 = float(np.mean(y)) if weights is None else float(np.dot(w, y) / wsum)
        beta = np.zeros(p)
        path = [objective_arrays(x, y, b0, beta, alpha, w)] if track_objective else []
        return FitResult(b0, beta, 0, True, path)
    if init is None:
        b0, beta = 0.0, np.zeros(p)
    else:
        b0, beta = float(init[0]), np.array(init[1], dtype=np.float64)
        beta[col_sq == 0.0] = 0.0
    r = y - b0 - x @ beta
    path = [objective_arrays(x, y, b0, beta, alpha, w)] if track_objective else []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        d0 = np.dot(w, r) / wsum
        b0 += d0
        r -= d0
        change, bad = sweep(x, w, r, beta, col_sq, alpha, float(n))
        if bad >= 0 or not np.isfinite(b0):
            where = f"coordinate {bad}" if bad >= 0 else "intercept"
            raise ConvergenceError(f"non-finite value at sweep {sweeps}, {where}")
        if track_objective:
            path.append(objective_arrays(x, y, b0, beta, alpha, w))
        if max(change, abs(d0)) <= tol:
            converged = True
            break
    return FitResult(float(b0), beta, sweeps, converged, path)


def fit(ds: EncodedDataset, cfg: LassoConfig, init=None) -> LinearModel:
    """Fit a LASSO model; ``init`` is an optional warm start ``(b0, beta)``."""
    res = fit_arrays(ds.x, ds.y, cfg.alpha, weights=cfg.weights, init=init,
                     max_sweeps=cfg.max_sweeps, tol=cfg.tol,
                     track_objective=cfg.track_objective, backend=cfg.backend)
    return LinearModel(res.intercept, res.coef, cfg.alpha, ds.feature_names,
                       res.n_sweeps, res.converged, tuple(res.objective_path))


def kkt_residual_arrays(x, y, intercept, coef, alpha, weights=None) -> float:
    w = _weights(weights, y.shape[0])
    r = y - intercept - x @ coef
    g = x.T @ (w * r) / y.shape[0]
    active = coef != 0
    viol = np.where(active, np.abs(g - alpha * np.sign(coef)), np.maximum(np.abs(g) - alpha, 0.0))
    return float(viol.max()) if viol.size else 0.0


def kkt_residual(ds: EncodedDataset, model: LinearModel, weights=None) -> float:
    """Largest violation of the subgradient optimality conditions."""
    return kkt_residual_arrays(ds.x, ds.y, model.intercept, model.coefficients, model.alpha, weights)
