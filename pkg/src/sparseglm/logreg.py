"""L1-penalized logistic regression by iteratively reweighted LASSO.

Each outer iteration replaces the log-likelihood with its quadratic
expansion around the current estimate, which is a weighted least-squares
problem in the working response ``z`` with weights ``w``. That subproblem
is solved with :func:`sparseglm.lasso.fit_arrays` at ``alpha = lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lasso
from .data_model import EncodedDataset, LogisticModel, WorkingSet, sigmoid

DEFAULT_CLAMP = 1e-5
ASCENT_SLACK = 1e-9
MAX_HALVINGS = 10


class DegenerateLabelsError(ValueError):
    pass


@dataclass(frozen=True)
class LogRegConfig:
    lam: float
    max_outer: int = 100
    outer_tol: float = 1e-6
    inner_tol: float = 1e-8
    inner_max_sweeps: int = 10_000
    clamp: float = DEFAULT_CLAMP
    backend: str | None = None

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if not 0.0 < self.clamp < 0.5:
            raise ValueError("clamp must lie in (0, 0.5)")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be > 0")


def _check_binary(y):
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DegenerateLabelsError("labels must be 0/1")


def log_likelihood_arrays(x, y, intercept, coef) -> float:
    """(1/N) sum [y*eta - log(1 + exp(eta))], overflow-free."""
    eta = intercept + x @ coef
    return float(np.mean(y * eta - np.logaddexp(0.0, eta)))


def log_likelihood(ds: EncodedDataset, model: LogisticModel) -> float:
    _check_binary(ds.y)
    return log_likelihood_arrays(ds.x, ds.y, model.intercept, model.coefficients)


def penalized_arrays(x, y, intercept, coef, lam) -> float:
    return log_likelihood_arrays(x, y, intercept, coef) - lam * float(np.abs(coef).sum())


def penalized_log_likelihood(ds: EncodedDataset, model: LogisticModel) -> float:
    """The maximized objective: log-likelihood minus ``lam * ||beta||_1``."""
    _check_binary(ds.y)
    return penalized_arrays(ds.x, ds.y, model.intercept, model.coefficients, model.lam)


def working_set_arrays(x, y, intercept, coef, clamp=DEFAULT_CLAMP) -> WorkingSet:
    eta = intercept + x @ coef
    p = np.clip(sigmoid(eta), clamp, 1.0 - clamp)
    w = p * (1.0 - p)
    z = eta + (y - p) / w
    return WorkingSet(z, w, p)


def working_set(ds: EncodedDataset, model: LogisticModel, clamp=DEFAULT_CLAMP) -> WorkingSet:
    return working_set_arrays(ds.x, ds.y, model.intercept, model.coefficients, clamp)


def lambda_max(x, y) -> float:
    """Smallest lambda whose solution is the intercept-only model."""
    x = np.asfortranarray(x, dtype=np.float64)  # same memory layout as the solver, same rounding
    y = np.asarray(y, dtype=np.float64)
    return float(np.max(np.abs(x.T @ (y - y.mean()))) / y.shape[0])


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def fit_arrays(x, y, cfg: LogRegConfig, init=None):
    """Returns ``(intercept, coef, n_outer, converged, objective_path)``."""
    x = np.asfortranarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_binary(y)
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise DegenerateLabelsError("degenerate labels: only one class present")
    if cfg.lam >= lambda_max(x, y):
        # KKT: the intercept-only model is optimal
        b0, beta = logit(ybar), np.zeros(x.shape[1])
        return b0, beta, 0, True, [penalized_arrays(x, y, b0, beta, cfg.lam)]
    if init is None:
        b0, beta = logit(ybar), np.zeros(x.shape[1])
    else:
        b0, beta = float(init[0]), np.array(init[1], dtype=np.float64)
    f_old = penalized_arrays(x, y, b0, beta, cfg.lam)
    path = [f_old]
    converged = False
    it = 0
    for it in range(1, cfg.max_outer + 1):
        ws = working_set_arrays(x, y, b0, beta, cfg.clamp)
        inner = lasso.fit_arrays(x, ws.z, cfg.lam, weights=ws.w, init=(b0, beta),
                                 max_sweeps=cfg.inner_max_sweeps, tol=cfg.inner_tol,
                                 backend=cfg.backend)
        nb0, nbeta = inner.intercept, inner.coef
        f_new = penalized_arrays(x, y, nb0, nbeta, cfg.lam)
        if not math.isfinite(f_new):
            raise lasso.ConvergenceError(f"penalized objective is not finite at outer iteration {it}")
        halvings = 0
        while f_new < f_old - ASCENT_SLACK and halvings < MAX_HALVINGS:
            nb0 = 0.5 * (nb0 + b0)
            nbeta = 0.5 * (nbeta + beta)
            f_new = penalized_arrays(x, y, nb0, nbeta, cfg.lam)
            halvings += 1
        if f_new < f_old - ASCENT_SLACK:
            # no ascent along the IRLS direction; keep the previous iterate
            break
        change = max(float(np.max(np.abs(nbeta - beta), initial=0.0)), abs(nb0 - b0))
        b0, beta, f_old = nb0, nbeta, f_new
        path.append(f_new)
        if change <= cfg.outer_tol:
            converged = True
            break
    return b0, beta, it, converged, path


def fit(ds: EncodedDataset, cfg: LogRegConfig, init=None) -> LogisticModel:
    b0, beta, n_outer, converged, path = fit_arrays(ds.x, ds.y, cfg, init)
    return LogisticModel(b0, beta, cfg.lam, ds.feature_names, n_outer, converged, tuple(path))
