"""Cross-validation, grid search and R^2 metrics."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lasso, logreg
from .data_model import EncodedDataset, LinearModel, LogisticModel
from .ingest import fmt, standardize as standardize_ds
from .metrics import auc
from .resample import SCHEMES, SamplingConfig, resample

ALPHA_GRID = tuple(10.0 ** e for e in range(-8, 2))
LAMBDA_GRID = (1e-4, 1e-2, 1e-1, 1.0, 10.0, 100.0)
DEFAULT_FOLDS = 10


class UndefinedMetricError(ValueError):
    pass


# -- fitting with optional standardization and warm-started paths ------------

def _path(ds: EncodedDataset, values_desc, standardize: bool, solve):
    """Fit along ``values_desc`` with warm starts; coefficients in raw units."""
    if standardize:
        work, scaling = standardize_ds(ds)
    else:
        work, scaling = ds, None
    init = None
    out = []
    for v in values_desc:
        b0, beta, iters, conv = solve(work, v, init)
        init = (b0, beta)
        if scaling is not None:
            b0, beta = scaling.coefficients_to_original(b0, beta)
        out.append((b0, beta, iters, conv))
    return out


def _solve_linear(ds, alpha, init, tol=1e-7):
    res = lasso.fit_arrays(ds.x, ds.y, alpha, init=init, tol=tol)
    return res.intercept, res.coef, res.n_sweeps, res.converged


def _solve_logistic(ds, lam, init):
    b0, beta, it, conv, _ = logreg.fit_arrays(ds.x, ds.y, logreg.LogRegConfig(lam), init)
    return b0, beta, it, conv


def linear_path(ds, alphas, standardize=True) -> list[LinearModel]:
    """LASSO fits for each alpha (solved largest first, returned in input order)."""
    order = sorted(range(len(alphas)), key=lambda i: -alphas[i])
    fits = _path(ds, [alphas[i] for i in order], standardize, _solve_linear)
    models = [None] * len(alphas)
    for i, (b0, beta, it, conv) in zip(order, fits):
        models[i] = LinearModel(b0, beta, alphas[i], ds.feature_names, it, conv)
    return models


def logistic_path(ds, lams, standardize=True) -> list[LogisticModel]:
    order = sorted(range(len(lams)), key=lambda i: -lams[i])
    fits = _path(ds, [lams[i] for i in order], standardize, _solve_logistic)
    models = [None] * len(lams)
    for i, (b0, beta, it, conv) in zip(order, fits):
        models[i] = LogisticModel(b0, beta, lams[i], ds.feature_names, it, conv)
    return models


def fit_linear(ds, alpha, standardize=True) -> LinearModel:
    return linear_path(ds, [alpha], standardize)[0]


def fit_logistic(ds, lam, standardize=True) -> LogisticModel:
    return logistic_path(ds, [lam], standardize)[0]


# -- folds -------------------------------------------------------------------

def kfold_indices(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into ``k`` folds whose sizes differ by <= 1."""
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def stratified_kfold_indices(y, k: int, seed: int = 0) -> list[np.ndarray]:
    """Folds with each class spread as evenly as possible."""
    y = np.asarray(y)
    n = y.shape[0]
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    dealt = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    fold_of = np.empty(n, dtype=np.intp)
    fold_of[dealt] = np.arange(n) % k
    return [np.flatnonzero(fold_of == f) for f in range(k)]


def _complement(n, fold):
    mask = np.ones(n, dtype=bool)
    mask[fold] = False
    return np.flatnonzero(mask)


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class CvReport:
    grid: tuple[float, ...]
    mean_score: tuple[float, ...]
    std_error: tuple[float, ...]
    selected: float
    score_kind: str  # "mse" or "auc"
    k: int
    seed: int
    fold_scores: tuple[tuple[float, ...], ...] = ()  # [grid][fold]
    scheme_scores: tuple = ()  # auc only: [grid][fold][scheme]
    schemes: tuple[str, ...] = ()
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = {
            "score_kind": self.score_kind,
            "k": self.k,
            "seed": self.seed,
            "selected": self.selected,
            "grid": list(self.grid),
            "mean_score": list(self.mean_score),
            "std_error": list(self.std_error),
            "fold_scores": [list(r) for r in self.fold_scores],
        }
        if self.scheme_scores:
            d["schemes"] = list(self.schemes)
            d["scheme_scores"] = [[list(f) for f in g] for g in self.scheme_scores]
        if self.notes:
            d["notes"] = list(self.notes)
        return d

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def write_csv(self, path) -> None:
        name = "alpha" if self.score_kind == "mse" else "lambda"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([name, "mean_score", "std_error"])
            for g, m, s in zip(self.grid, self.mean_score, self.std_error):
                w.writerow([fmt(g), fmt(m), fmt(s)])

    def write_scheme_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "fold", "scheme", "auc"])
            for g, per_fold in zip(self.grid, self.scheme_scores):
                for f, per_scheme in enumerate(per_fold):
                    for s, a in zip(self.schemes, per_scheme):
                        w.writerow([fmt(g), f, s, fmt(a)])


def _select(grid, scores, maximize):
    """Best grid value; exact ties go to the larger penalty."""
    best = None
    for i in sorted(range(len(grid)), key=lambda i: -grid[i]):
        s = scores[i]
        if best is None or (s > scores[best] if maximize else s < scores[best]):
            best = i
    return grid[best]


def _std_error(per_fold: np.ndarray) -> np.ndarray:
    k = per_fold.shape[1]
    return per_fold.std(axis=1, ddof=1) / np.sqrt(k)


def _check_grid(grid):
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ValueError("grid must be non-empty")
    if any(not (g >= 0 and np.isfinite(g)) for g in grid):
        raise ValueError("grid values must be finite and >= 0")
    return grid


def _map(fn, items, n_jobs):
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def cv_lasso(ds: EncodedDataset, grid=ALPHA_GRID, k: int = DEFAULT_FOLDS, seed: int = 0,
             standardize: bool = True, n_jobs: int = 1) -> CvReport:
    """k-fold CV of held-out squared error for each alpha."""
    grid = _check_grid(grid)
    folds = kfold_indices(ds.n, k, seed)

    def run(f):
        test = folds[f]
        train = ds.take(_complement(ds.n, test))
        try:
            models = linear_path(train, grid, standardize)
        except Exception as exc:
            raise RuntimeError(f"fold {f}: LASSO fit failed: {exc}") from exc
        xt, yt = ds.x[test], ds.y[test]
        return [np.sum((yt - m.intercept - xt @ m.coefficients) ** 2) for m in models]

    sse = np.array(_map(run, range(k), n_jobs)).T  # [grid, fold]
    sizes = np.array([f.size for f in folds], dtype=np.float64)
    mean = sse.sum(axis=1) / ds.n
    fold_mse = sse / sizes
    report_se = _std_error(fold_mse)
    return CvReport(grid, tuple(map(float, mean)), tuple(map(float, report_se)),
                    _select(grid, mean, maximize=False), "mse", k, seed,
                    tuple(tuple(map(float, r)) for r in fold_mse))


def cv_logreg(ds: EncodedDataset, grid=LAMBDA_GRID, k: int = DEFAULT_FOLDS, seed: int = 0,
              schemes=SCHEMES, standardize: bool = True, n_jobs: int = 1) -> CvReport:
    """Score each lambda by held-out AUC averaged over the sampling schemes and folds.

    For every fold, the training part is rebalanced three ways (minority
    oversampled to 50/50, majority undersampled to 50/50, untouched); a model
    is fit on each and scored on the untouched held-out fold.
    """
    grid = _check_grid(grid)
    if not ds.is_binary():
        raise ValueError("cv_logreg needs a 0/1 target")
    n_pos = int(ds.y.sum())
    if min(n_pos, ds.n - n_pos) < k:
        raise ValueError(f"each class needs at least k={k} rows for stratified folds")
    folds = stratified_kfold_indices(ds.y, k, seed)
    order = sorted(range(len(grid)), key=lambda i: -grid[i])
    rank = {gi: r for r, gi in enumerate(order)}

    def run(f):
        test = folds[f]
        train = ds.take(_complement(ds.n, test))
        out = np.empty((len(grid), len(schemes)))
        for si, scheme in enumerate(schemes):
            init = None
            for gi in order:
                rng = np.random.default_rng([seed, 11, f, rank[gi], si])
                try:
                    sample = resample(train, SamplingConfig(scheme, 1.0, seed), rng)
                    if sample.y.min() == sample.y.max():
                        raise ValueError("degenerate fold labels after resampling")
                    work, scaling = standardize_ds(sample) if standardize else (sample, None)
                    b0, beta, _, _ = _solve_logistic(work, grid[gi], init)
                except Exception as exc:
                    raise RuntimeError(f"fold {f}, lambda={grid[gi]}, scheme={scheme}: {exc}") from exc
                init = (b0, beta)
                if scaling is not None:
                    b0, beta = scaling.coefficients_to_original(b0, beta)
                out[gi, si] = auc(ds.y[test], ds.x[test] @ beta + b0)
        return out

    per_fold = np.stack(_map(run, range(k), n_jobs), axis=1)  # [grid, fold, scheme]
    fold_mean = per_fold.mean(axis=2)
    mean = fold_mean.mean(axis=1)
    notes = ("folds stratified by class so every training and held-out fold has both classes",
             "resampling applied to training folds only; AUC on the untouched held-out fold")
    return CvReport(grid, tuple(map(float, mean)), tuple(map(float, _std_error(fold_mean))),
                    _select(grid, mean, maximize=True), "auc", k, seed,
                    tuple(tuple(map(float, r)) for r in fold_mean),
                    tuple(tuple(tuple(map(float, s)) for s in f) for f in per_fold),
                    tuple(schemes), notes)


# -- R^2 ---------------------------------------------------------------------

def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise ValueError("y and y_hat lengths differ")
    if y.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    return y, y_hat


def r2_out_of_sample(y, y_hat) -> float:
    """Squared sample correlation between predictions and outcomes."""
    y, y_hat = _pair(y, y_hat)
    dy = y - y.mean()
    dh = y_hat - y_hat.mean()
    syy, shh = np.dot(dy, dy), np.dot(dh, dh)
    if syy == 0.0 or shh == 0.0:
        raise UndefinedMetricError("undefined correlation: constant y or y_hat")
    return float(np.dot(dh, dy) ** 2 / (shh * syy))


def r2_in_sample(y, y_hat) -> float:
    """1 - SSE / SST."""
    y, y_hat = _pair(y, y_hat)
    dy = y - y.mean()
    sst = np.dot(dy, dy)
    if sst == 0.0:
        raise UndefinedMetricError("undefined R^2: constant y")
    res = y - y_hat
    return float(1.0 - np.dot(res, res) / sst)
