"""Class rebalancing and the sampling-frequency sweep.

The sampling frequency ``gamma`` moves the minority-class share linearly from
its original value (``gamma = 0``) to one half (``gamma = 1``).
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data_model import EncodedDataset
from .ingest import fmt, round_half_up, split
from .metrics import auc

SCHEMES = ("original", "oversample_minority", "undersample_majority")
DEFAULT_LAMBDAS = (1e-4, 0.1, 1.0, 100.0)
DEFAULT_GAMMAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class SamplingConfig:
    scheme: str = "original"
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


def target_share(minority_share: float, gamma: float) -> float:
    return minority_share + gamma * (0.5 - minority_share)


def resample_indices(y, cfg: SamplingConfig, rng=None) -> np.ndarray:
    """Row indices of the rebalanced sample (may repeat rows when oversampling)."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    n_pos = int(np.count_nonzero(y == 1.0))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("resampling needs both classes present")
    rows = np.arange(n)
    if cfg.scheme == "original" or cfg.gamma == 0.0 or n_pos == n_neg:
        return rows
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    minority_label = 1.0 if n_pos < n_neg else 0.0
    minority = rows[y == minority_label]
    majority = rows[y != minority_label]
    n_min, n_maj = minority.size, majority.size
    share = target_share(n_min / n, cfg.gamma)
    if cfg.scheme == "oversample_minority":
        extra = max(0, round_half_up((share * n - n_min) / (1.0 - share)))
        draws = rng.choice(minority, size=extra, replace=True)
        return np.concatenate([rows, draws])
    keep = min(n_maj, max(1, round_half_up(n_min * (1.0 - share) / share)))
    chosen = rng.choice(majority, size=keep, replace=False)
    return np.sort(np.concatenate([minority, chosen]))


def resample(ds: EncodedDataset, cfg: SamplingConfig, rng=None) -> EncodedDataset:
    """Rebalanced copy of ``ds``; returned unchanged for ``original`` or ``gamma=0``."""
    if not ds.is_binary():
        raise ValueError("resampling needs a 0/1 target")
    idx = resample_indices(ds.y, cfg, rng)
    if idx.size == ds.n and np.array_equal(idx, np.arange(ds.n)):
        return ds
    return ds.take(idx)


@dataclass(frozen=True)
class SweepRow:
    lam: float
    gamma: float
    scheme: str
    auc: float


@dataclass(frozen=True)
class SamplingSweepReport:
    rows: tuple[SweepRow, ...]
    seed: int
    test_fraction: float

    def series(self, lam: float, scheme: str) -> list[tuple[float, float]]:
        return [(r.gamma, r.auc) for r in self.rows if r.lam == lam and r.scheme == scheme]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lambda", "gamma", "scheme", "auc"])
            for r in self.rows:
                w.writerow([fmt(r.lam), fmt(r.gamma), r.scheme, fmt(r.auc)])


def sweep(ds: EncodedDataset, lambda_set=DEFAULT_LAMBDAS, gamma_grid=DEFAULT_GAMMAS,
          schemes=SCHEMES, seed: int = 0, test_fraction: float = 0.2,
          standardize: bool = True, n_jobs: int = 1) -> SamplingSweepReport:
    """Out-of-sample AUC for every (lambda, gamma, scheme) cell.

    One train/test split is drawn from ``seed``; only the training part is
    resampled. Each cell uses its own RNG stream, so cells are independent.
    """
    from .model_select import fit_logistic  # local: model_select imports this module

    lambda_set = [float(v) for v in lambda_set]
    gamma_grid = [float(v) for v in gamma_grid]
    if not lambda_set or not gamma_grid or not schemes:
        raise ValueError("lambda set, gamma grid and schemes must be non-empty")
    for g in gamma_grid:
        SamplingConfig("original", g)
    for s in schemes:
        SamplingConfig(s)
    if not ds.is_binary():
        raise ValueError("sweep needs a 0/1 target")
    parts = split(ds, test_fraction, seed)
    train, test = ds.take(parts.train_rows), ds.take(parts.test_rows)
    if test.y.min() == test.y.max():
        raise ValueError("test split holds a single class; AUC undefined")

    cells = [(li, gi, si) for li in range(len(lambda_set))
             for gi in range(len(gamma_grid)) for si in range(len(schemes))]

    def run(cell):
        li, gi, si = cell
        lam, gamma, scheme = lambda_set[li], gamma_grid[gi], schemes[si]
        rng = np.random.default_rng([seed, 7, li, gi, si])
        try:
            sample = resample(train, SamplingConfig(scheme, gamma, seed), rng)
            model = fit_logistic(sample, lam, standardize=standardize)
        except Exception as exc:
            raise RuntimeError(f"sweep cell lambda={lam}, gamma={gamma}, scheme={scheme}: {exc}") from exc
        scores = test.x @ model.coefficients + model.intercept
        return SweepRow(lam, gamma, scheme, auc(test.y, scores))

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    return SamplingSweepReport(tuple(rows), seed, test_fraction)
