"""ROC / precision-recall curves and AUC."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .ingest import fmt


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # descending, starts at +inf and ends at -inf
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float
    auc_trapezoid: float


@dataclass(frozen=True)
class PrCurve:
    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray
    average_precision: float


def _validate(labels, scores):
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if labels.shape != scores.shape:
        raise ValueError(f"{labels.shape[0]} labels but {scores.shape[0]} scores")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0/1")
    if np.any(np.isnan(scores)):
        raise ValueError("scores contain NaN")
    return labels.astype(bool), scores


def auc_rank(labels, scores) -> float:
    """Mann-Whitney AUC with half credit for tied scores."""
    pos, scores = _validate(labels, scores)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _cumulative(pos, scores):
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    hits = pos[order]
    tp = np.cumsum(hits)
    fp = np.cumsum(~hits)
    # last index of every run of equal scores
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    return s[last], tp[last].astype(np.float64), fp[last].astype(np.float64)


def roc(labels, scores) -> RocCurve:
    pos, scores = _validate(labels, scores)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    thr, tp, fp = _cumulative(pos, scores)
    tpr = np.r_[0.0, tp / n_pos, 1.0]
    fpr = np.r_[0.0, fp / n_neg, 1.0]
    thresholds = np.r_[np.inf, thr, -np.inf]
    trap = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thresholds, tpr, fpr, auc_rank(pos, scores), trap)


def auc(labels, scores) -> float:
    return auc_rank(labels, scores)


def pr_curve(labels, scores) -> PrCurve:
    """One point per distinct threshold; AP is the step integral over recall."""
    pos, scores = _validate(labels, scores)
    n_pos = int(pos.sum())
    if n_pos == 0:
        raise ValueError("precision-recall needs at least one positive label")
    thr, tp, fp = _cumulative(pos, scores)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return PrCurve(thr, recall, precision, ap)


def write_roc_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, r in zip(curve.thresholds, curve.fpr, curve.tpr):
            w.writerow([fmt(t), fmt(f), fmt(r)])


def write_pr_csv(curve: PrCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "recall", "precision"])
        for t, r, p in zip(curve.thresholds, curve.recall, curve.precision):
            w.writerow([fmt(t), fmt(r), fmt(p)])
