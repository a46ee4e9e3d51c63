"""Numeric containers and fitted-model records."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    """Feature matrix and coefficient vector disagree in width."""


def _frozen_array(a, dtype=np.float64, fortran=False) -> np.ndarray:
    arr = np.asfortranarray(a, dtype=dtype) if fortran else np.ascontiguousarray(a, dtype=dtype)
    if arr.base is not None or arr is a:
        arr = arr.copy(order="F" if fortran else "C")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class EncodedDataset:
    """Dense design matrix (column-major) with response, names and row ids."""

    x: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"x must be 2-D, got shape {x.shape}")
        n, p = x.shape
        if n < 1 or p < 1:
            raise ValueError(f"dataset needs N >= 1 and p >= 1, got {x.shape}")
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if y.shape[0] != n:
            raise ValueError(f"y has {y.shape[0]} entries but x has {n} rows")
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite entries")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite entries")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != p:
            raise ValueError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != p:
            raise ValueError("feature names must be unique")
        ids = tuple(self.row_ids) if len(self.row_ids) else tuple(range(n))
        if len(ids) != n:
            raise ValueError(f"{len(ids)} row ids for {n} rows")
        object.__setattr__(self, "x", _frozen_array(x, fortran=True))
        object.__setattr__(self, "y", _frozen_array(y))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all((self.y == 0.0) | (self.y == 1.0)))

    def take(self, rows) -> "EncodedDataset":
        """Row subset (or multiset) in the given order."""
        rows = np.asarray(rows, dtype=np.intp)
        return EncodedDataset(
            self.x[rows], self.y[rows], self.feature_names, tuple(self.row_ids[i] for i in rows)
        )

    def with_y(self, y) -> "EncodedDataset":
        return EncodedDataset(self.x, y, self.feature_names, self.row_ids)


def _check_model(coefficients, feature_names, penalty, what):
    coef = np.asarray(coefficients, dtype=np.float64).reshape(-1)
    names = tuple(str(s) for s in feature_names)
    if coef.shape[0] != len(names):
        raise ValueError(f"{coef.shape[0]} coefficients for {len(names)} feature names")
    if not (penalty >= 0 and np.isfinite(penalty)):
        raise ValueError(f"{what} must be finite and >= 0, got {penalty}")
    if not np.all(np.isfinite(coef)):
        raise ValueError("coefficients must be finite")
    return _frozen_array(coef), names


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    alpha: float
    feature_names: tuple[str, ...]
    n_iterations: int = 0
    converged: bool = True
    objective_path: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        coef, names = _check_model(self.coefficients, self.feature_names, self.alpha, "alpha")
        if not np.isfinite(self.intercept):
            raise ValueError("intercept must be finite")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "feature_names", names)

    kind = "linear"

    @property
    def hyperparameter(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coefficients: np.ndarray
    lam: float
    feature_names: tuple[str, ...]
    n_outer_iterations: int = 0
    converged: bool = True
    objective_path: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        coef, names = _check_model(self.coefficients, self.feature_names, self.lam, "lambda")
        if not np.isfinite(self.intercept):
            raise ValueError("intercept must be finite")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "feature_names", names)

    kind = "logistic"

    @property
    def hyperparameter(self) -> float:
        return self.lam

    def negated(self) -> "LogisticModel":
        return LogisticModel(-self.intercept, -self.coefficients, self.lam, self.feature_names,
                             self.n_outer_iterations, self.converged)


@dataclass(frozen=True)
class WorkingSet:
    """IRLS working response ``z``, weights ``w`` and fitted probabilities."""

    z: np.ndarray
    w: np.ndarray
    p_hat: np.ndarray


def linear_predictor(intercept: float, coefficients: np.ndarray, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[1] != coefficients.shape[0]:
        raise DimensionError(
            f"x has {x.shape[1]} columns but the model has {coefficients.shape[0]} coefficients"
        )
    return intercept + x @ coefficients


def predict_linear(model: LinearModel, x) -> np.ndarray:
    return linear_predictor(model.intercept, model.coefficients, x)


def sigmoid(eta) -> np.ndarray:
    """Logistic function, evaluated without overflow for large ``|eta|``."""
    eta = np.asarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def predict_proba(model: LogisticModel, x) -> np.ndarray:
    """P(y=1 | x). Clipped to the open unit interval."""
    p = sigmoid(linear_predictor(model.intercept, model.coefficients, x))
    tiny = np.finfo(np.float64).tiny
    return np.clip(p, tiny, np.nextafter(1.0, 0.0))


# -- serialization -----------------------------------------------------------

def model_to_dict(model) -> dict:
    return {
        "kind": model.kind,
        "intercept": model.intercept,
        "coefficients": [float(c) for c in model.coefficients],
        "feature_names": list(model.feature_names),
        "hyperparameter": model.hyperparameter,
        "converged": bool(model.converged),
        "n_iterations": int(
            model.n_iterations if isinstance(model, LinearModel) else model.n_outer_iterations
        ),
    }


def model_from_dict(d: dict):
    try:
        kind = d["kind"]
        args = (float(d["intercept"]), np.asarray(d["coefficients"], dtype=np.float64),
                float(d["hyperparameter"]), d["feature_names"], int(d.get("n_iterations", 0)),
                bool(d.get("converged", True)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc
    if kind == "linear":
        return LinearModel(*args)
    if kind == "logistic":
        return LogisticModel(*args)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ValueError(f"corrupt model file {path}: expected a JSON object")
    return model_from_dict(d)
