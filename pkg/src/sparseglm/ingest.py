"""CSV ingestion, top-K one-hot encoding, scaling, splitting, synthetic data."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .data_model import EncodedDataset, sigmoid

NA = "<NA>"
KINDS = ("numeric", "categorical", "target_numeric", "target_binary", "ignore")
DEFAULT_TOP_K = 100


class EncodeError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    # target_binary only: labels mapped to 1 / to 0
    positive: tuple[str, ...] | None = None
    negative: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EncodeError(f"column {self.name!r}: unknown kind {self.kind!r}")
        for attr in ("positive", "negative"):
            val = getattr(self, attr)
            if val is not None:
                object.__setattr__(self, attr, tuple(str(v) for v in val))

    @property
    def is_target(self) -> bool:
        return self.kind.startswith("target_")


def parse_schema(entries) -> list[ColumnSpec]:
    specs = []
    for e in entries:
        if not isinstance(e, dict) or "name" not in e or "kind" not in e:
            raise EncodeError(f"schema entry needs 'name' and 'kind': {e!r}")
        specs.append(ColumnSpec(e["name"], e["kind"], e.get("positive"), e.get("negative")))
    targets = [s.name for s in specs if s.is_target]
    if len(targets) != 1:
        raise EncodeError(f"schema must have exactly one target column, found {targets}")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise EncodeError("schema column names must be unique")
    return specs


def load_schema(path) -> list[ColumnSpec]:
    return parse_schema(json.loads(Path(path).read_text(encoding="utf-8")))


def schema_to_list(schema) -> list[dict]:
    out = []
    for s in schema:
        d = {"name": s.name, "kind": s.kind}
        if s.positive is not None:
            d["positive"] = list(s.positive)
        if s.negative is not None:
            d["negative"] = list(s.negative)
        out.append(d)
    return out


@dataclass(frozen=True)
class RawTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> list[str]:
        try:
            idx = self.header.index(name)
        except ValueError:
            raise EncodeError(f"column {name!r} not found in table header") from None
        return [r[idx] for r in self.rows]


def read_csv(path) -> RawTable:
    """Read an RFC 4180 CSV file with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        return _to_table(list(csv.reader(fh)))


def parse_csv(text: str) -> RawTable:
    return _to_table(list(csv.reader(io.StringIO(text, newline=""))))


def _to_table(records) -> RawTable:
    if not records:
        raise EncodeError("CSV has no header row")
    header = tuple(records[0])
    width = len(header)
    rows = []
    for lineno, rec in enumerate(records[1:], start=2):
        if not rec:
            continue
        if len(rec) != width:
            raise EncodeError(f"line {lineno}: expected {width} fields, got {len(rec)}")
        rows.append(tuple(rec))
    return RawTable(header, tuple(rows))


@dataclass(frozen=True)
class FeatureVocabulary:
    """Top-K one-hot layout. Feature order follows schema order."""

    schema: tuple[ColumnSpec, ...]
    categories: dict = field(default_factory=dict)  # column -> tuple of retained categories
    k: int = DEFAULT_TOP_K

    @property
    def target(self) -> ColumnSpec:
        return next(s for s in self.schema if s.is_target)

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = []
        for s in self.schema:
            if s.kind == "numeric":
                names.append(s.name)
            elif s.kind == "categorical":
                names.extend(f"{s.name}={c}" for c in self.categories[s.name])
        return tuple(names)

    def column_index(self) -> dict[str, int | dict[str, int]]:
        """Numeric column -> index; categorical column -> {category: index}."""
        out, j = {}, 0
        for s in self.schema:
            if s.kind == "numeric":
                out[s.name] = j
                j += 1
            elif s.kind == "categorical":
                out[s.name] = {c: j + i for i, c in enumerate(self.categories[s.name])}
                j += len(self.categories[s.name])
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "schema": schema_to_list(self.schema),
            "categories": {name: list(cats) for name, cats in self.categories.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureVocabulary":
        return cls(tuple(parse_schema(d["schema"])),
                   {k: tuple(v) for k, v in d["categories"].items()}, int(d["k"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeatureVocabulary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _cell(v: str) -> str:
    return v if v != "" else NA


def top_k(values, k: int) -> tuple[str, ...]:
    """Most frequent ``k`` values; ties go to the lexicographically smaller."""
    counts = Counter(values)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(c for c, _ in ranked[:k])


def build_vocabulary(table: RawTable, schema, k: int = DEFAULT_TOP_K) -> FeatureVocabulary:
    if k < 1:
        raise EncodeError(f"k must be >= 1, got {k}")
    if not table.rows:
        raise EncodeError("cannot build a vocabulary from an empty table")
    schema = tuple(schema)
    for s in schema:
        if s.name not in table.header:
            raise EncodeError(f"schema column {s.name!r} not found in table header")
    cats = {
        s.name: top_k((_cell(v) for v in table.column(s.name)), k)
        for s in schema if s.kind == "categorical"
    }
    vocab = FeatureVocabulary(schema, cats, k)
    if not vocab.feature_names:
        raise EncodeError("schema yields no feature columns")
    return vocab


def _parse_float(v: str, row: int, col: str) -> float:
    try:
        out = float(v)
    except ValueError:
        raise EncodeError(f"row {row}, column {col!r}: cannot parse {v!r} as a number") from None
    if not math.isfinite(out):
        raise EncodeError(f"row {row}, column {col!r}: non-finite value {v!r}")
    return out


def _parse_label(v: str, row: int, spec: ColumnSpec) -> float:
    if spec.positive is not None:
        if v in spec.positive:
            return 1.0
        if spec.negative is None or v in spec.negative:
            return 0.0
        raise EncodeError(f"row {row}, column {spec.name!r}: label {v!r} in neither class list")
    out = _parse_float(v, row, spec.name)
    if out not in (0.0, 1.0):
        raise EncodeError(f"row {row}, column {spec.name!r}: binary target must be 0 or 1, got {v!r}")
    return out


def encode(table: RawTable, vocab: FeatureVocabulary, id_column: str | None = None) -> EncodedDataset:
    """One-hot encode ``table`` under ``vocab``. Rows keep their order."""
    target = vocab.target
    if target.name not in table.header:
        raise EncodeError(f"missing target column {target.name!r}")
    index = vocab.column_index()
    names = vocab.feature_names
    n = len(table.rows)
    if n == 0:
        raise EncodeError("table has no data rows")
    x = np.zeros((n, len(names)), dtype=np.float64, order="F")
    y = np.empty(n, dtype=np.float64)
    pos = {name: i for i, name in enumerate(table.header)}
    for s in vocab.schema:
        if s.kind == "ignore" or s.is_target:
            continue
        if s.name not in pos:
            raise EncodeError(f"column {s.name!r} not found in table header")
    tcol = pos[target.name]
    for i, rec in enumerate(table.rows):
        line = i + 2
        tv = rec[tcol]
        if tv == "":
            raise EncodeError(f"row {line}: missing target value in column {target.name!r}")
        if target.kind == "target_binary":
            y[i] = _parse_label(tv, line, target)
        else:
            y[i] = _parse_float(tv, line, target.name)
        for s in vocab.schema:
            if s.kind == "numeric":
                x[i, index[s.name]] = _parse_float(rec[pos[s.name]], line, s.name)
            elif s.kind == "categorical":
                j = index[s.name].get(_cell(rec[pos[s.name]]))
                if j is not None:
                    x[i, j] = 1.0
    ids = table.column(id_column) if id_column else tuple(range(n))
    return EncodedDataset(x, y, names, tuple(ids))


# -- encoded dataset files ---------------------------------------------------

def fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_encoded(ds: EncodedDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "y", *ds.feature_names])
        for rid, yi, xi in zip(ds.row_ids, ds.y, ds.x):
            w.writerow([rid, fmt(yi), *(fmt(v) for v in xi)])


def load_encoded(path) -> EncodedDataset:
    table = read_csv(Path(path))
    if table.header[:2] != ("row_id", "y"):
        raise EncodeError(f"{path}: not an encoded dataset (expected 'row_id,y,...' header)")
    if not table.rows:
        raise EncodeError(f"{path}: no rows")
    data = np.array([[float(v) for v in r[1:]] for r in table.rows], dtype=np.float64)
    ids = tuple(r[0] for r in table.rows)
    return EncodedDataset(data[:, 1:], data[:, 0], table.header[2:], ids)


# -- standardization ---------------------------------------------------------

@dataclass(frozen=True)
class Scaling:
    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray  # bool mask

    def coefficients_to_original(self, intercept: float, coef: np.ndarray):
        """Map (intercept, coef) fitted on standardized columns back to raw units."""
        raw = np.where(self.constant, 0.0, coef / np.where(self.constant, 1.0, self.scale))
        return float(intercept - raw @ self.mean), raw

    def coefficients_to_standard(self, intercept: float, coef: np.ndarray):
        std = np.where(self.constant, 0.0, coef * self.scale)
        return float(intercept + np.where(self.constant, 0.0, coef) @ self.mean), std

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = (x - self.mean) / np.where(self.constant, 1.0, self.scale)
        out[:, self.constant] = 0.0
        return np.asfortranarray(out)


def standardize(ds: EncodedDataset) -> tuple[EncodedDataset, Scaling]:
    """Center columns and scale to (1/N) sum x^2 = 1; constant columns become zero."""
    if ds.n < 2:
        raise ValueError("standardize needs at least 2 rows")
    mean = ds.x.mean(axis=0)
    constant = np.ptp(ds.x, axis=0) == 0.0
    mean = np.where(constant, ds.x[0], mean)
    centered = ds.x - mean
    scale = np.sqrt(np.mean(centered * centered, axis=0))
    scaling = Scaling(mean, np.where(constant, 0.0, scale), constant)
    return EncodedDataset(scaling.transform(ds.x), ds.y, ds.feature_names, ds.row_ids), scaling


# -- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class SplitIndices:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def split(ds_or_n, test_fraction: float = 0.2, seed: int = 0) -> SplitIndices:
    """Uniform random train/test partition; index arrays are sorted."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else ds_or_n.n
    n_test = round_half_up(test_fraction * n)
    if n_test < 1 or n_test >= n:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty part for N={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndices(np.sort(perm[n_test:]), np.sort(perm[:n_test]), seed)


# -- synthetic data ----------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    n: int
    p: int
    sparsity: int
    noise: float = 1.0
    imbalance: float = 0.5
    kind: str = "linear"
    intercept: float = 0.0
    signal: tuple[float, float] = (1.0, 2.0)  # |beta_j| range on the support
    coef: tuple[float, ...] | None = None  # explicit true coefficients

    def validate(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("synthetic spec needs n >= 1 and p >= 1")
        if not 0 <= self.sparsity <= self.p:
            raise ValueError(f"sparsity must be in [0, p], got {self.sparsity}")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.kind not in ("linear", "logistic"):
            raise ValueError(f"kind must be 'linear' or 'logistic', got {self.kind!r}")
        if self.kind == "logistic" and not 0.0 < self.imbalance < 1.0:
            raise ValueError("imbalance must lie in (0, 1) for logistic data")
        if self.coef is not None and len(self.coef) != self.p:
            raise ValueError("coef must have length p")


def _intercept_for_rate(eta: np.ndarray, rate: float) -> float:
    def gap(b0):
        return sigmoid(b0 + eta).mean() - rate
    lo, hi = -50.0, 50.0
    return brentq(gap, lo, hi, xtol=1e-12)


def generate_synthetic(spec: SynthSpec, seed: int) -> tuple[EncodedDataset, float, np.ndarray]:
    """Gaussian design with a sparse planted coefficient vector.

    Returns the dataset, the true intercept and the true coefficients. For
    logistic data the intercept is solved so the mean success probability
    equals ``spec.imbalance``.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((spec.n, spec.p))
    if spec.coef is not None:
        beta = np.asarray(spec.coef, dtype=np.float64)
    else:
        beta = np.zeros(spec.p)
        support = np.sort(rng.choice(spec.p, size=spec.sparsity, replace=False))
        lo, hi = spec.signal
        beta[support] = rng.uniform(lo, hi, spec.sparsity) * rng.choice([-1.0, 1.0], spec.sparsity)
    eta = x @ beta
    if spec.kind == "linear":
        b0 = spec.intercept
        y = b0 + eta + spec.noise * rng.standard_normal(spec.n)
    else:
        b0 = _intercept_for_rate(eta, spec.imbalance)
        y = (rng.random(spec.n) < sigmoid(b0 + eta)).astype(np.float64)
    names = tuple(f"f{j + 1}" for j in range(spec.p))
    return EncodedDataset(x, y, names), b0, beta
