"""Signed feature-importance extraction."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .ingest import fmt

DEFAULT_TOP_N = 20


@dataclass(frozen=True)
class ImportanceReport:
    positive: tuple[tuple[str, float], ...]  # descending
    negative: tuple[tuple[str, float], ...]  # ascending (most negative first)
    model_kind: str
    hyperparameter: float

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "hyperparameter": self.hyperparameter,
            "positive": [{"feature": n, "coefficient": c} for n, c in self.positive],
            "negative": [{"feature": n, "coefficient": c} for n, c in self.negative],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sign", "rank", "feature", "coefficient"])
            for sign, items in (("positive", self.positive), ("negative", self.negative)):
                for rank, (name, c) in enumerate(items, start=1):
                    w.writerow([sign, rank, name, fmt(c)])


def importance(model, top_n: int = DEFAULT_TOP_N) -> ImportanceReport:
    """Largest positive and most negative coefficients (raw feature scale)."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    pairs = [(n, float(c)) for n, c in zip(model.feature_names, model.coefficients)]
    pos = sorted((p for p in pairs if p[1] > 0), key=lambda p: (-p[1], p[0]))
    neg = sorted((p for p in pairs if p[1] < 0), key=lambda p: (p[1], p[0]))
    return ImportanceReport(tuple(pos[:top_n]), tuple(neg[:top_n]), model.kind,
                            model.hyperparameter)
