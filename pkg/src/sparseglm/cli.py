"""Command-line front end.

Subcommands: encode, cv-fit, importance, evaluate, sweep, synth. Any flag may
also come from a JSON file given with ``--config`` (keys are the long flag
names); flags on the command line win. Exit codes: 0 ok, 1 runtime error,
2 usage error. Errors are printed as one line prefixed ``sparseglm: error[...]``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ingest, metrics, model_select, report, resample
from .data_model import LinearModel, load_model, save_model
from .ingest import DEFAULT_TOP_K

PROG = "sparseglm"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [t.strip() for t in str(text).split(",") if t.strip()]
    try:
        return [float(t) for t in parts]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


DEFAULTS = {
    "encode": {"top_k": DEFAULT_TOP_K, "vocab": None, "id_column": None},
    "cv-fit": {"folds": model_select.DEFAULT_FOLDS, "test_fraction": 0.2, "standardize": True,
               "grid": None, "n_jobs": 1},
    "importance": {"top_n": report.DEFAULT_TOP_N},
    "evaluate": {},
    "sweep": {"lambdas": list(resample.DEFAULT_LAMBDAS), "gammas": list(resample.DEFAULT_GAMMAS),
              "test_fraction": 0.2, "standardize": True, "n_jobs": 1},
    "synth": {"noise": 1.0, "imbalance": 0.5, "intercept": 0.0, "sparsity": None},
}
REQUIRED = {
    "encode": ("csv", "schema", "out"),
    "cv-fit": ("task", "data", "seed", "out"),
    "importance": ("model", "out"),
    "evaluate": ("model", "data", "out"),
    "sweep": ("data", "seed", "out"),
    "synth": ("kind", "n", "p", "seed", "out"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Sparse GLMs by coordinate descent.",
                argument_default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, help_):
        s = sub.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        s.add_argument("--config", help="JSON file supplying any of the flags")
        return s

    s = cmd("encode", "one-hot encode a CSV with a top-K vocabulary")
    s.add_argument("--csv")
    s.add_argument("--schema", help="JSON list of {name, kind}")
    s.add_argument("--top-k", type=int, help=f"categories kept per column (default {DEFAULT_TOP_K})")
    s.add_argument("--vocab", help="reuse an existing vocabulary.json instead of building one")
    s.add_argument("--id-column")
    s.add_argument("--out", help="output directory")

    s = cmd("cv-fit", "split, tune by k-fold CV, refit and evaluate")
    s.add_argument("--task", choices=["lasso", "logreg"])
    s.add_argument("--data", help="encoded.csv")
    s.add_argument("--grid", help="comma-separated penalty grid")
    s.add_argument("--folds", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--test-fraction", type=float)
    s.add_argument("--standardize", action=argparse.BooleanOptionalAction)
    s.add_argument("--n-jobs", type=int)
    s.add_argument("--out")

    s = cmd("importance", "rank the most positive and most negative coefficients")
    s.add_argument("--model")
    s.add_argument("--top-n", type=int)
    s.add_argument("--out")

    s = cmd("evaluate", "score a saved model on an encoded dataset")
    s.add_argument("--model")
    s.add_argument("--data")
    s.add_argument("--out")

    s = cmd("sweep", "AUC against sampling frequency for several lambdas")
    s.add_argument("--data")
    s.add_argument("--lambdas")
    s.add_argument("--gammas")
    s.add_argument("--seed", type=int)
    s.add_argument("--test-fraction", type=float)
    s.add_argument("--standardize", action=argparse.BooleanOptionalAction)
    s.add_argument("--n-jobs", type=int)
    s.add_argument("--out")

    s = cmd("synth", "write a synthetic dataset, schema and true coefficients")
    s.add_argument("--kind", choices=["linear", "logistic"])
    s.add_argument("--n", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--sparsity", type=int)
    s.add_argument("--noise", type=float)
    s.add_argument("--imbalance", type=float)
    s.add_argument("--intercept", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    return p


def resolve(argv) -> tuple[str, dict]:
    """Parse ``argv`` and merge defaults < config file < command line."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command", None)
    if command is None:
        raise UsageError("a subcommand is required: " + ", ".join(DEFAULTS))
    merged = dict(DEFAULTS[command])
    cfg_path = ns.pop("config", None)
    if cfg_path is not None:
        try:
            cfg = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        allowed = set(DEFAULTS[command]) | set(REQUIRED[command]) | _optional_keys(command)
        for key, val in cfg.items():
            dest = key.lstrip("-").replace("-", "_")
            if dest not in allowed:
                raise UsageError(f"config key {key!r} is not a flag of {command}")
            merged[dest] = val
    merged.update(ns)
    missing = [k for k in REQUIRED[command] if merged.get(k) is None]
    if missing:
        raise UsageError(f"{command}: missing required " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return command, merged


def _optional_keys(command):
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest for a in sub.choices[command]._actions if a.dest not in ("help", "config")}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _outdir(opts) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands --------------------------------------------------------------------

def cmd_encode(opts) -> dict:
    if int(opts["top_k"]) < 1:
        raise UsageError("--top-k must be >= 1")
    table = ingest.read_csv(opts["csv"])
    schema = ingest.load_schema(opts["schema"])
    if opts["vocab"]:
        vocab = ingest.FeatureVocabulary.load(opts["vocab"])
    else:
        vocab = ingest.build_vocabulary(table, schema, int(opts["top_k"]))
    ds = ingest.encode(table, vocab, opts["id_column"])
    out = _outdir(opts)
    vocab.save(out / "vocabulary.json")
    ingest.save_encoded(ds, out / "encoded.csv")
    return {"rows": ds.n, "features": ds.p}


def cmd_cv_fit(opts) -> dict:
    task = opts["task"]
    folds = int(opts["folds"])
    if folds < 2:
        raise UsageError("--folds must be >= 2")
    frac = float(opts["test_fraction"])
    if not 0 < frac < 1:
        raise UsageError("--test-fraction must lie in (0, 1)")
    default_grid = model_select.ALPHA_GRID if task == "lasso" else model_select.LAMBDA_GRID
    grid = _floats(opts["grid"]) if opts["grid"] is not None else list(default_grid)
    if not grid:
        raise UsageError("--grid is empty")
    seed = int(opts["seed"])
    std = bool(opts["standardize"])
    n_jobs = int(opts["n_jobs"])
    ds = ingest.load_encoded(opts["data"])
    parts = ingest.split(ds, frac, seed)
    train, test = ds.take(parts.train_rows), ds.take(parts.test_rows)
    out = _outdir(opts)
    if task == "lasso":
        rep = model_select.cv_lasso(train, grid, folds, seed, std, n_jobs)
        model = model_select.fit_linear(train, rep.selected, std)
        pred_tr = train.x @ model.coefficients + model.intercept
        pred_te = test.x @ model.coefficients + model.intercept
        evaluation = {
            "task": task,
            "selected": rep.selected,
            "r2_in_sample": model_select.r2_in_sample(train.y, pred_tr),
            "r2_out_of_sample": model_select.r2_out_of_sample(test.y, pred_te),
            "test_mse": float(np.mean((test.y - pred_te) ** 2)),
        }
    else:
        if not ds.is_binary():
            raise ValueError("logreg needs a 0/1 target")
        rep = model_select.cv_logreg(train, grid, folds, seed, standardize=std, n_jobs=n_jobs)
        model = model_select.fit_logistic(train, rep.selected, std)
        eta_tr = train.x @ model.coefficients + model.intercept
        eta_te = test.x @ model.coefficients + model.intercept
        evaluation = {
            "task": task,
            "selected": rep.selected,
            "auc_in_sample": metrics.auc(train.y, eta_tr),
            "auc_out_of_sample": metrics.auc(test.y, eta_te),
        }
        rep.write_scheme_csv(out / "cv_schemes.csv")
        metrics.write_roc_csv(metrics.roc(test.y, eta_te), out / "roc.csv")
        metrics.write_pr_csv(metrics.pr_curve(test.y, eta_te), out / "pr.csv")
    evaluation.update({"n_train": train.n, "n_test": test.n, "folds": folds, "seed": seed,
                       "test_fraction": frac, "standardize": std})
    save_model(model, out / "model.json")
    rep.write_json(out / "cv_report.json")
    rep.write_csv(out / "cv_report.csv")
    _write_json(out / "evaluation.json", evaluation)
    return evaluation


def cmd_importance(opts) -> dict:
    top_n = int(opts["top_n"])
    if top_n < 1:
        raise UsageError("--top-n must be >= 1")
    model = load_model(opts["model"])
    rep = report.importance(model, top_n)
    out = _outdir(opts)
    rep.write_json(out / "importance.json")
    rep.write_csv(out / "importance.csv")
    return {"positive": len(rep.positive), "negative": len(rep.negative)}


def cmd_evaluate(opts) -> dict:
    model = load_model(opts["model"])
    ds = ingest.load_encoded(opts["data"])
    if ds.feature_names != model.feature_names:
        raise ValueError("dataset features do not match the model's feature names")
    eta = ds.x @ model.coefficients + model.intercept
    out = _outdir(opts)
    if isinstance(model, LinearModel):
        result = {"kind": model.kind, "r2_in_sample": model_select.r2_in_sample(ds.y, eta),
                  "r2_out_of_sample": model_select.r2_out_of_sample(ds.y, eta),
                  "mse": float(np.mean((ds.y - eta) ** 2))}
    else:
        curve = metrics.roc(ds.y, eta)
        pr = metrics.pr_curve(ds.y, eta)
        metrics.write_roc_csv(curve, out / "roc.csv")
        metrics.write_pr_csv(pr, out / "pr.csv")
        result = {"kind": model.kind, "auc": curve.auc, "average_precision": pr.average_precision}
    _write_json(out / "evaluation.json", result)
    return result


def cmd_sweep(opts) -> dict:
    lambdas = _floats(opts["lambdas"])
    gammas = _floats(opts["gammas"])
    if not lambdas:
        raise UsageError("--lambdas is empty")
    if not gammas:
        raise UsageError("--gammas is empty")
    if any(not 0 <= g <= 1 for g in gammas):
        raise UsageError("--gammas values must lie in [0, 1]")
    ds = ingest.load_encoded(opts["data"])
    rep = resample.sweep(ds, lambdas, gammas, seed=int(opts["seed"]),
                         test_fraction=float(opts["test_fraction"]),
                         standardize=bool(opts["standardize"]), n_jobs=int(opts["n_jobs"]))
    rep.write_csv(_outdir(opts) / "sweep.csv")
    return {"rows": len(rep.rows)}


def cmd_synth(opts) -> dict:
    n, p = int(opts["n"]), int(opts["p"])
    sparsity = int(opts["sparsity"]) if opts["sparsity"] is not None else min(p, 5)
    try:
        spec = ingest.SynthSpec(n, p, sparsity, float(opts["noise"]), float(opts["imbalance"]),
                                opts["kind"], float(opts["intercept"]))
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds, b0, beta = ingest.generate_synthetic(spec, int(opts["seed"]))
    out = _outdir(opts)
    target = "y"
    with open(out / "data.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, target])
        for xi, yi in zip(ds.x, ds.y):
            w.writerow([*(ingest.fmt(v) for v in xi), ingest.fmt(yi) if spec.kind == "linear" else int(yi)])
    kind = "target_numeric" if spec.kind == "linear" else "target_binary"
    schema = [{"name": f, "kind": "numeric"} for f in ds.feature_names] + [{"name": target, "kind": kind}]
    _write_json(out / "schema.json", schema)
    _write_json(out / "truth.json", {"intercept": b0, "coefficients": [float(b) for b in beta],
                                     "feature_names": list(ds.feature_names)})
    return {"rows": ds.n, "features": ds.p}


COMMANDS = {
    "encode": cmd_encode,
    "cv-fit": cmd_cv_fit,
    "importance": cmd_importance,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def _fail(kind: str, exc) -> None:
    msg = " ".join(str(exc).split()) or type(exc).__name__
    print(f"{PROG}: error[{kind}]: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    try:
        command, opts = resolve(sys.argv[1:] if argv is None else argv)
        summary = COMMANDS[command](opts)
    except UsageError as exc:
        _fail("usage", exc)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        _fail("runtime", exc)
        return 1
    print(json.dumps({"command": command, **summary}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
