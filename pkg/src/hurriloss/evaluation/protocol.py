"""Hold-out and repeated k-fold evaluation.

Preprocessing (standardizer and one-hot encoder) is refitted on the
training rows of every fold, so validation rows never influence the
transforms applied to them.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import derive_seed, rng_for
from ..features import Preprocessor, RawDesign
from ..models import fit_model
from .metrics import METRIC_NAMES, compute_metrics


class FoldError(RuntimeError):
    pass


def holdout_split(n: int, fraction: float = 0.2, seed: int = 0):
    """Seeded shuffle; the first ``ceil(fraction * n)`` indices validate."""
    if n < 5:
        raise ValueError(f"n: hold-out split needs at least 5 rows, got {n}")
    if not 0 < fraction < 1:
        raise ValueError(f"fraction: must lie in (0, 1), got {fraction}")
    order = rng_for(seed, "holdout").permutation(n)
    n_val = int(math.ceil(fraction * n))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def kfold_indices(n: int, k: int, seed: int, repeat: int):
    """Validation index arrays of the k contiguous folds of one repeat."""
    order = rng_for(seed, "repeat", repeat).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds, start = [], 0
    for s in sizes:
        folds.append(np.sort(order[start : start + s]))
        start += s
    return folds


@dataclass
class FoldResult:
    repeat: int
    fold: int
    metrics: object
    preprocessor: object = None


@dataclass
class EvaluationReport:
    model: str
    seed: int
    protocol: str
    folds: list = field(default_factory=list)  # FoldResult, in (repeat, fold) order

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def summary(self) -> dict:
        """Per-metric mean and sample standard deviation across folds."""
        out = {}
        for name in METRIC_NAMES:
            vals = np.array([getattr(f.metrics, name) for f in self.folds])
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            out[name] = {"mean": float(np.mean(vals)), "std": std}
        return out

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "seed": self.seed,
            "protocol": self.protocol,
            "folds": self.n_folds,
            "metrics": self.summary(),
            "per_fold": [
                {"repeat": f.repeat, "fold": f.fold, **f.metrics.as_dict()} for f in self.folds
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _fit_and_score(design: RawDesign, train, valid, kind, config, seed, threads):
    pre = Preprocessor.fit(design, train)
    model = fit_model(kind, pre.transform(design, train), design.target[train], config, seed, threads)
    pred = model.predict(pre.transform(design, valid))
    return compute_metrics(design.target[valid], pred), pre


def repeated_kfold(design: RawDesign, kind: str, config=None, k: int = 5, repeats: int = 5, seed: int = 0,
                   threads: int = 1, keep_preprocessors: bool = False) -> EvaluationReport:
    n = design.n_rows
    if n < k:
        raise ValueError(f"n: {n} rows cannot form {k} folds")
    all_idx = np.arange(n)
    jobs = []
    for r in range(repeats):
        for f, valid in enumerate(kfold_indices(n, k, seed, r)):
            jobs.append((r, f, np.setdiff1d(all_idx, valid), valid))

    def run(job):
        r, f, train, valid = job
        try:
            m, pre = _fit_and_score(design, train, valid, kind, config, derive_seed(seed, "fold-model", r * k + f), 1)
        except Exception as exc:  # noqa: BLE001 - re-raised with fold context
            raise FoldError(f"repeat {r} fold {f}: {kind} failed: {exc}") from exc
        return FoldResult(r, f, m, pre if keep_preprocessors else None)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    return EvaluationReport(kind, seed, "repeated-cv", results)


def holdout_evaluate(design: RawDesign, kind: str, config=None, fraction: float = 0.2, seed: int = 0,
                     threads: int = 1) -> EvaluationReport:
    train, valid = holdout_split(design.n_rows, fraction, seed)
    m, _ = _fit_and_score(design, train, valid, kind, config, derive_seed(seed, "holdout-model", 0), threads)
    return EvaluationReport(kind, seed, "holdout", [FoldResult(0, 0, m)])


def format_table(reports) -> str:
    """Fixed-width table with one ``mean ± std`` cell per metric."""
    heads = ("Model", "R2", "MAE", "SMAPE", "RMSE", "RMSLE")
    rows = []
    for rep in reports:
        s = rep.summary()
        rows.append([rep.model] + [f"{s[m]['mean']:.3f} ± {s[m]['std']:.3f}" for m in METRIC_NAMES])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(heads)]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(heads, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines) + "\n"
