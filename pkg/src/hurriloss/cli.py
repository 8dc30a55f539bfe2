"""Command-line entry point.

    hurriloss synth|train|evaluate|predict|importance|report --config run.json
        [--seed N] [--threads N] [--out DIR] [--model PATH] [--rows CSV]

Exit codes: 0 success, 1 internal error, 2 user, config or schema error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional


from . import features as feat
from .evaluation import export_zcta_summary, format_table, holdout_evaluate, parse_zcta_summary, repeated_kfold
from .evaluation.summary import summary_rows
from .ingest import FILENAMES, IngestError, read_bundle_paths, write_bundle
from .models import MODEL_KINDS, ModelFormatError, fit_model, gain_importance, ranked, save_model
from .models.serialize import load_document, model_from_dict
from .synthetic import generate_synthetic, generator_constants

log = logging.getLogger("hurriloss")

PROTOCOLS = ("repeated-cv", "holdout")
_TOP_KEYS = {"inputs", "synthetic", "model", "protocol", "cv", "features", "seed", "output_dir", "figures"}
_SYNTH_KEYS = {"n_zctas", "n_storms", "noise_sigma"}
_CV_KEYS = {"k", "repeats", "holdout_fraction"}
_FEATURE_KEYS = {"include_occupancy", "occupancy_labels", "hpi_baseline"}
_MODEL_KEYS = {"kind", "params"}


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    inputs: Optional[dict] = None
    synthetic: Optional[dict] = None
    model_kind: str = "gbm"
    model_params: dict = field(default_factory=dict)
    protocol: str = "repeated-cv"
    k: int = 5
    repeats: int = 5
    holdout_fraction: float = 0.2
    include_occupancy: bool = True
    occupancy_labels: Optional[list] = None
    hpi_baseline: Optional[float] = None
    seed: int = 0
    output_dir: str = "out"
    figures: bool = True


def _check_keys(section, got, allowed):
    unknown = sorted(set(got) - allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown config keys {unknown}")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    _check_keys("config", raw, _TOP_KEYS)
    base = os.path.dirname(os.path.abspath(path))
    cfg = RunConfig()

    if ("inputs" in raw) == ("synthetic" in raw):
        raise ConfigError("config: set exactly one of 'inputs' or 'synthetic'")
    if "inputs" in raw:
        inputs = raw["inputs"]
        if isinstance(inputs, str):
            d = os.path.join(base, inputs)
            inputs = {k: os.path.join(d, v) for k, v in FILENAMES.items()}
        elif isinstance(inputs, dict):
            _check_keys("inputs", inputs, set(FILENAMES))
            absent = sorted(set(FILENAMES) - set(inputs))
            if absent:
                raise ConfigError(f"inputs: missing paths for {absent}")
            inputs = {k: os.path.join(base, v) for k, v in inputs.items()}
        else:
            raise ConfigError("inputs: expected a directory path or an object of six paths")
        cfg.inputs = inputs
    else:
        syn = raw["synthetic"]
        if not isinstance(syn, dict):
            raise ConfigError("synthetic: expected an object")
        _check_keys("synthetic", syn, _SYNTH_KEYS)
        cfg.synthetic = {"n_zctas": 2000, "n_storms": 50, "noise_sigma": 0.3, **syn}

    model = raw.get("model", {})
    if isinstance(model, str):
        model = {"kind": model}
    _check_keys("model", model, _MODEL_KEYS)
    cfg.model_kind = model.get("kind", "gbm")
    if cfg.model_kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind: unknown model kind {cfg.model_kind!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    cfg.model_params = dict(model.get("params", {}))

    cfg.protocol = raw.get("protocol", cfg.protocol)
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"protocol: expected one of {PROTOCOLS}, got {cfg.protocol!r}")
    cv = raw.get("cv", {})
    _check_keys("cv", cv, _CV_KEYS)
    cfg.k = int(cv.get("k", cfg.k))
    cfg.repeats = int(cv.get("repeats", cfg.repeats))
    cfg.holdout_fraction = float(cv.get("holdout_fraction", cfg.holdout_fraction))
    fcfg = raw.get("features", {})
    _check_keys("features", fcfg, _FEATURE_KEYS)
    cfg.include_occupancy = bool(fcfg.get("include_occupancy", True))
    cfg.occupancy_labels = fcfg.get("occupancy_labels")
    cfg.hpi_baseline = fcfg.get("hpi_baseline")
    cfg.seed = _seed(raw.get("seed", 0))
    out = raw.get("output_dir", "out")
    cfg.output_dir = os.path.join(base, out)
    cfg.figures = bool(raw.get("figures", True))
    return cfg


def _seed(value) -> int:
    try:
        s = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {value!r}") from None
    if not 0 <= s < 2**64:
        raise ConfigError(f"seed: {s} is not an unsigned 64-bit integer")
    return s


# -- shared steps -----------------------------------------------------------------------


def _outdir(cfg) -> str:
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"output: cannot create {cfg.output_dir}: {exc.strerror}") from exc
    if not os.access(cfg.output_dir, os.W_OK):
        raise UsageError(f"output: {cfg.output_dir} is not writable")
    return cfg.output_dir


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"output: cannot write {path}: {exc.strerror}") from exc
    return path


def load_inputs(cfg):
    if cfg.synthetic is not None:
        s = cfg.synthetic
        return generate_synthetic(cfg.seed, int(s["n_zctas"]), int(s["n_storms"]), float(s["noise_sigma"]))
    try:
        bundle, report = read_bundle_paths(cfg.inputs, cfg.occupancy_labels, cfg.hpi_baseline)
    except OSError as exc:
        raise UsageError(f"inputs: {exc.filename}: {exc.strerror}") from exc
    if any(r.rejected for r in report.sources.values()) or any(report.unmatched_zctas.values()):
        print(report.summary(), file=sys.stderr)
    return bundle


def _design(cfg, bundle):
    return feat.build_design(bundle, cfg.include_occupancy)


def _predictions_csv(ids, preds) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["zcta", "predicted_log_cost"])
    for z, p in zip(ids, preds):
        w.writerow([z, repr(float(p))])
    return buf.getvalue()


def _read_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = load_document(fh.read())
    except OSError as exc:
        raise UsageError(f"model: cannot read {path}: {exc.strerror}") from exc
    return model_from_dict(doc), doc


# -- commands ---------------------------------------------------------------------------


def cmd_synth(cfg, args):
    if cfg.synthetic is None:
        raise ConfigError("synth: config must set 'synthetic'")
    out = _outdir(cfg)
    bundle = load_inputs(cfg)
    try:
        write_bundle(bundle, out)
    except OSError as exc:
        raise UsageError(f"output: cannot write bundle to {out}: {exc.strerror}") from exc
    manifest = {"seed": cfg.seed, **cfg.synthetic, "generator_constants": generator_constants()}
    _write(os.path.join(out, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(FILENAMES)} CSVs and manifest.json to {out}")


def cmd_train(cfg, args):
    out = _outdir(cfg)
    design = _design(cfg, load_inputs(cfg))
    pre = feat.Preprocessor.fit(design)
    fm = feat.to_matrix(design, pre)
    model = fit_model(cfg.model_kind, fm.rows, fm.target, cfg.model_params or None, cfg.seed, args.threads)
    transform = {"include_occupancy": cfg.include_occupancy, **pre.to_dict()}
    _write(os.path.join(out, "model.json"), save_model(model, fm.column_names, transform))
    _write(os.path.join(out, "features.csv"), feat.matrix_to_csv(fm))
    _write(os.path.join(out, "design.csv"), feat.design_to_csv(design))
    _write(os.path.join(out, "train_predictions.csv"), _predictions_csv(fm.row_ids, model.predict(fm.rows)))
    print(f"trained {cfg.model_kind} on {fm.n_rows} rows x {len(fm.column_names)} features -> {out}/model.json")


def cmd_evaluate(cfg, args):
    out = _outdir(cfg)
    design = _design(cfg, load_inputs(cfg))
    params = cfg.model_params or None
    if cfg.protocol == "holdout":
        rep = holdout_evaluate(design, cfg.model_kind, params, cfg.holdout_fraction, cfg.seed, args.threads)
    else:
        rep = repeated_kfold(design, cfg.model_kind, params, cfg.k, cfg.repeats, cfg.seed, args.threads)
    _write(os.path.join(out, "report.json"), rep.to_json())
    table = format_table([rep])
    _write(os.path.join(out, "report.txt"), table)
    if cfg.figures and rep.n_folds > 1:
        from .plotting import fold_metrics

        fold_metrics(rep.to_dict(), os.path.join(out, "report_folds.png"))
    print(table, end="")


def _rows_matrix(text, model, doc):
    header = next(csv.reader(io.StringIO(text)), [])
    if "occupancy_type" in header:
        transform = doc.get("transform")
        if transform is None:
            raise UsageError("predict: model document has no stored transform for raw design rows")
        design = feat.design_from_csv(text)
        if not transform.get("include_occupancy", True):
            design = feat.RawDesign(design.row_ids, design.numeric, design.category, (), design.target,
                                    design.adjusted_cost, design.storm_distance_km)
        pre = feat.Preprocessor.from_dict(transform)
        return design.row_ids, pre.transform(design)
    fm = feat.matrix_from_csv(text)
    expected = tuple(doc.get("feature_names", ()))
    if expected and fm.column_names != expected:
        raise UsageError(f"predict: feature columns {list(fm.column_names)} differ from model's {list(expected)}")
    return fm.row_ids, fm.rows


def cmd_predict(cfg, args):
    if not args.model or not args.rows:
        raise UsageError("predict: --model and --rows are required")
    out = _outdir(cfg)
    model, doc = _read_model(args.model)
    try:
        with open(args.rows, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"rows: cannot read {args.rows}: {exc.strerror}") from exc
    ids, X = _rows_matrix(text, model, doc)
    path = _write(os.path.join(out, "predictions.csv"), _predictions_csv(ids, model.predict(X)))
    print(f"wrote {len(ids)} predictions to {path}")


def cmd_importance(cfg, args):
    if not args.model:
        raise UsageError("importance: --model is required")
    out = _outdir(cfg)
    model, doc = _read_model(args.model)
    try:
        table = gain_importance(model, doc.get("feature_names") or None)
    except TypeError:
        raise UsageError("importance requires a tree ensemble") from None
    pairs = ranked(table)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "share"])
    for name, share in pairs:
        w.writerow([name, repr(share)])
    path = _write(os.path.join(out, "importance.csv"), buf.getvalue())
    if cfg.figures and pairs:
        from .plotting import importance_bars

        importance_bars(pairs, os.path.join(out, "importance.png"), f"Gain importance ({model.kind})")
    for name, share in pairs[:10]:
        print(f"{name:32s} {share:.4f}")
    print(f"-> {path}")


def cmd_report(cfg, args):
    out = _outdir(cfg)
    bundle = load_inputs(cfg)
    design = _design(cfg, bundle)
    preds = None
    if args.model:
        model, doc = _read_model(args.model)
        transform = doc.get("transform")
        if transform is None:
            raise UsageError("report: model document has no stored transform")
        preds = model.predict(feat.Preprocessor.from_dict(transform).transform(design))
    text = export_zcta_summary(bundle, design, preds)
    path = _write(os.path.join(out, "zcta_summary.csv"), text)
    if cfg.figures:
        from .plotting import zcta_maps

        zcta_maps(parse_zcta_summary(text), os.path.join(out, "zcta_maps.png"))
    print(f"wrote {len(summary_rows(bundle, design, preds))} ZCTA rows to {path}")


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "importance": cmd_importance,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hurriloss", description="ZCTA-level hurricane loss modelling")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads (output does not depend on it)")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--model", help="model JSON (predict, importance, report)")
    p.add_argument("--rows", help="design or feature-matrix CSV to predict on")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = _seed(args.seed)
        if args.out:
            cfg.output_dir = os.path.abspath(args.out)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads: must be at least 1")
        COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError, IngestError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
