"""Command-line entry point: ``prepare``, ``train``, ``evaluate``, ``forecast``.

Every command reads one JSON experiment config (``--config``); individual
keys can be overridden with flags or ``--set key=value`` (dotted keys reach
into ``train``, e.g. ``--set train.lr=0.01``).  ``AQF_OUTPUT_DIR`` overrides
the configured output directory; an explicit ``--output-dir`` wins over both.

Layout under the output directory::

    prepared/            frame.csv, schema.json, stats.json, train.npz, test.npz, summary.json,
                         generator.json (synthetic data only)
    <method>/checkpoint/ checkpoint.json, weights.npz
    <method>/            learning_curve*.csv
    <method>/eval/       reports.json, reports.csv, predictions_*.csv, reliability_*.csv,
                         decision_surface_*.csv
    <method>/forecast.csv

Exit codes: 0 success, 2 configuration, 3 data, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import aggregation as agg
from .autodiff import RngStream
from .baselines import persistence_for_windows, persistence_forecast, quantile_predict
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    FEATURE_COLUMNS,
    FrameSchema,
    NormalizationStats,
    SynthConfig,
    WindowedDataset,
    build_windows,
    input_window,
    load_csv,
    split_by_date,
    synthesize,
    very_low_upper,
    write_csv,
)
from .decision import decision_surface, normalize_confidence, reliability_curve
from .errors import ConfigError, ContractError, DataError, NumericDomainError, NumericError
from .metrics import assemble_report, save_reports_csv, save_reports_json
from .models import make_forecaster
from .training import TrainConfig, fit, train_ensemble, train_swag, training_arrays
from .uncertainty import EnsembleHandle, PredictiveSamples, ensemble_samples, mc_sample_predict

METHODS = ("bnn", "mc-dropout", "ensemble", "lstm-mc", "gnn-mc", "swag", "persistence", "quantile")
PROBABILISTIC = ("bnn", "mc-dropout", "ensemble", "lstm-mc", "gnn-mc", "swag")
REGRESSION_ONLY = ("persistence", "quantile")
TASK_ALIASES = {"regression": "regression", "exceedance": "classification",
                "classification": "classification"}
OUTPUT_ENV = "AQF_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    data_csv: str | None = None
    synthetic: dict | None = None
    stations: list | None = None
    pollutants: list = field(default_factory=lambda: ["PM2.5", "PM10"])
    features: list | None = None
    history: int = 24
    horizon: int = 24
    train_range: list | None = None
    test_range: list | None = None
    method: str = "mc-dropout"
    task: str = "regression"
    train: TrainConfig = field(default_factory=TrainConfig)
    M: int = 1000
    ensemble_size: int = 10
    dropout: float = 0.5
    hidden: list = field(default_factory=lambda: [128, 128])
    lstm_hidden: int = 64
    lstm_layers: int = 2
    embed_dim: int = 16
    swag_rank: int = 20
    swag_start: float = 0.75
    level: float = 0.95
    output_dir: str = "runs"
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.train, dict):
            try:
                self.train = TrainConfig(**self.train)
            except TypeError as exc:
                raise ConfigError(f"bad train section: {exc}") from None
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.task not in TASK_ALIASES:
            raise ConfigError(f"task must be 'regression' or 'exceedance', got {self.task!r}")
        if self.method in REGRESSION_ONLY and self.model_task != "regression":
            raise ConfigError(f"method {self.method!r} supports the regression task only")
        if self.M < 1 or self.ensemble_size < 1:
            raise ConfigError("M and ensemble_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("interval level must lie in (0, 1)")
        if self.data_csv is None and self.synthetic is None:
            self.synthetic = {}

    @property
    def model_task(self) -> str:
        return TASK_ALIASES[self.task]

    def train_config(self) -> TrainConfig:
        return TrainConfig(**{**self.train.to_dict(), "seed": self.seed})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**d)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: dict, output_dir: str | None = None) -> ExperimentConfig:
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    for key, value in overrides.items():
        parts = key.split(".")
        target = doc
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    if os.environ.get(OUTPUT_ENV):
        doc["output_dir"] = os.environ[OUTPUT_ENV]
    if output_dir is not None:
        doc["output_dir"] = output_dir
    return ExperimentConfig.from_dict(doc)


def _dirs(cfg: ExperimentConfig) -> tuple[Path, Path]:
    root = Path(cfg.output_dir)
    return root / "prepared", root / cfg.method


# ---------------------------------------------------------------------------
# prepare
# ---------------------------------------------------------------------------

def _load_frame(cfg: ExperimentConfig):
    if cfg.data_csv is not None:
        if cfg.stations:
            schema = FrameSchema.for_stations(cfg.stations, cfg.pollutants,
                                              cfg.features if cfg.features is not None else FEATURE_COLUMNS)
        else:
            meta = Path(cfg.data_csv).with_suffix(".json")
            if not meta.exists():
                raise ConfigError("give 'stations' or provide a schema JSON next to the CSV")
            schema = FrameSchema.from_dict(json.loads(meta.read_text())["schema"])
        return load_csv(cfg.data_csv, schema)
    synth = dict(cfg.synthetic or {})
    synth.setdefault("seed", cfg.seed)
    if cfg.stations:
        synth.setdefault("stations", cfg.stations)
    synth.setdefault("pollutants", cfg.pollutants)
    try:
        return synthesize(SynthConfig.from_dict(synth))
    except TypeError as exc:
        raise ConfigError(f"bad synthetic section: {exc}") from None


def _default_ranges(frame, horizon: int):
    """Chronological 80/20 split; training targets stay before the split."""
    ts = frame.timestamps
    cut = ts[int(0.8 * len(ts))]
    h = np.timedelta64(horizon - 1, "h")
    end = ts[-1] + np.timedelta64(1, "h")
    return [str(ts[0]), str(cut - h)], [str(cut), str(end)]


def _save_dataset(ds: WindowedDataset, path: Path) -> None:
    np.savez(path, inputs=ds.inputs, targets=ds.targets, labels=ds.labels,
             anchors=ds.anchors.astype(np.int64))


def _load_dataset(path: Path, stats: NormalizationStats, summary: dict) -> WindowedDataset:
    with np.load(path) as z:
        return WindowedDataset(z["inputs"], z["targets"], z["labels"],
                               z["anchors"].astype("datetime64[s]"), stats,
                               summary["pollutants"], summary["history"], summary["horizon"])


def cmd_prepare(cfg: ExperimentConfig) -> dict:
    prep, _ = _dirs(cfg)
    frame = _load_frame(cfg)
    train_range, test_range = cfg.train_range, cfg.test_range
    if train_range is None or test_range is None:
        train_range, test_range = _default_ranges(frame, cfg.horizon)
    ds = build_windows(frame, cfg.history, cfg.horizon, fit_range=train_range)
    with warnings.catch_warnings():
        warnings.simplefilter("error", UserWarning)
        try:
            train, test = split_by_date(ds, train_range, test_range)
        except UserWarning as exc:
            raise DataError(str(exc)) from None
    prep.mkdir(parents=True, exist_ok=True)
    write_csv(frame, prep / "frame.csv")
    (prep / "schema.json").write_text(json.dumps(frame.schema().to_dict(), indent=2) + "\n")
    ds.stats.save(prep / "stats.json")
    if frame.meta:
        (prep / "generator.json").write_text(json.dumps(frame.meta, indent=2, sort_keys=True) + "\n")
    _save_dataset(train, prep / "train.npz")
    _save_dataset(test, prep / "test.npz")
    summary = {
        "history": cfg.history,
        "horizon": cfg.horizon,
        "pollutants": ds.pollutants,
        "targets": ds.target_names,
        "train_range": list(train_range),
        "test_range": list(test_range),
        "n_train": len(train),
        "n_test": len(test),
        "exceedance_rate_train": {n: float(train.labels[:, :, j].mean())
                                  for j, n in enumerate(ds.target_names)},
        "exceedance_rate_test": {n: float(test.labels[:, :, j].mean())
                                 for j, n in enumerate(ds.target_names)},
    }
    (prep / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"prepared {len(train)} training and {len(test)} test windows in {prep}")
    for n in ds.target_names:
        print(f"  {n}: exceedance rate train {summary['exceedance_rate_train'][n]:.3f}"
              f" test {summary['exceedance_rate_test'][n]:.3f}")
    return summary


def _load_prepared(cfg: ExperimentConfig):
    prep, _ = _dirs(cfg)
    if not (prep / "summary.json").exists():
        raise DataError(f"no prepared data under {prep}; run 'prepare' first")
    summary = json.loads((prep / "summary.json").read_text())
    stats = NormalizationStats.load(prep / "stats.json")
    train = _load_dataset(prep / "train.npz", stats, summary)
    test = _load_dataset(prep / "test.npz", stats, summary)
    return summary, stats, train, test


def _load_frame_prepared(cfg: ExperimentConfig):
    prep, _ = _dirs(cfg)
    schema = FrameSchema.from_dict(json.loads((prep / "schema.json").read_text()))
    return load_csv(prep / "frame.csv", schema, max_missing_fraction=1.0)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _factory(cfg: ExperimentConfig, ds: WindowedDataset):
    shape = (ds.history, ds.n_inputs, ds.horizon, ds.n_targets)

    def build(seed: int):
        return make_forecaster(cfg.method, shape, cfg.model_task, dropout=cfg.dropout,
                               hidden=tuple(cfg.hidden), lstm_hidden=cfg.lstm_hidden,
                               lstm_layers=cfg.lstm_layers, embed_dim=cfg.embed_dim, seed=seed)
    return build


def cmd_train(cfg: ExperimentConfig) -> dict:
    _, out = _dirs(cfg)
    summary, stats, train, _ = _load_prepared(cfg)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"task": cfg.model_task, "config": cfg.to_dict()}
    if cfg.method == "persistence":
        save_checkpoint(out / "checkpoint", cfg.method, None, meta)
        print("persistence needs no training; wrote an empty checkpoint")
        return {}
    x, y = training_arrays(train, cfg.model_task)
    tcfg = cfg.train_config()
    build = _factory(cfg, train)
    if cfg.method == "ensemble":
        predictor, curves = train_ensemble(build, x, y, tcfg, cfg.ensemble_size)
        for i, c in enumerate(curves):
            c.to_csv(out / f"learning_curve_m{i}.csv")
        final = [c.data_loss[-1] for c in curves if c.data_loss]
        result = {"members": len(curves), "final_data_loss": float(np.mean(final)) if final else None}
    else:
        if cfg.method == "swag":
            predictor, curve = train_swag(build(cfg.seed), x, y, tcfg, cfg.swag_rank, cfg.swag_start)
        else:
            predictor = build(cfg.seed)
            curve = fit(predictor, x, y, tcfg)
        curve.to_csv(out / "learning_curve.csv")
        result = {"final_data_loss": curve.data_loss[-1] if curve.data_loss else None,
                  "final_kl_loss": curve.kl_loss[-1] if curve.kl_loss else None}
    save_checkpoint(out / "checkpoint", cfg.method, predictor, meta)
    parts = ", ".join(f"{k} {v:.6g}" if isinstance(v, float) else f"{k} {v}"
                      for k, v in result.items())
    print(f"trained {cfg.method} ({cfg.task}): {parts}")
    return result


# ---------------------------------------------------------------------------
# evaluation and forecasting helpers
# ---------------------------------------------------------------------------

def _predict_samples(cfg: ExperimentConfig, predictor, x, stream_id: int) -> PredictiveSamples:
    if isinstance(predictor, EnsembleHandle):
        return ensemble_samples(predictor, x)
    return mc_sample_predict(predictor, x, cfg.M, RngStream(cfg.seed, stream_id))


def _target_slice(arr, j: int, n_targets: int):
    """(M, N, horizon*J) -> (M, N*horizon) for target ``j``."""
    sub = arr[..., j::n_targets]
    return sub.reshape(sub.shape[0], -1)


def _station_pollutant(name: str, pollutant: str) -> tuple[str, str]:
    suffix = "_" + pollutant
    return (name[: -len(suffix)], pollutant) if name.endswith(suffix) else (name, pollutant)


def _exceed_from_mixture(means, variances, threshold: float) -> np.ndarray:
    """P(y > threshold) under the uniform Gaussian mixture (components on axis 0)."""
    return np.mean(norm.sf((threshold - means) / np.sqrt(variances)), axis=0)


def _lead_timestamps(anchors, horizon: int):
    lead = np.arange(horizon)
    ts = anchors[:, None] + lead[None, :] * np.timedelta64(3600, "s")
    return ts.ravel(), np.tile(lead + 1, len(anchors))


def cmd_evaluate(cfg: ExperimentConfig, checkpoint: str | None = None) -> list:
    _, out = _dirs(cfg)
    summary, stats, _, test = _load_prepared(cfg)
    if len(test) == 0:
        raise DataError("the test split is empty")
    predictor, doc = load_checkpoint(checkpoint or out / "checkpoint", expect_method=cfg.method)
    if doc.get("task") not in (None, cfg.model_task):
        raise ConfigError(f"checkpoint task {doc['task']!r} differs from config task {cfg.model_task!r}")
    ev = out / "eval"
    ev.mkdir(parents=True, exist_ok=True)
    J = test.n_targets
    stamps, leads = _lead_timestamps(test.anchors, test.horizon)
    x = test.inputs
    reports = []

    if cfg.method == "persistence":
        pred = persistence_for_windows(_load_frame_prepared(cfg), test)
    elif cfg.method == "quantile":
        qf = quantile_predict(predictor, x, stats.target_mean, stats.target_std, J)
    else:
        samples = _predict_samples(cfg, predictor, x, stream_id=1)
        if cfg.model_task == "regression":
            samples = samples.to_raw(stats.target_mean, stats.target_std, J)

    for j, name in enumerate(test.target_names):
        station, pollutant = _station_pollutant(name, test.pollutants[j])
        y = test.targets[:, :, j].ravel()
        o = test.labels[:, :, j].ravel()
        if cfg.method == "persistence":
            p = pred[:, :, j].ravel()
            ok = ~np.isnan(p)
            rep = assemble_report(station, pollutant, y=y[ok], mean=p[ok], samples=p[ok][None],
                                  method=cfg.method)
            if not ok.all():
                rep.flags.append(f"{int((~ok).sum())} points without a source value excluded")
            agg.write_prediction_dump(ev / f"predictions_{name}.csv", stamps, y, mean=p, lead=leads)
        elif cfg.method == "quantile":
            lo, hi = qf.lower[:, j::J].ravel(), qf.upper[:, j::J].ravel()
            rep = assemble_report(station, pollutant, y=y, lower=lo, upper=hi, method=cfg.method)
            if qf.repaired:
                rep.flags.append(f"{qf.repaired} crossed quantile pairs swapped")
            agg.write_prediction_dump(ev / f"predictions_{name}.csv", stamps, y, lower=lo,
                                      upper=hi, lead=leads)
        elif cfg.model_task == "regression":
            mu = _target_slice(samples.means, j, J)
            var = _target_slice(samples.variances, j, J)
            mix = agg.mix_moments(mu, var)
            agg.prediction_interval(mix, cfg.level)
            rep = assemble_report(station, pollutant, y=y, mean=mix.mean, variance=mix.variance,
                                  lower=mix.lower, upper=mix.upper, method=cfg.method)
            conf = agg.regression_confidence(mix.std)
            p_exc = _exceed_from_mixture(mu, var, very_low_upper(pollutant))
            agg.write_prediction_dump(ev / f"predictions_{name}.csv", stamps, y, mix,
                                      probability=p_exc, confidence=conf, lead=leads)
            reliability_curve(mix.mean, conf, y, "regression").to_csv(ev / f"reliability_{name}.csv")
        else:
            ps = _target_slice(samples.probs, j, J)
            fc = agg.average_probabilities(ps)
            raw_conf = agg.classification_confidence(ps) if ps.shape[0] >= 2 else np.ones(ps.shape[1])
            conf = normalize_confidence(raw_conf)
            rep = assemble_report(station, pollutant, labels=o, probability=fc.probability,
                                  method=cfg.method)
            agg.write_prediction_dump(ev / f"predictions_{name}.csv", stamps, o,
                                      probability=fc.probability, confidence=raw_conf, lead=leads)
            reliability_curve(fc.probability, conf, o, "classification").to_csv(
                ev / f"reliability_{name}.csv")
            decision_surface(fc.probability, conf, o).to_csv(ev / f"decision_surface_{name}.csv")
        reports.append(rep)

    save_reports_json(reports, ev / "reports.json")
    save_reports_csv(reports, ev / "reports.csv")
    print(f"evaluated {cfg.method} on {len(test)} test windows; reports in {ev}")
    for r in reports:
        shown = ", ".join(f"{k} {v:.4g}" for k, v in r.metrics.items() if v is not None)
        print(f"  {r.station} {r.pollutant}: {shown}")
    return reports


def cmd_forecast(cfg: ExperimentConfig, checkpoint: str | None = None, anchor: str | None = None) -> Path:
    _, out = _dirs(cfg)
    summary, stats, _, _ = _load_prepared(cfg)
    frame = _load_frame_prepared(cfg)
    predictor, _ = load_checkpoint(checkpoint or out / "checkpoint", expect_method=cfg.method)
    history, horizon = summary["history"], summary["horizon"]
    names, pollutants = summary["targets"], summary["pollutants"]
    J = len(names)
    start = np.datetime64(anchor, "s") if anchor else frame.timestamps[-1] + np.timedelta64(3600, "s")
    stamps = start + np.arange(horizon) * np.timedelta64(3600, "s")
    rows = []

    if cfg.method == "persistence":
        for j, n in enumerate(names):
            p = persistence_forecast(frame, n, stamps)
            if np.isnan(p).any():
                raise DataError(f"no observation 24 h before some forecast hours of {n}")
            rows += [(stamps[h], n, h + 1, {"mu_mix": p[h]}) for h in range(horizon)]
    else:
        x = input_window(frame, stats, start, history)
        if cfg.method == "quantile":
            qf = quantile_predict(predictor, x, stats.target_mean, stats.target_std, J)
            for j, n in enumerate(names):
                lo, hi = qf.lower[0, j::J], qf.upper[0, j::J]
                rows += [(stamps[h], n, h + 1, {"lower": lo[h], "upper": hi[h]}) for h in range(horizon)]
        else:
            samples = _predict_samples(cfg, predictor, x, stream_id=2)
            for j, n in enumerate(names):
                if cfg.model_task == "regression":
                    raw = samples.to_raw(stats.target_mean, stats.target_std, J)
                    mu, var = _target_slice(raw.means, j, J), _target_slice(raw.variances, j, J)
                    mix = agg.mix_moments(mu, var)
                    lo, hi = agg.prediction_interval(mix, cfg.level)
                    p = _exceed_from_mixture(mu, var, very_low_upper(pollutants[j]))
                    rows += [(stamps[h], n, h + 1,
                              {"mu_mix": mix.mean[h], "sigma_mix": mix.std[h], "lower": lo[h],
                               "upper": hi[h], "p_exceed": p[h]}) for h in range(horizon)]
                else:
                    ps = _target_slice(samples.probs, j, J)
                    p = ps.mean(axis=0)
                    conf = agg.classification_confidence(ps) if ps.shape[0] >= 2 else np.ones_like(p)
                    rows += [(stamps[h], n, h + 1, {"p_exceed": p[h], "confidence": conf[h]})
                             for h in range(horizon)]

    cols = ["mu_mix", "sigma_mix", "lower", "upper", "p_exceed", "confidence"]
    used = [c for c in cols if any(c in r[3] for r in rows)]
    out.mkdir(parents=True, exist_ok=True)
    path = out / "forecast.csv"
    with path.open("w") as fh:
        fh.write(",".join(["timestamp", "target", "lead", *used]) + "\n")
        for ts, n, lead, vals in rows:
            fh.write(",".join([str(ts), n, str(lead), *(repr(float(vals[c])) for c in used)]) + "\n")
    print(f"wrote {len(rows)} forecast rows from {start} to {path}")
    return path


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--output-dir", help=f"output directory (overrides config and ${OUTPUT_ENV})")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--task", choices=sorted(TASK_ALIASES))
    common.add_argument("--seed", type=int)
    common.add_argument("--M", type=int, help="Monte Carlo samples per prediction")
    common.add_argument("--epochs", type=int)
    common.add_argument("--level", type=float, help="prediction interval level")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; values are parsed as JSON when possible")

    p = argparse.ArgumentParser(prog="aqforecast", description="Probabilistic air-quality forecasting")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", parents=[common], help="build windowed datasets")
    sub.add_parser("train", parents=[common], help="train a forecaster")
    ev = sub.add_parser("evaluate", parents=[common], help="score a checkpoint on the test split")
    ev.add_argument("--checkpoint")
    fc = sub.add_parser("forecast", parents=[common], help="forecast the next horizon")
    fc.add_argument("--checkpoint")
    fc.add_argument("--anchor", help="first forecast hour (default: right after the data)")
    return p


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v)
    for key in ("method", "task", "seed", "M", "level"):
        if getattr(args, key) is not None:
            out[key] = getattr(args, key)
    if args.epochs is not None:
        out["train.epochs"] = args.epochs
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args), args.output_dir)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.checkpoint)
        else:
            cmd_forecast(cfg, args.checkpoint, args.anchor)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, NumericDomainError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
