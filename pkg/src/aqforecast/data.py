"""Hourly air-quality frames: CSV ingestion, CAQI labelling, windowing, splits.

The CSV layout is a header row with a ``timestamp`` column (ISO-8601,
timezone-naive, hourly) followed by one column per named series.  Empty
cells are missing values.

Target columns carry a pollutant (``PM10`` or ``PM2.5``); every other
column is an exogenous feature.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractError, DataError, EmptyDatasetError, NumericDomainError

# ---------------------------------------------------------------------------
# European Common Air Quality Index (hourly bands, µg/m³)
# ---------------------------------------------------------------------------

BAND_LABELS = ("Very Low", "Low", "Medium", "High", "Very High")

CAQI_BANDS: dict[str, tuple[tuple[str, float, float], ...]] = {
    "PM10": (
        ("Very Low", 0.0, 25.0),
        ("Low", 25.0, 50.0),
        ("Medium", 50.0, 90.0),
        ("High", 90.0, 180.0),
        ("Very High", 180.0, math.inf),
    ),
    "PM2.5": (
        ("Very Low", 0.0, 15.0),
        ("Low", 15.0, 30.0),
        ("Medium", 30.0, 55.0),
        ("High", 55.0, 110.0),
        ("Very High", 110.0, math.inf),
    ),
}

_POLLUTANT_ALIASES = {"pm10": "PM10", "pm2.5": "PM2.5", "pm25": "PM2.5", "pm2_5": "PM2.5"}

FEATURE_COLUMNS = (
    "air_temperature",
    "relative_humidity",
    "precipitation",
    "air_pressure",
    "wind_speed",
    "wind_direction",
    "snow_thickness",
    "sunshine_duration",
    "traffic_volume",
    "street_cleaning",
)

DEFAULT_STATIONS = ("Bakke_kirke", "E6-Tiller", "Elgeseter", "Torvet")


def canonical_pollutant(name: str) -> str:
    try:
        return _POLLUTANT_ALIASES[name.strip().lower()]
    except KeyError:
        raise ContractError(f"unknown pollutant {name!r}; expected PM10 or PM2.5") from None


def very_low_upper(pollutant: str) -> float:
    """Upper bound of the Very-Low band, the exceedance threshold."""
    return CAQI_BANDS[canonical_pollutant(pollutant)][0][2]


def caqi_classify(value, pollutant: str):
    """Band index 0..4 for a concentration; a boundary value belongs to the lower band.

    Works on scalars and arrays.
    """
    v = np.asarray(value, dtype=np.float64)
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise NumericDomainError("concentration must be non-negative")
    uppers = np.array([b[2] for b in CAQI_BANDS[canonical_pollutant(pollutant)][:-1]])
    band = np.searchsorted(uppers, v, side="left")
    return int(band) if band.ndim == 0 else band


def exceedance_label(value, pollutant: str):
    """1 where the value strictly exceeds the Very-Low upper bound, else 0."""
    v = np.asarray(value, dtype=np.float64)
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise NumericDomainError("concentration must be non-negative")
    out = (v > very_low_upper(pollutant)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

@dataclass
class FrameSchema:
    """Which columns are targets (and their pollutant) and which are features."""

    targets: dict[str, str]
    features: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.targets = {k: canonical_pollutant(v) for k, v in self.targets.items()}
        self.features = list(self.features)

    @property
    def columns(self) -> list[str]:
        return list(self.targets) + self.features

    @classmethod
    def for_stations(cls, stations=DEFAULT_STATIONS, pollutants=("PM2.5", "PM10"),
                     features=FEATURE_COLUMNS) -> "FrameSchema":
        targets = {f"{s}_{p}": p for s in stations for p in pollutants}
        return cls(targets=targets, features=list(features))

    def to_dict(self) -> dict:
        return {"targets": dict(self.targets), "features": list(self.features)}

    @classmethod
    def from_dict(cls, d: dict) -> "FrameSchema":
        return cls(targets=dict(d["targets"]), features=list(d.get("features", [])))


@dataclass
class TimeSeriesFrame:
    """Aligned hourly observations; missing cells are NaN."""

    timestamps: np.ndarray
    columns: dict[str, np.ndarray]
    targets: dict[str, str]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        n = len(self.timestamps)
        self.columns = {k: np.asarray(v, dtype=np.float64) for k, v in self.columns.items()}
        for name, col in self.columns.items():
            if col.shape != (n,):
                raise DataError(f"column {name!r} has length {col.shape[0]}, expected {n}")
        self.targets = {k: canonical_pollutant(v) for k, v in self.targets.items()}
        missing = [k for k in self.targets if k not in self.columns]
        if missing:
            raise DataError(f"target columns absent from frame: {missing}")
        steps = np.diff(self.timestamps.astype(np.int64))
        if np.any(steps == 0):
            dup = self.timestamps[1:][steps == 0]
            raise DataError(f"duplicated timestamps: {[str(t) for t in dup]}")
        if np.any(steps < 0):
            raise DataError("timestamps are not strictly increasing")
        for name in self.targets:
            col = self.columns[name]
            if np.any(col[~np.isnan(col)] < 0):
                raise DataError(f"negative pollutant value in column {name!r}")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def features(self) -> list[str]:
        return [c for c in self.columns if c not in self.targets]

    @property
    def missing_mask(self) -> dict[str, np.ndarray]:
        return {k: np.isnan(v) for k, v in self.columns.items()}

    def schema(self) -> FrameSchema:
        return FrameSchema(targets=dict(self.targets), features=self.features)


def _parse_timestamp(text: str) -> np.datetime64:
    ts = datetime.fromisoformat(text.strip())
    if ts.tzinfo is not None:
        raise ValueError("timezone-aware timestamp")
    return np.datetime64(ts.replace(microsecond=0), "s")


def load_csv(path, schema: FrameSchema, max_missing_fraction: float = 0.5) -> TimeSeriesFrame:
    """Read a frame; cell-level problems are collected and raised together."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if "timestamp" not in header:
            raise DataError(f"{path}: header lacks a 'timestamp' column")
        absent = [c for c in schema.columns if c not in header]
        if absent:
            raise DataError(f"{path}: header lacks columns {absent}")
        idx = {c: header.index(c) for c in ["timestamp", *schema.columns]}
        stamps, rows, problems = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                stamps.append(_parse_timestamp(row[idx["timestamp"]]))
            except (ValueError, IndexError):
                problems.append((lineno, f"unparseable timestamp {row[:1]!r}"))
                continue
            values = []
            for c in schema.columns:
                cell = row[idx[c]].strip() if idx[c] < len(row) else ""
                if cell == "":
                    values.append(np.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    problems.append((lineno, f"non-numeric value {cell!r} in {c}"))
                    v = np.nan
                if c in schema.targets and v < 0:
                    problems.append((lineno, f"negative pollutant value {v} in {c}"))
                values.append(v)
            rows.append(values)
    if problems:
        detail = "; ".join(f"line {n}: {m}" for n, m in problems[:10])
        raise DataError(f"{path}: {len(problems)} bad row(s): {detail}", problems)
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema.columns))
    columns = {c: data[:, j] for j, c in enumerate(schema.columns)}
    for c in schema.targets:
        frac = float(np.mean(np.isnan(columns[c]))) if len(rows) else 1.0
        if frac > max_missing_fraction:
            raise DataError(f"{path}: target column {c!r} is {frac:.0%} missing")
    return TimeSeriesFrame(np.array(stamps, dtype="datetime64[s]"), columns, schema.targets)


def write_csv(frame: TimeSeriesFrame, path) -> None:
    """Write a frame; floats use the shortest round-trip representation."""
    names = list(frame.columns)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *names])
        for i, ts in enumerate(frame.timestamps):
            cells = []
            for n in names:
                v = frame.columns[n][i]
                cells.append("" if np.isnan(v) else repr(float(v)))
            w.writerow([str(ts), *cells])


# ---------------------------------------------------------------------------
# supervised windows
# ---------------------------------------------------------------------------

@dataclass
class NormalizationStats:
    input_names: list[str]
    input_mean: np.ndarray
    input_std: np.ndarray
    target_names: list[str]
    target_mean: np.ndarray
    target_std: np.ndarray

    def to_dict(self) -> dict:
        return {
            "input_names": list(self.input_names),
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_names": list(self.target_names),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            list(d["input_names"]),
            np.array(d["input_mean"], dtype=np.float64),
            np.array(d["input_std"], dtype=np.float64),
            list(d["target_names"]),
            np.array(d["target_mean"], dtype=np.float64),
            np.array(d["target_std"], dtype=np.float64),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "NormalizationStats":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class WindowedDataset:
    """Supervised samples for a fixed history window and forecast horizon.

    ``inputs`` has shape (N, history, n_inputs) and is normalized;
    ``targets`` and ``labels`` have shape (N, horizon, n_targets) with
    targets in raw µg/m³.
    """

    inputs: np.ndarray
    targets: np.ndarray
    labels: np.ndarray
    anchors: np.ndarray
    stats: NormalizationStats
    pollutants: list[str]
    history: int
    horizon: int

    def __len__(self) -> int:
        return len(self.anchors)

    @property
    def target_names(self) -> list[str]:
        return self.stats.target_names

    @property
    def n_targets(self) -> int:
        return self.targets.shape[2]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[2]

    def flat_inputs(self) -> np.ndarray:
        return self.inputs.reshape(len(self), -1)

    def normalized_targets(self) -> np.ndarray:
        return (self.targets - self.stats.target_mean) / self.stats.target_std

    def subset(self, index) -> "WindowedDataset":
        return WindowedDataset(
            self.inputs[index],
            self.targets[index],
            self.labels[index],
            self.anchors[index],
            self.stats,
            self.pollutants,
            self.history,
            self.horizon,
        )


def _hour_features(timestamps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hours = (timestamps.astype("datetime64[h]").astype(np.int64) % 24).astype(np.float64)
    angle = 2 * np.pi * hours / 24.0
    return np.sin(angle), np.cos(angle)


def _range_mask(timestamps: np.ndarray, rng) -> np.ndarray:
    if rng is None:
        return np.ones(len(timestamps), dtype=bool)
    start, end = (np.datetime64(r, "s") if r is not None else None for r in rng)
    mask = np.ones(len(timestamps), dtype=bool)
    if start is not None:
        mask &= timestamps >= start
    if end is not None:
        mask &= timestamps < end
    return mask


def _forward_fill(col: np.ndarray) -> np.ndarray:
    idx = np.where(~np.isnan(col), np.arange(len(col)), 0)
    np.maximum.accumulate(idx, out=idx)
    out = col[idx]
    return out


def build_windows(
    frame: TimeSeriesFrame,
    history: int = 24,
    horizon: int = 24,
    fit_range=None,
    calendar: bool = True,
) -> WindowedDataset:
    """Slide a (history, horizon) window over the frame.

    Normalization statistics are fit on rows whose timestamp lies in
    ``fit_range`` = (start, end), half-open; ``None`` uses every row.
    Input gaps are forward-filled, then filled with the training mean.
    Windows whose horizon contains a missing target are dropped.
    """
    if history < 1 or horizon < 1:
        raise ContractError("history and horizon must be >= 1")
    n = len(frame)
    if n < history + horizon:
        raise EmptyDatasetError(
            f"frame of {n} hours is shorter than history+horizon = {history + horizon}"
        )
    target_names = list(frame.targets)
    input_names = target_names + frame.features
    raw_inputs = np.column_stack([frame.columns[c] for c in input_names]) if input_names else np.empty((n, 0))
    fit = _range_mask(frame.timestamps, fit_range)
    if not fit.any():
        raise EmptyDatasetError("normalization range selects no rows")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(raw_inputs[fit], axis=0)
        std = np.nanstd(raw_inputs[fit], axis=0)
    mean = np.where(np.isnan(mean), 0.0, mean)
    std = np.where(np.isnan(std) | (std < 1e-12), 1.0, std)

    filled = np.column_stack([_forward_fill(raw_inputs[:, j]) for j in range(raw_inputs.shape[1])]) \
        if raw_inputs.shape[1] else raw_inputs
    filled = np.where(np.isnan(filled), mean, filled)
    norm = (filled - mean) / std

    names = list(input_names)
    if calendar:
        s, c = _hour_features(frame.timestamps)
        norm = np.column_stack([norm, s, c])
        names += ["hour_sin", "hour_cos"]
        mean = np.concatenate([mean, [0.0, 0.0]])
        std = np.concatenate([std, [1.0, 1.0]])

    raw_targets = np.column_stack([frame.columns[c] for c in target_names])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        t_mean = np.nanmean(raw_targets[fit], axis=0)
        t_std = np.nanstd(raw_targets[fit], axis=0)
    t_mean = np.where(np.isnan(t_mean), 0.0, t_mean)
    t_std = np.where(np.isnan(t_std) | (t_std < 1e-12), 1.0, t_std)

    hours = frame.timestamps.astype("datetime64[h]").astype(np.int64)
    anchors = np.arange(history, n - horizon + 1)
    span_ok = (hours[anchors + horizon - 1] - hours[anchors - history]) == history + horizon - 1
    tgt_windows = np.stack([raw_targets[a : a + horizon] for a in anchors]) if len(anchors) else \
        np.empty((0, horizon, len(target_names)))
    complete = ~np.isnan(tgt_windows).any(axis=(1, 2))
    keep = anchors[span_ok & complete]
    if len(keep) == 0:
        raise EmptyDatasetError("no window has a complete target horizon")

    inputs = np.stack([norm[a - history : a] for a in keep])
    targets = np.stack([raw_targets[a : a + horizon] for a in keep])
    pollutants = [frame.targets[c] for c in target_names]
    labels = np.stack(
        [exceedance_label(targets[:, :, j], p) for j, p in enumerate(pollutants)], axis=2
    )
    stats = NormalizationStats(names, mean, std, target_names, t_mean, t_std)
    return WindowedDataset(
        inputs, targets, labels, frame.timestamps[keep], stats, pollutants, history, horizon
    )


def input_window(frame: TimeSeriesFrame, stats: NormalizationStats, anchor, history: int) -> np.ndarray:
    """Normalized (1, history, n_inputs) input for a forecast starting at ``anchor``.

    Uses the ``history`` hourly rows immediately before ``anchor`` with the
    same imputation as :func:`build_windows` and the stored statistics.
    """
    anchor = np.datetime64(anchor, "s")
    upto = frame.timestamps < anchor
    n = int(upto.sum())
    if n < history:
        raise EmptyDatasetError(
            f"forecast at {anchor} needs {history} hours of history, frame has {n}"
        )
    hours = frame.timestamps[:n].astype("datetime64[h]").astype(np.int64)
    want = anchor.astype("datetime64[h]").astype(np.int64) - np.arange(history, 0, -1)
    if not np.array_equal(hours[n - history :], want):
        raise EmptyDatasetError(f"the {history} hours before {anchor} are not all present")
    calendar = stats.input_names[-2:] == ["hour_sin", "hour_cos"]
    names = stats.input_names[:-2] if calendar else stats.input_names
    missing = [c for c in names if c not in frame.columns]
    if missing:
        raise DataError(f"frame lacks input columns {missing}")
    k = len(names)
    mean, std = stats.input_mean[:k], stats.input_std[:k]
    raw = np.column_stack([_forward_fill(frame.columns[c][:n]) for c in names])
    raw = np.where(np.isnan(raw), mean, raw)
    x = ((raw - mean) / std)[n - history :]
    if calendar:
        s, c = _hour_features(frame.timestamps[n - history : n])
        x = np.column_stack([x, s, c])
    return x[None]


def split_by_date(dataset: WindowedDataset, train_range, test_range):
    """Split samples by anchor timestamp into half-open (start, end) ranges."""
    tr = [np.datetime64(x, "s") for x in train_range]
    te = [np.datetime64(x, "s") for x in test_range]
    if tr[0] < te[1] and te[0] < tr[1]:
        raise ContractError(f"train range {train_range} overlaps test range {test_range}")
    train_mask = _range_mask(dataset.anchors, train_range)
    test_mask = _range_mask(dataset.anchors, test_range)
    train, test = dataset.subset(train_mask), dataset.subset(test_mask)
    if len(train) == 0:
        warnings.warn(f"train range {train_range} selects no samples", stacklevel=2)
    if len(test) == 0:
        warnings.warn(f"test range {test_range} selects no samples", stacklevel=2)
    return train, test


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

@dataclass
class SynthConfig:
    """Generative parameters for a synthetic multi-station frame.

    Each pollutant series is ``level + amplitude * sin(2π·hour/24 + phase)``
    plus i.i.d. noise.  When ``exceedance_rate`` is set, a two-state Markov
    chain marks pollution episodes with that stationary probability: values
    in episodes are lifted above the Very-Low bound and all other values are
    capped at it, so labels follow the episode indicator exactly.
    """

    stations: tuple = DEFAULT_STATIONS
    pollutants: tuple = ("PM2.5", "PM10")
    hours: int = 24 * 60
    seed: int = 0
    start: str = "2019-01-01T00:00:00"
    level: dict = field(default_factory=lambda: {"PM2.5": 9.0, "PM10": 15.0})
    amplitude: float = 3.0
    noise: str = "gaussian"
    noise_sigma: float = 2.0
    exceedance_rate: float | None = None
    episode_hours: float = 12.0
    episode_excess: float = 10.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stations"] = list(self.stations)
        d["pollutants"] = list(self.pollutants)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        d["stations"] = tuple(d.get("stations", DEFAULT_STATIONS))
        d["pollutants"] = tuple(d.get("pollutants", ("PM2.5", "PM10")))
        return cls(**d)


def _station_phase(j: int, n: int) -> float:
    return 2 * np.pi * j / max(n, 1)


def clean_signal(config: SynthConfig) -> dict[str, np.ndarray]:
    """Noise-free mean of every synthetic target column (before episodes)."""
    hours = np.arange(config.hours, dtype=np.float64)
    start_hour = np.datetime64(config.start, "h").astype(np.int64) % 24
    out = {}
    for j, s in enumerate(config.stations):
        for p in config.pollutants:
            p = canonical_pollutant(p)
            base = config.level[p] if isinstance(config.level, dict) else float(config.level)
            out[f"{s}_{p}"] = base + config.amplitude * np.sin(
                2 * np.pi * (hours + start_hour) / 24.0 + _station_phase(j, len(config.stations))
            )
    return out


def _draw_noise(rng: np.random.Generator, kind: str, sigma: float, n: int) -> np.ndarray:
    if sigma == 0:
        return np.zeros(n)
    if kind == "gaussian":
        return rng.normal(0.0, sigma, n)
    if kind == "laplace":
        return rng.laplace(0.0, sigma / np.sqrt(2.0), n)
    if kind == "student-t":
        # 5 dof, rescaled to standard deviation sigma
        return rng.standard_t(5, n) * sigma / np.sqrt(5.0 / 3.0)
    raise ContractError(f"unknown noise law {kind!r}")


def _episodes(rng: np.random.Generator, rate: float, mean_len: float, n: int) -> np.ndarray:
    if rate <= 0:
        return np.zeros(n, dtype=bool)
    if rate >= 1:
        return np.ones(n, dtype=bool)
    leave = 1.0 / mean_len
    enter = min(1.0, rate / (1.0 - rate) * leave)
    u = rng.random(n)
    state = np.zeros(n, dtype=bool)
    cur = rng.random() < rate
    for i in range(n):
        state[i] = cur
        cur = (u[i] >= leave) if cur else (u[i] < enter)
    return state


def synthesize(config: SynthConfig) -> TimeSeriesFrame:
    """Deterministic synthetic frame; ``frame.meta`` records the config."""
    rng = np.random.default_rng(config.seed)
    n = config.hours
    stamps = np.datetime64(config.start, "s") + np.arange(n) * np.timedelta64(3600, "s")
    hod = (stamps.astype("datetime64[h]").astype(np.int64) % 24).astype(np.float64)
    diurnal = np.sin(2 * np.pi * hod / 24.0)

    episode = _episodes(rng, config.exceedance_rate or 0.0, config.episode_hours, n) \
        if config.exceedance_rate is not None else np.zeros(n, dtype=bool)

    columns: dict[str, np.ndarray] = {}
    targets: dict[str, str] = {}
    clean = clean_signal(config)
    for name, mean in clean.items():
        p = canonical_pollutant(name.rsplit("_", 1)[1])
        v = mean + _draw_noise(rng, config.noise, config.noise_sigma, n)
        if config.exceedance_rate is not None:
            bound = very_low_upper(p)
            lift = bound + 0.5 + rng.exponential(config.episode_excess, n)
            v = np.where(episode, np.maximum(v, lift), np.minimum(v, bound))
        columns[name] = np.maximum(v, 0.0)
        targets[name] = p

    days = np.arange(n) / 24.0
    seasonal = np.cos(2 * np.pi * days / 365.0)
    columns["air_temperature"] = 2.0 - 8.0 * seasonal + 3.0 * diurnal + rng.normal(0, 1.0, n)
    columns["relative_humidity"] = np.clip(75 - 10 * diurnal + rng.normal(0, 5, n), 0, 100)
    columns["precipitation"] = np.where(rng.random(n) < 0.1, rng.exponential(1.0, n), 0.0)
    columns["air_pressure"] = 1010 + np.cumsum(rng.normal(0, 0.3, n)) * 0.2
    columns["wind_speed"] = np.maximum(3.5 - 2.0 * episode + rng.normal(0, 1.0, n), 0.0)
    columns["wind_direction"] = rng.uniform(0, 360, n)
    columns["snow_thickness"] = np.maximum(10 * seasonal + rng.normal(0, 1, n), 0.0)
    columns["sunshine_duration"] = np.clip(30 + 30 * diurnal + rng.normal(0, 5, n), 0, 60)
    columns["traffic_volume"] = np.maximum(600 + 400 * np.sin(2 * np.pi * (hod - 6) / 24) + rng.normal(0, 50, n), 0)
    columns["street_cleaning"] = (rng.random(n) < 0.05).astype(np.float64)

    meta = {"generator": "aqforecast.synthesize", "config": config.to_dict()}
    return TimeSeriesFrame(stamps, columns, targets, meta=meta)


def save_synthetic(frame: TimeSeriesFrame, directory, name: str = "synthetic") -> tuple[Path, Path]:
    """Write the frame CSV and its generator config next to it."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{name}.csv"
    meta_path = directory / f"{name}.json"
    write_csv(frame, csv_path)
    doc = dict(frame.meta)
    doc["schema"] = frame.schema().to_dict()
    meta_path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return csv_path, meta_path


def frame_columns(frame: TimeSeriesFrame, names: Sequence[str]) -> np.ndarray:
    return np.column_stack([frame.columns[n] for n in names])
