"""Per-day activity statistics on log-transformed actigraph counts."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Group, ParticipantSeries, RawDataset
from .exceptions import DomainError, ParseError, ValidationError

DEFAULT_FEATURES = ("mean_log", "std_log", "min_log", "max_log", "zero_count")
EXPORT_COLUMNS = (
    "participant_id", "date", "mean_log", "std_log", "min_log", "max_log",
    "zero_count", "zero_proportion", "label",
)


@dataclass(frozen=True)
class FeatureConfig:
    min_records: int = 60
    # swap zero_count for zero_proportion in the learner inputs
    use_zero_proportion: bool = False

    @property
    def feature_names(self) -> tuple:
        if self.use_zero_proportion:
            return DEFAULT_FEATURES[:-1] + ("zero_proportion",)
        return DEFAULT_FEATURES


@dataclass(frozen=True, eq=False)
class DaySegment:
    participant_id: str
    date: dt.date
    raw_activity: np.ndarray
    group: Group

    def __post_init__(self):
        if len(self.raw_activity) > 1440:
            raise ValidationError(f"{self.participant_id} {self.date}: more than 1440 records")


@dataclass(frozen=True)
class DayFeatures:
    mean_log: float
    std_log: float
    min_log: float
    max_log: float
    zero_count: int
    zero_proportion: float
    label: int

    def vector(self, names: Sequence[str] = DEFAULT_FEATURES) -> list:
        return [float(getattr(self, n)) for n in names]


@dataclass(frozen=True, eq=False)
class LabeledFeatureMatrix:
    rows: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64 in {0, 1}
    feature_names: tuple
    provenance: tuple  # (participant_id, iso date) per row

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if rows.ndim != 2:
            rows = rows.reshape(len(labels), -1) if rows.size else np.zeros((len(labels), len(self.feature_names)))
        if not (len(rows) == len(labels) == len(self.provenance)):
            raise ValidationError("rows, labels and provenance must have equal length")
        if rows.shape[1] != len(self.feature_names):
            raise ValidationError("row width does not match feature_names")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValidationError("labels must be 0 or 1")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "provenance", tuple(tuple(p) for p in self.provenance))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def participant_ids(self) -> list:
        return [p[0] for p in self.provenance]


def log_transform(activity):
    """``ln(1 + activity)``; accepts a scalar or an array."""
    a = np.asarray(activity, dtype=np.float64)
    if np.any(~(a >= 0)):
        raise DomainError(f"log_transform needs activity >= 0, got {activity!r}")
    out = np.log1p(a)
    return float(out) if out.ndim == 0 else out


def segment_by_date(series: ParticipantSeries, min_records: int = 60) -> list:
    if min_records < 1:
        raise ValidationError("min_records must be >= 1")
    if len(series) == 0:
        return []
    order = np.argsort(series.timestamps, kind="stable")
    ts = series.timestamps[order]
    act = series.activity[order]
    days = ts.astype("datetime64[D]")
    uniq, starts, counts = np.unique(days, return_index=True, return_counts=True)
    out = []
    for day, lo, n in zip(uniq, starts, counts):
        if n < min_records:
            continue
        out.append(DaySegment(series.participant_id, day.astype(dt.date), act[lo:lo + n].copy(), series.group))
    return out


def extract_day_features(segment: DaySegment) -> DayFeatures:
    raw = np.asarray(segment.raw_activity, dtype=np.float64)
    if raw.size == 0:
        raise ValidationError(f"{segment.participant_id} {segment.date}: empty segment")
    logged = log_transform(raw)
    logged = np.atleast_1d(logged)
    mean = float(logged.mean())
    zeros = int(np.count_nonzero(raw == 0))
    return DayFeatures(
        mean_log=mean,
        std_log=float(np.sqrt(np.mean((logged - mean) ** 2))),
        min_log=float(logged.min()),
        max_log=float(logged.max()),
        zero_count=zeros,
        zero_proportion=zeros / raw.size,
        label=1 if Group(segment.group) is Group.CONDITION else 0,
    )


def build_day_table(dataset: RawDataset, config: FeatureConfig = FeatureConfig()) -> list:
    """``(participant_id, date, DayFeatures)`` for every retained day.

    Condition participants come first, then controls, each in dataset order;
    days are date-sorted within a participant.
    """
    table = []
    for series in dataset.condition + dataset.control:
        for seg in segment_by_date(series, config.min_records):
            table.append((series.participant_id, seg.date, extract_day_features(seg)))
    return table


def matrix_from_table(table, config: FeatureConfig = FeatureConfig()) -> LabeledFeatureMatrix:
    names = config.feature_names
    if not table:
        raise ValidationError("no participant-days survived segmentation; nothing to learn from")
    return LabeledFeatureMatrix(
        rows=np.array([f.vector(names) for _, _, f in table], dtype=np.float64),
        labels=np.array([f.label for _, _, f in table], dtype=np.int64),
        feature_names=names,
        provenance=[(pid, d.isoformat()) for pid, d, _ in table],
    )


def build_feature_matrix(dataset: RawDataset, config: FeatureConfig = FeatureConfig()) -> LabeledFeatureMatrix:
    return matrix_from_table(build_day_table(dataset, config), config)


def write_feature_csv(table, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EXPORT_COLUMNS)
        for pid, day, f in table:
            w.writerow([pid, day.isoformat(), repr(f.mean_log), repr(f.std_log), repr(f.min_log),
                        repr(f.max_log), f.zero_count, repr(f.zero_proportion), f.label])


def read_feature_table(path) -> list:
    path = Path(path)
    table = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EXPORT_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"feature CSV lacks columns {missing}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                f = DayFeatures(
                    mean_log=float(row["mean_log"]), std_log=float(row["std_log"]),
                    min_log=float(row["min_log"]), max_log=float(row["max_log"]),
                    zero_count=int(row["zero_count"]), zero_proportion=float(row["zero_proportion"]),
                    label=int(row["label"]),
                )
                day = dt.date.fromisoformat(row["date"])
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), path, lineno) from None
            if f.label not in (0, 1):
                raise ParseError("label must be 0 or 1", path, lineno)
            table.append((row["participant_id"], day, f))
    return table


def read_feature_csv(path, config: FeatureConfig = FeatureConfig()) -> LabeledFeatureMatrix:
    return matrix_from_table(read_feature_table(path), config)
