"""Actigraph dataset ingestion and synthetic cohort generation.

On-disk layout (the public actigraphy depression dataset layout)::

    root/
      condition/<participant_id>.csv   # timestamp,date,activity
      control/<participant_id>.csv
      scores.csv                       # number,days,gender,age,afftype,...

Series are stored column-wise (``datetime64[s]`` timestamps, ``float64``
activity) because a real cohort is a few million minutes; ``records`` gives
the per-row view when it is wanted.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import ParseError, ValidationError
from .seeding import STREAM_SYNTH, make_rng

ACTIGRAPH_COLUMNS = ("timestamp", "date", "activity")
SCORES_COLUMNS = (
    "number", "days", "gender", "age", "afftype", "melanch",
    "inpatient", "edu", "marriage", "work", "madrs1", "madrs2",
)
SCORES_FILENAME = "scores.csv"
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
MINUTES_PER_DAY = 1440


class Group(str, enum.Enum):
    CONDITION = "condition"
    CONTROL = "control"


@dataclass(frozen=True)
class ActigraphRecord:
    timestamp: dt.datetime
    date: dt.date
    activity: float

    def __post_init__(self):
        if not self.activity >= 0:
            raise ValidationError(f"activity must be >= 0, got {self.activity}")
        if self.timestamp.date() != self.date:
            raise ValidationError(f"date {self.date} does not match timestamp {self.timestamp}")


@dataclass(frozen=True, eq=False)
class ParticipantSeries:
    participant_id: str
    group: Group
    timestamps: np.ndarray  # datetime64[s]
    activity: np.ndarray  # float64, >= 0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        act = np.asarray(self.activity, dtype=np.float64)
        if ts.shape != act.shape or ts.ndim != 1:
            raise ValidationError("timestamps and activity must be 1-D and equal length")
        if act.size and not np.all(act >= 0):
            raise ValidationError(f"{self.participant_id}: negative activity")
        ts.flags.writeable = False
        act.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "activity", act)
        object.__setattr__(self, "group", Group(self.group))

    def __len__(self) -> int:
        return int(self.activity.size)

    def __eq__(self, other):
        if not isinstance(other, ParticipantSeries):
            return NotImplemented
        return (
            self.participant_id == other.participant_id
            and self.group == other.group
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.activity, other.activity)
        )

    @property
    def dates(self) -> np.ndarray:
        return self.timestamps.astype("datetime64[D]")

    @property
    def records(self) -> Iterator[ActigraphRecord]:
        for t, a in zip(self.timestamps.tolist(), self.activity.tolist()):
            yield ActigraphRecord(t, t.date(), a)

    @classmethod
    def from_records(cls, participant_id, group, records: Sequence[ActigraphRecord]):
        ts = np.array([r.timestamp for r in records], dtype="datetime64[s]")
        act = np.array([r.activity for r in records], dtype=np.float64)
        return cls(participant_id, Group(group), ts, act)


@dataclass(frozen=True)
class ParticipantMeta:
    """One scores-file row. ``None`` marks a missing cell."""

    participant_id: str
    days_measured: Optional[int] = None
    gender: Optional[str] = None
    age_group: Optional[str] = None
    afftype: Optional[str] = None
    melancholia: Optional[str] = None
    inpatient_status: Optional[str] = None
    education_years: Optional[str] = None
    marital_status: Optional[str] = None
    employment: Optional[str] = None
    madrs_start: Optional[int] = None
    madrs_end: Optional[int] = None
    matched: bool = True

    def __post_init__(self):
        if self.days_measured is not None and self.days_measured < 1:
            raise ValidationError(f"{self.participant_id}: days must be >= 1")
        for score in (self.madrs_start, self.madrs_end):
            if score is not None and not 0 <= score <= 60:
                raise ValidationError(f"{self.participant_id}: MADRS score {score} outside [0, 60]")


@dataclass(frozen=True)
class RawDataset:
    condition: tuple
    control: tuple
    meta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "condition", tuple(self.condition))
        object.__setattr__(self, "control", tuple(self.control))
        object.__setattr__(self, "meta", tuple(self.meta))
        seen = set()
        for s in self.participants:
            if s.participant_id in seen:
                raise ValidationError(f"duplicate participant_id {s.participant_id!r}")
            seen.add(s.participant_id)

    @property
    def participants(self) -> tuple:
        return self.condition + self.control


# ---------------------------------------------------------------------------
# loading


def _parse_timestamps(values: list, path, linenos: list) -> np.ndarray:
    try:
        ts = np.array(values, dtype="datetime64[s]")
    except ValueError:
        ts = None
    if ts is not None and not np.isnat(ts).any():
        return ts
    for i, v in enumerate(values):
        try:
            dt.datetime.strptime(v, TIMESTAMP_FORMAT)
        except ValueError:
            raise ParseError(f"bad timestamp {v!r}", path, linenos[i]) from None
    # numpy accepted nothing but strptime accepted everything; should not happen
    raise ParseError("bad timestamps", path)


def load_actigraph_file(path, participant_id: str, group) -> ParticipantSeries:
    """Read one participant's ``timestamp,date,activity`` CSV.

    Raises ``FileNotFoundError`` for a missing file, ``ParseError`` (with the
    1-based line number) for malformed rows and ``ValidationError`` for
    negative activity, a date column disagreeing with its timestamp, or rows
    not in time order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("missing header row", path, 1)
        header = [h.strip().strip('"') for h in header]
        try:
            cols = [header.index(c) for c in ACTIGRAPH_COLUMNS]
        except ValueError:
            raise ParseError(f"header must name {','.join(ACTIGRAPH_COLUMNS)}; got {header}", path, 1) from None
        width = len(header)
        stamps, dates, acts, linenos = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", path, lineno)
            stamps.append(row[cols[0]].strip())
            dates.append(row[cols[1]].strip())
            acts.append(row[cols[2]].strip())
            linenos.append(lineno)

    if not stamps:
        return ParticipantSeries(participant_id, Group(group), np.array([], "datetime64[s]"), np.array([]))

    try:
        activity = np.array(acts, dtype=np.float64)
    except ValueError:
        for i, a in enumerate(acts):
            try:
                float(a)
            except ValueError:
                raise ParseError(f"bad activity {a!r}", path, linenos[i]) from None
        raise
    bad = np.flatnonzero(~(activity >= 0))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"{path}:{linenos[i]}: activity must be >= 0, got {acts[i]}")

    timestamps = _parse_timestamps(stamps, path, linenos)
    try:
        day_col = np.array(dates, dtype="datetime64[D]")
    except ValueError:
        day_col = None
    if day_col is None or np.isnat(day_col).any():
        for i, d in enumerate(dates):
            try:
                dt.date.fromisoformat(d)
            except ValueError:
                raise ParseError(f"bad date {d!r}", path, linenos[i]) from None
        day_col = np.array([dt.date.fromisoformat(d) for d in dates], dtype="datetime64[D]")
    mismatch = np.flatnonzero(day_col != timestamps.astype("datetime64[D]"))
    if mismatch.size:
        i = int(mismatch[0])
        raise ValidationError(f"{path}:{linenos[i]}: date {dates[i]} does not match timestamp {stamps[i]}")
    backwards = np.flatnonzero(np.diff(timestamps) < np.timedelta64(0, "s"))
    if backwards.size:
        raise ValidationError(f"{path}:{linenos[int(backwards[0]) + 1]}: timestamps not in non-decreasing order")

    return ParticipantSeries(participant_id, Group(group), timestamps, activity)


def _natural_key(s: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def _opt_int(value: str, path, lineno, name):
    value = value.strip()
    if value == "":
        return None
    try:
        return int(float(value))
    except ValueError:
        raise ParseError(f"bad integer for {name}: {value!r}", path, lineno) from None


def _opt_str(value: str):
    value = value.strip()
    return value or None


def load_scores(path) -> list:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SCORES_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"scores file lacks columns {missing}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            pid = (row["number"] or "").strip()
            if not pid:
                raise ParseError("empty participant number", path, lineno)
            out.append(ParticipantMeta(
                participant_id=pid,
                days_measured=_opt_int(row["days"], path, lineno, "days"),
                gender=_opt_str(row["gender"]),
                age_group=_opt_str(row["age"]),
                afftype=_opt_str(row["afftype"]),
                melancholia=_opt_str(row["melanch"]),
                inpatient_status=_opt_str(row["inpatient"]),
                education_years=_opt_str(row["edu"]),
                marital_status=_opt_str(row["marriage"]),
                employment=_opt_str(row["work"]),
                madrs_start=_opt_int(row["madrs1"], path, lineno, "madrs1"),
                madrs_end=_opt_int(row["madrs2"], path, lineno, "madrs2"),
            ))
    return out


def load_dataset(root_dir) -> RawDataset:
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    cohorts = {}
    for group in Group:
        sub = root / group.value
        if not sub.is_dir():
            raise FileNotFoundError(f"missing cohort directory: {sub}")
        files = sorted(sub.glob("*.csv"), key=lambda p: _natural_key(p.stem))
        cohorts[group] = [load_actigraph_file(f, f.stem, group) for f in files]

    ids = {s.participant_id for g in cohorts.values() for s in g}
    dup = {s.participant_id for s in cohorts[Group.CONDITION]} & {s.participant_id for s in cohorts[Group.CONTROL]}
    if dup:
        raise ValidationError(f"participant ids in both cohorts: {sorted(dup, key=_natural_key)}")

    scores_path = root / SCORES_FILENAME
    meta = []
    if scores_path.is_file():
        for m in load_scores(scores_path):
            if m.participant_id not in ids:
                m = replace(m, matched=False)
            meta.append(m)
        meta.sort(key=lambda m: _natural_key(m.participant_id))
    else:
        warnings.warn(f"no {SCORES_FILENAME} under {root}; participant metadata left empty", stacklevel=2)
    return RawDataset(cohorts[Group.CONDITION], cohorts[Group.CONTROL], meta)


# ---------------------------------------------------------------------------
# writing


def write_actigraph_file(series: ParticipantSeries, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamps = np.datetime_as_string(series.timestamps, unit="s")
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(ACTIGRAPH_COLUMNS) + "\n")
        lines = [
            f"{s[:10]} {s[11:]},{s[:10]},{_fmt_activity(a)}\n"
            for s, a in zip(stamps.tolist(), series.activity.tolist())
        ]
        fh.writelines(lines)


def _fmt_activity(a: float) -> str:
    return str(int(a)) if float(a).is_integer() else repr(float(a))


def write_scores(meta: Sequence[ParticipantMeta], path) -> None:
    def cell(v):
        return "" if v is None else str(v)

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORES_COLUMNS)
        for m in meta:
            w.writerow([cell(v) for v in (
                m.participant_id, m.days_measured, m.gender, m.age_group, m.afftype,
                m.melancholia, m.inpatient_status, m.education_years,
                m.marital_status, m.employment, m.madrs_start, m.madrs_end,
            )])


def write_dataset(dataset: RawDataset, root_dir) -> list:
    """Write ``dataset`` in the on-disk layout. Returns the written paths."""
    root = Path(root_dir)
    written = []
    for s in dataset.participants:
        p = root / s.group.value / f"{s.participant_id}.csv"
        write_actigraph_file(s, p)
        written.append(p)
    root.mkdir(parents=True, exist_ok=True)
    write_scores(dataset.meta, root / SCORES_FILENAME)
    written.append(root / SCORES_FILENAME)
    return written


# ---------------------------------------------------------------------------
# synthetic cohorts


@dataclass(frozen=True)
class SynthRecipe:
    """Generative recipe for synthetic cohorts.

    Each participant gets a personal mean level drawn log-normally around its
    cohort's mean; each minute's count is negative-binomial with that mean
    modulated by a day/night curve. The lower condition mean also yields
    more zero minutes.
    """

    condition_mean: float = 90.0
    control_mean: float = 260.0
    participant_sigma: float = 0.15
    dispersion: float = 0.6  # NB shape; smaller = more overdispersed
    night_factor: float = 0.1
    start: str = "2003-05-07"


def generate_synthetic_cohort(n_condition: int, n_control: int, days_per_participant: int,
                              seed: int, recipe: SynthRecipe = SynthRecipe()) -> RawDataset:
    for name, v in (("n_condition", n_condition), ("n_control", n_control),
                    ("days_per_participant", days_per_participant)):
        if int(v) != v or v < 1:
            raise ValidationError(f"{name} must be a positive integer, got {v!r}")
    rng = make_rng(seed, STREAM_SYNTH)
    n_min = days_per_participant * MINUTES_PER_DAY
    start = np.datetime64(recipe.start, "s")
    timestamps = start + np.arange(n_min) * np.timedelta64(60, "s")
    minute_of_day = np.arange(n_min) % MINUTES_PER_DAY
    # smooth day/night profile peaking mid-afternoon, floor at night_factor
    profile = recipe.night_factor + (1 - recipe.night_factor) * 0.5 * (
        1 - np.cos(2 * np.pi * (minute_of_day - 240) / MINUTES_PER_DAY))
    profile = profile / profile.mean()

    cohorts = {Group.CONDITION: [], Group.CONTROL: []}
    meta = []
    plan = [(Group.CONDITION, i + 1, recipe.condition_mean) for i in range(n_condition)]
    plan += [(Group.CONTROL, i + 1, recipe.control_mean) for i in range(n_control)]
    for group, k, cohort_mean in plan:
        pid = f"{group.value}_{k}"
        level = cohort_mean * np.exp(rng.normal(0.0, recipe.participant_sigma))
        mu = level * profile
        r = recipe.dispersion
        counts = rng.negative_binomial(r, r / (r + mu)).astype(np.float64)
        cohorts[group].append(ParticipantSeries(pid, group, timestamps, counts))
        if group is Group.CONDITION:
            m1 = int(rng.integers(15, 36))
            m2 = int(np.clip(m1 + rng.integers(-8, 4), 0, 60))
            meta.append(ParticipantMeta(pid, days_per_participant, str(int(rng.integers(1, 3))),
                                        None, str(int(rng.integers(1, 4))), None, None, None,
                                        None, None, m1, m2))
        else:
            meta.append(ParticipantMeta(pid, days_per_participant, str(int(rng.integers(1, 3)))))
    return RawDataset(cohorts[Group.CONDITION], cohorts[Group.CONTROL], meta)
