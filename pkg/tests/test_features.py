import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from actihybrid.data import Group, ParticipantSeries, RawDataset, generate_synthetic_cohort
from actihybrid.exceptions import DomainError, ValidationError
from actihybrid.features import (
    DaySegment, FeatureConfig, build_day_table, build_feature_matrix, extract_day_features,
    log_transform, read_feature_csv, read_feature_table, segment_by_date, write_feature_csv,
)


def two_pass_oracle(raw):
    """Naive statistics over ln(1 + x), population std."""
    logged = [math.log(1.0 + x) for x in raw]
    n = len(logged)
    mean = sum(logged) / n
    var = sum((v - mean) ** 2 for v in logged) / n
    zeros = sum(1 for x in raw if x == 0)
    return {"mean_log": mean, "std_log": math.sqrt(var), "min_log": min(logged),
            "max_log": max(logged), "zero_count": zeros, "zero_proportion": zeros / n}


def seg(raw, group=Group.CONDITION):
    return DaySegment("p", dt.date(2020, 1, 1), np.asarray(raw, dtype=float), group)


def series_from(pid, group, stamps, acts):
    return ParticipantSeries(pid, group, np.array(stamps, dtype="datetime64[s]"), np.array(acts, dtype=float))


def test_log_transform_values():
    assert log_transform(0) == 0.0
    assert log_transform(math.e - 1) == pytest.approx(1.0, abs=1e-12)
    assert log_transform(100) == pytest.approx(4.61512, abs=1e-5)
    with pytest.raises(DomainError):
        log_transform(-1)


@given(st.floats(0, 1e9), st.floats(0, 1e9))
def test_log_transform_monotone(a, b):
    lo, hi = sorted((a, b))
    assert log_transform(lo) <= log_transform(hi)


def test_worked_example():
    f = extract_day_features(seg([0, 0, 10, 100]))
    assert f.mean_log == pytest.approx(1.75325, abs=1e-5)
    # two-pass oracle value; sqrt(14.753644 / 4) from the transformed values
    assert f.std_log == pytest.approx(1.9205235, abs=1e-6)
    assert f.min_log == 0.0
    assert f.max_log == pytest.approx(4.61512, abs=1e-5)
    assert (f.zero_count, f.zero_proportion, f.label) == (2, 0.5, 1)


def test_constant_segment():
    f = extract_day_features(seg([5, 5, 5, 5], Group.CONTROL))
    assert f.std_log == 0 and f.zero_count == 0 and f.label == 0
    assert f.mean_log == f.min_log == f.max_log == pytest.approx(math.log(6), abs=1e-12)


def test_single_zero():
    f = extract_day_features(seg([0]))
    assert (f.mean_log, f.std_log, f.zero_count, f.zero_proportion) == (0, 0, 1, 1)


def test_empty_segment_rejected():
    with pytest.raises(ValidationError):
        extract_day_features(seg([]))


activity = st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 5000)), min_size=1, max_size=200)


@given(activity)
def test_matches_two_pass_oracle(raw):
    f = extract_day_features(seg(raw))
    ref = two_pass_oracle(raw)
    for k in ("mean_log", "std_log", "min_log", "max_log", "zero_proportion"):
        assert getattr(f, k) == pytest.approx(ref[k], rel=1e-9, abs=1e-12)
    assert f.zero_count == ref["zero_count"]
    assert f.min_log <= f.mean_log + 1e-12 and f.mean_log <= f.max_log + 1e-12


@given(activity, st.floats(0.01, 100))
def test_zero_count_scale_invariant(raw, c):
    a = extract_day_features(seg(raw))
    b = extract_day_features(seg([x * c for x in raw]))
    assert (a.zero_count, a.zero_proportion) == (b.zero_count, b.zero_proportion)


@given(activity)
def test_appending_zero(raw):
    a = extract_day_features(seg(raw))
    b = extract_day_features(seg(list(raw) + [0.0]))
    assert b.mean_log <= a.mean_log + 1e-12
    assert b.zero_count == a.zero_count + 1


def _days(n_days, per_day=1440, start="2020-01-01"):
    t0 = np.datetime64(start, "s")
    return [t0 + np.timedelta64(86400 * d + 60 * m, "s") for d in range(n_days) for m in range(per_day)]


def test_segment_three_full_days():
    stamps = _days(3)
    s = series_from("p", Group.CONTROL, stamps, np.ones(len(stamps)))
    segs = segment_by_date(s, 60)
    assert [x.date for x in segs] == [dt.date(2020, 1, 1), dt.date(2020, 1, 2), dt.date(2020, 1, 3)]
    assert all(len(x.raw_activity) == 1440 for x in segs)


def test_short_day_dropped():
    stamps = _days(1, per_day=10)
    s = series_from("p", Group.CONTROL, stamps, np.ones(10))
    assert segment_by_date(s, 60) == []


def test_interleaved_dates_sorted():
    rng = np.random.default_rng(0)
    stamps = _days(3, per_day=70)
    acts = np.arange(len(stamps), dtype=float)
    perm = rng.permutation(len(stamps))
    s = series_from("p", Group.CONTROL, [stamps[i] for i in perm], acts[perm])
    segs = segment_by_date(s, 60)
    # sort oracle: sort (time, activity) pairs, group by day
    pairs = sorted(zip([stamps[i] for i in perm], acts[perm]))
    expected = {}
    for t, a in pairs:
        expected.setdefault(t.astype("datetime64[D]").astype(dt.date), []).append(a)
    assert [x.date for x in segs] == sorted(expected)
    for x in segs:
        assert x.raw_activity.tolist() == expected[x.date]


def test_build_matrix_order_and_labels():
    c = series_from("c1", Group.CONDITION, _days(2), np.zeros(2880))
    k = series_from("k1", Group.CONTROL, _days(3), np.ones(4320))
    m = build_feature_matrix(RawDataset([c], [k]))
    assert m.rows.shape == (5, 5)
    assert m.labels.tolist() == [1, 1, 0, 0, 0]
    assert m.feature_names == ("mean_log", "std_log", "min_log", "max_log", "zero_count")
    assert m.provenance[0] == ("c1", "2020-01-01") and m.provenance[-1] == ("k1", "2020-01-03")
    again = build_feature_matrix(RawDataset([c], [k]))
    assert again.rows.tobytes() == m.rows.tobytes()


def test_zero_proportion_flag():
    c = series_from("c1", Group.CONDITION, _days(1), np.zeros(1440))
    k = series_from("k1", Group.CONTROL, _days(1), np.ones(1440))
    m = build_feature_matrix(RawDataset([c], [k]), FeatureConfig(use_zero_proportion=True))
    assert m.feature_names[-1] == "zero_proportion"
    assert m.rows[:, -1].tolist() == [1.0, 0.0]


def test_no_rows_is_error():
    c = series_from("c1", Group.CONDITION, _days(1, per_day=5), np.zeros(5))
    with pytest.raises(ValidationError):
        build_feature_matrix(RawDataset([c], []))


def test_synthetic_matrix_size():
    m = build_feature_matrix(generate_synthetic_cohort(5, 5, 14, seed=42))
    assert len(m) == 140
    assert int(m.labels.sum()) == 70


def test_feature_csv_round_trip(tmp_path):
    table = build_day_table(generate_synthetic_cohort(1, 1, 2, seed=1))
    write_feature_csv(table, tmp_path / "f.csv")
    assert read_feature_table(tmp_path / "f.csv") == table
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "participant_id,date,mean_log,std_log,min_log,max_log,zero_count,zero_proportion,label"
    m = read_feature_csv(tmp_path / "f.csv")
    assert m.rows.shape == (4, 5)
