"""Hybrid stacking pipeline: split, standardize, forest + network, meta-forest.

Two evaluation modes:

``faithful``
    The meta-forest is fit on the test-set (forest, network) predictions
    with the test labels and scored on those same rows. This reproduces the
    published procedure, including its use of evaluation labels for training.
``audited``
    The test set is halved (seeded). The meta-forest is fit on one half and
    all three models are scored on the other, untouched half.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ValidationError
from .features import LabeledFeatureMatrix
from .forest import Forest, ForestParams, predict_forest, train_forest
from .metrics import EvaluationReport, classification_report
from .neuralnet import NetworkParameters, TrainConfig, predict_network, train_network
from .seeding import STREAM_META_SPLIT, STREAM_SPLIT, make_rng

MODES = ("faithful", "audited")
SPLIT_BY = ("row", "participant")
REPORT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    # forests (base and meta)
    n_estimators: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    random_state: int = 42
    max_features: str = "sqrt"
    # network
    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 16
    threshold: float = 0.5
    shuffle: bool = True
    # orchestration
    seed: int = 42
    test_fraction: float = 0.2
    stratified: bool = False
    split_by: str = "row"
    mode: str = "faithful"
    # featurization (used when the pipeline starts from raw data)
    min_records: int = 60
    use_zero_proportion: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.split_by not in SPLIT_BY:
            raise ValidationError(f"split_by must be one of {SPLIT_BY}, got {self.split_by!r}")
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test_fraction must lie in (0, 1)")
        self.forest_params()
        self.train_config()

    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_estimators=self.n_estimators, max_depth=self.max_depth,
            min_samples_split=self.min_samples_split, min_samples_leaf=self.min_samples_leaf,
            random_state=self.random_state, max_features=self.max_features,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, batch_size=self.batch_size,
            seed=self.seed, threshold=self.threshold, shuffle=self.shuffle,
        )


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    if name == "max_depth":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into typed overrides."""
    defaults = PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value, getattr(defaults, key))
        except ValueError as exc:
            raise ValidationError(f"config line {lineno}: {exc}") from None
    return out


def load_config(path) -> PipelineConfig:
    return PipelineConfig(**parse_config_text(Path(path).read_text(encoding="utf-8")))


def dump_config(config: PipelineConfig) -> str:
    lines = []
    for f in fields(config):
        v = getattr(config, f.name)
        lines.append(f"{f.name} = {'none' if v is None else str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# split & scale


@dataclass(frozen=True)
class SplitIndices:
    train: tuple
    test: tuple
    seed: int
    stratified: bool
    split_by: str = "row"

    def to_dict(self) -> dict:
        return {"train": list(self.train), "test": list(self.test), "seed": self.seed,
                "stratified": self.stratified, "split_by": self.split_by}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _stratified_quota(class_sizes: dict, n_test: int, test_fraction: float) -> dict:
    # largest-remainder allocation so the per-class quotas sum to n_test
    exact = {c: test_fraction * m for c, m in class_sizes.items()}
    quota = {c: int(math.floor(v)) for c, v in exact.items()}
    short = n_test - sum(quota.values())
    for c in sorted(exact, key=lambda c: (-(exact[c] - quota[c]), c))[:max(short, 0)]:
        quota[c] += 1
    return quota


def split_train_test(n: int, test_fraction: float = 0.2, seed: int = 42, stratified: bool = False,
                     labels: Optional[Sequence[int]] = None, groups: Optional[Sequence] = None) -> SplitIndices:
    """Seeded shuffle, then cut the first ``round(test_fraction * n)`` rows off as test.

    With ``stratified`` the cut is made per class (quotas summing to the same
    test size) and merged. With ``groups`` whole groups are assigned to one
    side: ``round(test_fraction * n_groups)`` shuffled groups form the test set.
    Both index lists are returned sorted.
    """
    if n < 5:
        raise ValidationError(f"need at least 5 rows to split, got {n}")
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must lie in (0, 1)")
    rng = make_rng(seed, STREAM_SPLIT)

    if groups is not None:
        if stratified:
            raise ValidationError("stratified splitting is not supported together with group splitting")
        groups = list(groups)
        if len(groups) != n:
            raise ValidationError("groups must have one entry per row")
        uniq = sorted(set(groups), key=str)
        if len(uniq) < 2:
            raise ValidationError("group split needs at least 2 groups")
        n_test_groups = min(max(_round_half_up(test_fraction * len(uniq)), 1), len(uniq) - 1)
        perm = rng.permutation(len(uniq))
        test_groups = {uniq[i] for i in perm[:n_test_groups]}
        test = [i for i, g in enumerate(groups) if g in test_groups]
        train = [i for i, g in enumerate(groups) if g not in test_groups]
        return SplitIndices(tuple(train), tuple(test), seed, False, "participant")

    n_test = _round_half_up(test_fraction * n)
    if not 0 < n_test < n:
        raise ValidationError(f"test fraction {test_fraction} leaves an empty side for n = {n}")
    if not stratified:
        perm = rng.permutation(n)
        return SplitIndices(tuple(sorted(perm[n_test:].tolist())), tuple(sorted(perm[:n_test].tolist())),
                            seed, False)

    if labels is None or len(labels) != n:
        raise ValidationError("stratified split needs one label per row")
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    sizes = {c: int(np.sum(labels == c)) for c in classes}
    quota = _stratified_quota(sizes, n_test, test_fraction)
    train, test = [], []
    for c in classes:
        members = np.flatnonzero(labels == c)
        perm = members[rng.permutation(len(members))]
        k = quota[c]
        if k == 0 or k == len(members):
            raise ValidationError(f"class {c} has too few rows ({len(members)}) to appear on both sides of the split")
        test.extend(perm[:k].tolist())
        train.extend(perm[k:].tolist())
    if len(classes) < 2:
        raise ValidationError("stratified split needs both classes present")
    return SplitIndices(tuple(sorted(train)), tuple(sorted(test)), seed, True)


@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    stds: np.ndarray  # zero-variance columns stored as 1
    constant: np.ndarray  # bool per column

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist(), "constant": self.constant.tolist()}


def fit_scaler(X_train) -> Scaler:
    X = np.asarray(X_train, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("cannot fit a scaler on an empty matrix")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0
    return Scaler(means, np.where(constant, 1.0, stds), constant)


def apply_scaler(scaler: Scaler, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(scaler.means):
        raise ValidationError(f"expected width {len(scaler.means)}, got shape {X.shape}")
    return (X - scaler.means) / scaler.stds


def combine_predictions(rf_preds, nn_preds) -> np.ndarray:
    """Stack two binary prediction vectors into an ``(n, 2)`` meta matrix."""
    rf = np.asarray(rf_preds, dtype=np.int64).reshape(-1)
    nn = np.asarray(nn_preds, dtype=np.int64).reshape(-1)
    if len(rf) != len(nn):
        raise ValidationError(f"{len(rf)} forest predictions but {len(nn)} network predictions")
    if not (np.isin(rf, (0, 1)).all() and np.isin(nn, (0, 1)).all()):
        raise ValidationError("meta features must be binary")
    return np.column_stack([rf, nn]) if len(rf) else np.zeros((0, 2), dtype=np.int64)


# ---------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True)
class HybridArtifacts:
    scaler: Scaler
    forest: Forest
    network: NetworkParameters
    meta_forest: Forest
    loss_trace: tuple


@dataclass(frozen=True)
class HybridReport:
    rf_report: EvaluationReport
    nn_report: EvaluationReport
    hybrid_report: EvaluationReport
    mode: str
    config: dict
    split: dict
    artifacts: Optional[HybridArtifacts] = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "format": "actihybrid.report",
            "version": REPORT_FORMAT_VERSION,
            "mode": self.mode,
            "config": self.config,
            "split": self.split,
            "models": {
                "random_forest": self.rf_report.to_dict(),
                "neural_network": self.nn_report.to_dict(),
                "hybrid": self.hybrid_report.to_dict(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "HybridReport":
        d = json.loads(text)
        if d.get("format") != "actihybrid.report":
            raise ValidationError("not an actihybrid report document")
        m = d["models"]
        return cls(EvaluationReport.from_dict(m["random_forest"]), EvaluationReport.from_dict(m["neural_network"]),
                   EvaluationReport.from_dict(m["hybrid"]), d["mode"], d["config"], d["split"])


def _meta_split(n_test: int, seed: int):
    """Positions (into the test set) for meta-train and meta-eval halves."""
    perm = make_rng(seed, STREAM_META_SPLIT).permutation(n_test)
    half = n_test // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def run_hybrid_pipeline(matrix: LabeledFeatureMatrix, config: PipelineConfig = PipelineConfig(),
                        n_jobs: int = 1) -> HybridReport:
    X, y = matrix.rows, matrix.labels
    for c in (0, 1):
        if np.sum(y == c) < 2:
            raise ValidationError(f"need at least 2 rows of class {c}, got {int(np.sum(y == c))}")

    groups = matrix.participant_ids if config.split_by == "participant" else None
    split = split_train_test(len(y), config.test_fraction, config.seed, config.stratified, y, groups)
    tr, te = np.array(split.train), np.array(split.test)
    if len(set(y[tr].tolist())) < 2:
        raise ValidationError("training split contains a single class; try another seed or --stratified")

    scaler = fit_scaler(X[tr])
    X_tr, X_te = apply_scaler(scaler, X[tr]), apply_scaler(scaler, X[te])
    y_tr, y_te = y[tr], y[te]

    fparams = config.forest_params()
    forest = train_forest(X_tr, y_tr, fparams, n_jobs=n_jobs)
    rf_pred = predict_forest(forest, X_te)
    tcfg = config.train_config()
    trained = train_network(X_tr, y_tr, tcfg)
    nn_pred = predict_network(trained.params, X_te, tcfg.threshold)
    meta = combine_predictions(rf_pred, nn_pred)

    split_info = split.to_dict()
    if config.mode == "faithful":
        meta_forest = train_forest(meta, y_te, fparams, n_jobs=n_jobs)
        eval_pos = np.arange(len(te))
    else:
        fit_pos, eval_pos = _meta_split(len(te), config.seed)
        meta_forest = train_forest(meta[fit_pos], y_te[fit_pos], fparams, n_jobs=n_jobs)
        split_info["meta_train"] = te[fit_pos].tolist()
        split_info["meta_eval"] = te[eval_pos].tolist()
    hybrid_pred = predict_forest(meta_forest, meta[eval_pos])
    y_eval = y_te[eval_pos]
    split_info["n_eval"] = int(len(eval_pos))

    return HybridReport(
        rf_report=classification_report(y_eval, rf_pred[eval_pos]),
        nn_report=classification_report(y_eval, nn_pred[eval_pos]),
        hybrid_report=classification_report(y_eval, hybrid_pred),
        mode=config.mode,
        config=asdict(config),
        split=split_info,
        artifacts=HybridArtifacts(scaler, forest, trained.params, meta_forest, tuple(trained.loss_trace)),
    )
