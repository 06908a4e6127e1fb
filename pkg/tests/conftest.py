import numpy as np
import pytest

from actihybrid.features import LabeledFeatureMatrix


def make_matrix(X, y, pids=None):
    X = np.asarray(X, dtype=float)
    n = len(X)
    pids = pids if pids is not None else [f"p{i}" for i in range(n)]
    return LabeledFeatureMatrix(
        rows=X, labels=np.asarray(y),
        feature_names=tuple(f"f{j}" for j in range(X.shape[1])),
        provenance=[(p, "2020-01-01") for p in pids],
    )


def noisy_fixture(seed, n_lo=60, n_hi=160, d=5):
    """Overlapping Gaussian classes: base learners are imperfect and disagree."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi))
    y = rng.integers(0, 2, n)
    y[:2], y[2:4] = 0, 1
    X = rng.normal(size=(n, d)) + y[:, None] * rng.uniform(0.2, 1.0)
    return make_matrix(X, y)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        return p
    return _write


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
    line = f"[criterion {number}] {status}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
