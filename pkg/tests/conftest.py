import numpy as np
import pandas as pd
import pytest

from crushbasis.data import DidDataset

_CRITERIA_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance check: ``criterion(number, passed, detail)``.

    Several checks under one number fold into a single line that passes
    only if all of them do.
    """
    log = request.config.stash[_CRITERIA_KEY]

    def record(number, passed, detail=""):
        if number in log:
            prev_ok, prev_detail = log[number]
            log[number] = (prev_ok and bool(passed), f"{prev_detail}; {detail}" if detail else prev_detail)
        else:
            log[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_CRITERIA_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        passed, detail = log[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def make_did(rows):
    """DidDataset from ``(unit, treatment, relative_day, basis)`` tuples."""
    df = pd.DataFrame(rows, columns=["unit_id", "treatment", "relative_day", "basis"])
    df["event_id"] = "e"
    df["elevator_id"] = df["unit_id"]
    df["post"] = (df["relative_day"] >= 1).astype(int)
    return DidDataset(df)


def random_did(rng, n_treated=4, n_control=6, days=(-3, -2, -1, 1, 2, 3), tau=2.0, noise=1.0):
    rows = []
    for i in range(n_treated + n_control):
        treated = int(i < n_treated)
        level = rng.normal(-40, 5)
        for d in days:
            y = level + 0.3 * d + tau * treated * (d > 0) + rng.normal(0, noise)
            rows.append((f"u{i:02d}", treated, d, y))
    return make_did(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
