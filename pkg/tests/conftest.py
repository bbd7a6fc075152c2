import numpy as np
import pytest

from amod.trackio import SynthConfig, generate_synthetic


@pytest.fixture(scope="session")
def small_split():
    cfg = SynthConfig(n_real=4, n_fake=4, frames_per_track=16)
    return generate_synthetic(cfg, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, filled by test_acceptance.report()
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    ran = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.rsplit("::", 1)[-1]
            if name.startswith("test_criterion_"):
                ran[int(name.split("_")[2])] = outcome
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ran):
        line = ACCEPTANCE_LINES.get(number)
        if line is None:
            line = f"[criterion {number}] FAIL: stopped before the check ran (see traceback)"
        terminalreporter.write_line(line)
