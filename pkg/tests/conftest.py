import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from rfqram.concurrency import Mode
from rfqram.config import reference_config

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def reference_runs():
    """All four modes of the reference scenario over its 25 seeds, with logs and wall times."""
    from rfqram.sim import run_scenario

    runs, seconds = {}, {}
    for mode in (Mode.STANDARD, Mode.MULTIOPERATION, Mode.INTERLEAVED, Mode.MULTIFUNCTION):
        config, seeds = reference_config(mode)
        t0 = time.perf_counter()
        runs[mode] = [run_scenario(config, s, run_id=f"{mode.value}-{s}") for s in seeds]
        seconds[mode] = time.perf_counter() - t0
    return runs, seconds


@pytest.fixture
def small_config_path():
    return DATA / "small.yaml"
