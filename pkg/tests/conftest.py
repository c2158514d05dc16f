import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

DATA = TESTS_DIR / "data"

# One verdict line per release-gate criterion, printed after the run.
acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        acceptance_results.append((marker.args[0], "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if acceptance_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in acceptance_results:
            terminalreporter.write_line(f"{name}: {verdict}")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def corpus_paths() -> list[Path]:
    return sorted(DATA.glob("*.sass"))


@pytest.fixture(scope="session")
def stage_a_text() -> str:
    return (DATA / "copy_stage_a.sass").read_text()


@pytest.fixture(scope="session")
def stage_b_text() -> str:
    return (DATA / "copy_stage_b.sass").read_text()


@pytest.fixture(scope="session")
def pipeline_text() -> str:
    return (DATA / "pipeline.sass").read_text()


@pytest.fixture(scope="session")
def rich_text() -> str:
    return (DATA / "rich_dump.sass").read_text()
