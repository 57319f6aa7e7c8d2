from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDENS = ROOT / "goldens"

sys.path.insert(0, str(Path(__file__).resolve().parent))

from rolebind import build_role_table, load_process, parse_policy  # noqa: E402


def load_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def o2c_process():
    return load_process(load_fixture("order2cash.json"))


@pytest.fixture(scope="session")
def o2c(o2c_process):
    policy = parse_policy(load_fixture("order2cash.pol"), o2c_process)
    return policy, build_role_table(policy, o2c_process)


@pytest.fixture(scope="session")
def chain():
    policy = parse_policy(load_fixture("endorsed_chain.pol"))
    return policy, build_role_table(policy)


@pytest.fixture(scope="session")
def deadlock():
    policy = parse_policy(load_fixture("mutual_endorsement.pol"))
    return policy, build_role_table(policy)


# -- acceptance summary ----------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
