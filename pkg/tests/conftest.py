import os

import pytest


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False, help="run long experiments (PS1)")


def pytest_configure(config):
    config.addinivalue_line("markers", "long: slow runs enabled with --long or THREEHALVES_LONG=1")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long") or os.environ.get("THREEHALVES_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture
def note(request):
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(label, detail):
        line = f"INFO {label}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
