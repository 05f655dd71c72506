import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

# every property runs at least 1000 generated cases
settings.register_profile(
    "default1k", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default1k")

sys.path.insert(0, str(Path(__file__).parent))

# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "prop: hypothesis property test")


def pytest_collection_modifyitems(items):
    for item in items:
        if getattr(getattr(item, "obj", None), "is_hypothesis_test", False):
            item.add_marker(pytest.mark.prop)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
