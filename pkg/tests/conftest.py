import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile("default")

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {text}")


@pytest.fixture
def criterion():
    """Record pass/fail for one acceptance criterion."""

    class Recorder:
        def __init__(self):
            self.key = None

        def start(self, key, text):
            self.key = key
            ACCEPTANCE[key] = (False, text)

        def done(self):
            ACCEPTANCE[self.key] = (True, ACCEPTANCE[self.key][1])

    return Recorder()
