from __future__ import annotations

import sys

import pytest

from toposcalc import corpus as K

SITE_NAMES = list(K.SITE_BUILDERS)


@pytest.fixture(params=SITE_NAMES)
def site(request):
    return K.site(request.param)


@pytest.fixture
def interval():
    return K.site("interval")


@pytest.fixture
def point():
    return K.site("terminal")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
