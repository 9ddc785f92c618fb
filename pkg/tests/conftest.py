import sys

import numpy as np
import pytest

from infdef.manifolds import get_manifold

ZOO = ["s1", "s2", "t2", "h2", "thin_spiral", "swiss_roll", "hs2", "so2"]

_REPORT_LINES = []


def report(line: str):
    """Queue an acceptance pass/fail line for the end-of-run summary."""
    _REPORT_LINES.append(line)
    if sys.stdout is sys.__stdout__:  # capture disabled (-s): show inline too
        print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def zoo():
    return {name: get_manifold(name) for name in ZOO}


def interior_points(manifold, chart_index, n, seed):
    from infdef.manifolds import sample_interior

    return sample_interior(manifold, chart_index, n, np.random.default_rng(seed))
