import functools

import pytest

from robinlab import fem2d


@functools.lru_cache(maxsize=None)
def corpus_mesh(h):
    return {name: fem2d.mesh_polygon(v, h, name=name)
            for name, v in fem2d.standard_corpus().items()}


@functools.lru_cache(maxsize=None)
def disk_mesh(h, radius=1.0):
    return fem2d.mesh_disk(h, radius)


@pytest.fixture(scope="session")
def coarse_corpus():
    return corpus_mesh(0.08)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def record(criterion, ok, detail, seconds):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.1f} s]"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
