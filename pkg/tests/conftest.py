import functools

import pytest

from hypac.experiments import simulate_pde

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def cached_run(eps, safety=0.5, damping="const:1", t_end=0.19, frame_T=0.14):
    """PDE runs shared across test modules (n=2, rho0=0.6, tau=1, tanh data)."""
    return simulate_pde(eps, 1.0, damping=damping, t_end=t_end, safety=safety, series_stride=10, frame_T=frame_T)


@pytest.fixture(scope="session")
def pde_run():
    return cached_run


@pytest.fixture(scope="session")
def report():
    def add(label: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        print(ACCEPTANCE_LINES[-1])

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
