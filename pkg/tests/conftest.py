from __future__ import annotations

import numpy as np
import pytest

from markov_hoeffding.chain import build_chain, random_chain

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def birth_death() -> np.ndarray:
    return np.array([[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]])


def rotation(d: int = 3) -> np.ndarray:
    return np.roll(np.eye(d), 1, axis=1)


@pytest.fixture
def bd_chain():
    return build_chain(birth_death())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def chains(rng, count, d_max=6, concentration=1.0):
    for _ in range(count):
        yield random_chain(int(rng.integers(2, d_max + 1)), rng, concentration)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
