import math

import pytest

from advflow.classifier1d import bayes_set
from advflow.density import two_gaussian_model
from advflow.evolution1d import evolve

A0 = -(2.0 / 3.0) * (1.0 + math.sqrt(2.0 * (2.0 + 3.0 * math.log(2.0))))
B0 = (2.0 / 3.0) * (math.sqrt(2.0 * (2.0 + 3.0 * math.log(2.0))) - 1.0)


@pytest.fixture(scope="session")
def tg_model():
    return two_gaussian_model()


@pytest.fixture(scope="session")
def tg_trajectory(tg_model):
    return evolve(tg_model, bayes_set(tg_model), 0.5, 1e-3)


# acceptance criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
