from pathlib import Path

import numpy as np
import pytest

from multiess.game import load_game, validate_game

ROOT = Path(__file__).resolve().parents[1]
GAMES = ROOT / "src" / "multiess" / "games"

ACCEPTANCE_LINES: list[str] = []


def example_game(i: int):
    return load_game(GAMES / f"game{i}")


@pytest.fixture(scope="session")
def games():
    return {i: example_game(i) for i in range(1, 9)}


@pytest.fixture
def zero3():
    return validate_game(3, 3, np.zeros((3, 3, 3)), "zero")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
