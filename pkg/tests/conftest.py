import pytest

from sgder.harness.config import LandscapeSpec, RunConfig


@pytest.fixture
def small_config(tmp_path):
    """A run small enough for unit tests: 150 points, 60 epochs, patience 5."""
    return RunConfig(
        variant="ours_exp",
        budget=60,
        patience=5,
        seeds=(0,),
        batch_size=16,
        out=str(tmp_path / "out"),
        landscape=LandscapeSpec(n=150, hidden=8, separation=3.0),
    )


@pytest.fixture
def write_config(tmp_path):
    def _write(text: str, name: str = "exp.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Print and remember one pass/fail line per acceptance criterion, then assert it."""

    def _verdict(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        _VERDICTS[number] = line
        print(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
