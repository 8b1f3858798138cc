from dataclasses import replace

import pytest

from difx.scene import RenderSettings, desk_scene

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_scene():
    """Quarter-desk scene that renders in well under a second."""
    return replace(
        desk_scene(),
        resolution=(160, 90),
        render=RenderSettings(photon_count=100_000, gather_k=30, seed=3, batch_size=16_384),
    )


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("DIFX_CACHE_DIR", str(tmp_path / "cache"))


@pytest.fixture(scope="session")
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
