import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from canopy_plan.species import load_kb, load_profiles  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "canopy_plan" / "data"

REFERENCE_SPECIES = ["Ərik", "Şaftalı", "Armud Ağacı", "Gavalı Ağacı", "Alma Ağacı", "Qarağat"]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def kb():
    return load_kb(DATA / "kb")


@pytest.fixture(scope="session")
def profiles():
    return load_profiles((DATA / "species.csv").read_text(encoding="utf-8"))


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
