from importlib import resources
from pathlib import Path

import pytest

from qselector import device as dev

PROGRAMS = Path(str(resources.files("qselector") / "programs"))
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def programs_dir():
    return PROGRAMS


@pytest.fixture
def golden_dir():
    return GOLDEN


@pytest.fixture(params=[2, 3, 5], ids=lambda n: f"{n}q")
def fixture_device(request):
    return dev.default_device(request.param)
