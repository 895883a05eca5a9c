import json
from pathlib import Path

import pytest

from cods import load_design_space, load_stub_rules

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def peeps_doc() -> dict:
    return json.loads((FIXTURES / "openpeeps.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def peeps_space(peeps_doc):
    return load_design_space(peeps_doc)


@pytest.fixture(scope="session")
def peeps_stub_rules():
    return load_stub_rules(FIXTURES / "openpeeps_stub_rules.json")


GIRL_REQUIREMENT = "a cool and sporty girl character"

# 0-based (dimension, element) indices of the expected optimum for the
# character fixture: bob-cut female head, calm face, sunglasses, no facial
# hair, sporty tee.
GOLDEN_SELECTION = ((0, 0), (1, 1), (2, 4), (3, 4), (4, 1))


@pytest.fixture(scope="session")
def girl_requirement() -> str:
    return GIRL_REQUIREMENT
