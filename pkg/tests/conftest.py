import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO = Path(__file__).resolve().parent.parent
MODELS = REPO / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS


@pytest.fixture(scope="session")
def wsn_ts():
    from bigrs.language import load_model
    from bigrs.system import build_transition_system

    return build_transition_system(load_model(MODELS / "wsn.big"))


@pytest.fixture(scope="session")
def send_mdp_ts():
    from bigrs.language import load_model
    from bigrs.system import build_transition_system

    return build_transition_system(load_model(MODELS / "send_mdp.big"))
