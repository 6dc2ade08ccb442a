import json
from pathlib import Path

import pytest

HERE = Path(__file__).parent


@pytest.fixture(scope="session")
def golden():
    data = json.loads((HERE / "golden.json").read_text())
    return {
        "S": {int(k): float(v) for k, v in data["sobolev_S"].items()},
        "C_n4_k1_beta2": float(data["C_n4_k1_beta2"]),
    }
