import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xferbench.synth import gen_hub
from xferbench.tensor_io import load_ground_truth, load_hub


@pytest.fixture(scope="session")
def hub_dir(tmp_path_factory):
    """Seed-42 synthetic hub: 10 models, s in [0.5, 5.0], C=4, D=16, N=1000."""
    d = tmp_path_factory.mktemp("hub42")
    gen_hub(d, seed=42)
    return d


@pytest.fixture(scope="session")
def hub(hub_dir):
    return load_hub(hub_dir / "manifest.json")


@pytest.fixture(scope="session")
def ground_truth(hub_dir):
    return load_ground_truth(hub_dir / "gt.csv")
