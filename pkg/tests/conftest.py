import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from faciesqc.generator import ProceduralChannelGenerator, sample_latent
from faciesqc.grids import CategoricalGrid, threshold_grid

PYGEN_SCRIPT = Path(__file__).resolve().parents[1] / "pygen_reference" / "pygen_reference.py"


def random_binary_grid(rng, n_rows, n_cols, p=0.5) -> CategoricalGrid:
    return CategoricalGrid((rng.random((n_rows, n_cols)) < p).astype(int))


@pytest.fixture(scope="session")
def procedural_gen():
    return ProceduralChannelGenerator()


@pytest.fixture(scope="session")
def truth_grid(procedural_gen):
    """A grid known to be in the generator's range (latent seed 12345)."""
    z = sample_latent(12345, procedural_gen.info.latent_dim)
    return threshold_grid(procedural_gen.generate(z))


@pytest.fixture
def rng():
    return np.random.default_rng(42)
