import dataclasses

import pytest

from genomelens.config import DEFAULT_CONFIG
from genomelens.synth import GenParams, generate


@pytest.fixture(scope="session")
def dataset():
    """The reference 2x3x4x5 dataset (2 chromosomes, 6 loci, 24 fibers, 120 nucleosomes)."""
    return generate(GenParams(2, 3, 4, 5, seed=42))


@pytest.fixture(scope="session")
def nofade_config():
    """Default engine config with window end-fade disabled."""
    return dataclasses.replace(DEFAULT_CONFIG, fade_fraction=0.0)
