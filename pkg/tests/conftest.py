import numpy as np
import pytest

from gstudy.dataset import Dataset
from gstudy.design import parse_design

# design -> (level counts, true variance components); the simulation catalog
CATALOG = {
    "p x i": ({"p": 50, "i": 20}, {"p": 4, "i": 1, "p x i": 2}),
    "p x r x i": (
        {"p": 20, "r": 15, "i": 15},
        {"p": 4, "r": 0.5, "i": 1, "p x r": 0.6, "p x i": 1, "r x i": 0.3, "p x r x i": 2},
    ),
    "p x (r:i)": ({"p": 20, "r": 15, "i": 15}, {"p": 4, "i": 1, "r:i": 0.8, "p x i": 0.7, "p r i": 2}),
    "(r:p) x i": ({"p": 20, "r": 15, "i": 15}, {"p": 4, "r p": 1, "i": 1, "p x i": 0.6, "r i p": 2}),
    "r:(i:p)": ({"p": 20, "r": 15, "i": 15}, {"p": 4, "i p": 1.5, "r i p": 2}),
}

# small shapes for exhaustive checks against the explicit-loop oracle
SMALL_LEVELS = {
    "p x i": {"p": 4, "i": 3},
    "p x r x i": {"p": 3, "r": 4, "i": 2},
    "p x (r:i)": {"p": 3, "r": 2, "i": 3},
    "(r:p) x i": {"p": 3, "r": 2, "i": 4},
    "r:(i:p)": {"p": 3, "r": 2, "i": 3},
}


def random_dataset(design_str, levels, rng, loc=None):
    design = parse_design(design_str)
    shape = tuple(levels[n] for n in design.names)
    loc = rng.uniform(-5, 5) if loc is None else loc
    return Dataset.from_array(design, loc + rng.standard_normal(shape) * rng.uniform(0.5, 3))


@pytest.fixture
def worked():
    """2 persons x 2 items: [[1, 2], [3, 5]]."""
    return Dataset.from_array(parse_design("p x i"), [[1.0, 2.0], [3.0, 5.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
