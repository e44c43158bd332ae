import numpy as np
import pytest

from biresidue import validate


@pytest.fixture
def random_biresidue():
    """Factory for seeded random integer biresidue matrices."""

    def build(seed, n, spread=3):
        rng = np.random.default_rng(seed)
        upper = np.triu(rng.integers(-spread, spread + 1, size=(n - 1, n - 1)), 1)
        block = (upper - upper.T).tolist()
        last = [-sum(row) for row in block]
        rows = [row + [v] for row, v in zip(block, last)]
        rows.append([-v for v in last] + [0])
        return validate(rows)

    return build
