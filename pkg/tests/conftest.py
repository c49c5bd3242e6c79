import numpy as np
import pytest
from hypothesis import strategies as st

from pmde.polarization import Retarder, haar_rotations


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


def random_retarders(rng, n):
    return [Retarder.from_rotation(r) for r in haar_rotations(rng, n)]


unit_axes = st.tuples(
    st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False)
).filter(lambda a: sum(x * x for x in a) > 1e-3)

retarders = st.builds(Retarder, unit_axes, st.floats(-20, 20, allow_nan=False))
