import random

import pytest

from qbgg.coeff import TauPoint, default_seed
from qbgg.transfer import TwistSpec


@pytest.fixture
def rng():
    return random.Random(default_seed())


def generic_tau(rng, alg, root=1):
    def ok(vals):
        try:
            TwistSpec(TauPoint.from_values(vals)).check_generic(alg)
        except ValueError:
            return False
        return True

    return TauPoint.sample(rng, alg.dim, root, ok=ok)
