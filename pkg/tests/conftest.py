import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)


@pytest.fixture
def ket():
    from invariant_lab.states import PureState

    def make(*amps):
        return PureState.from_unnormalized(np.asarray(amps, dtype=complex))

    return make
