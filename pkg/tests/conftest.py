import math

import pytest

from keyhole.channel import ChannelParams
from keyhole.geometry import KeyholeDomain, KeyholeSpec

# Standard curve parameters used throughout: K=4, beta=1, eta=2, opening
# angle pi/16.
PHI = math.pi / 16


@pytest.fixture
def params():
    return ChannelParams(K=4, beta=1, eta=2, alpha=0.5)


@pytest.fixture
def params_factory():
    def make(alpha=0.5, **kw):
        kw.setdefault("K", 4)
        kw.setdefault("beta", 1)
        kw.setdefault("eta", 2)
        return ChannelParams(alpha=alpha, **kw)

    return make


@pytest.fixture
def hole():
    return KeyholeSpec.from_half_angle(PHI / 2, depth=0.1, wall_position=2.5)


@pytest.fixture
def domain_factory(hole):
    def make(h, length=5.0):
        return KeyholeDomain(height=h, length=length, holes=(hole,))

    return make
