import numpy as np
import pytest

from appersist.model import DelaySystem, LinearDelaySystem
from appersist.signals import QuasiPeriodicSignal as Q


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scalar_nicholson():
    return DelaySystem.scalar(d=1.0, beta=2.0, c=1.0, tau=1.0)


@pytest.fixture
def subcritical_nicholson():
    return DelaySystem.scalar(d=1.0, beta=0.5, c=1.0, tau=1.0)


@pytest.fixture
def source_sink():
    """Persistent patch 1 feeding a subcritical patch 2 (a_21 = 0.5)."""
    return DelaySystem(
        n=2, delays=(1.0, 1.0), d=(1.0, 1.0), a=((0.0, 0.0), (0.5, 0.0)),
        beta=(2.0, 0.5), c=(1.0, 1.0),
    )


@pytest.fixture
def ap_linear():
    """Scalar linear system with incommensurate almost periodic coefficients."""
    return LinearDelaySystem(
        1, (1.0,), (Q.sin(0.3, 1.0, constant=1.0),), ((0.0,),), (Q.cos(0.5, np.sqrt(2.0), constant=2.0),)
    )


def scalar_linear(d, beta, tau=1.0):
    return LinearDelaySystem(1, (tau,), (d,), ((0.0,),), (beta,))
