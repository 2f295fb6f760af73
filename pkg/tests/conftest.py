import numpy as np
import pytest

from isomod.arrivals import ChannelParams


@pytest.fixture
def reference_link() -> ChannelParams:
    """Hexose reference link: hitting pair measured at 16 um / 5.9 s."""
    return ChannelParams(n=1000.0, p1=0.6097, p2=0.7208, noise_std=100.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)


def random_channel(rng: np.random.Generator, n_max: float = 5e4) -> ChannelParams:
    p1 = rng.uniform(0.05, 0.9)
    p2 = rng.uniform(p1, min(1.0, p1 + 0.4))
    return ChannelParams(
        n=rng.uniform(0.0, n_max),
        p1=p1,
        p2=p2,
        noise_std=rng.uniform(1.0, 500.0),
        Ts=5.9,
    )


def random_thresholds(rng: np.random.Generator, count: int, hi: float):
    taus = np.sort(rng.uniform(0.0, hi, count))
    while np.any(np.diff(taus) <= 0):
        taus = np.sort(rng.uniform(0.0, hi, count))
    return taus if count > 1 else float(taus[0])
