import logging

import numpy as np
import pytest

from core.models import ScenarioSpec
from core.scenario import validate

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def make_spec(n=4, f=1, loss=None, delay=None, transport=None, **extra) -> ScenarioSpec:
    """Validated scenario with a lossless, 20 ms deterministic channel unless told otherwise."""
    data = {
        "system": {"n": n, "f": f},
        "channel": {
            "loss": loss or {"kind": "packet_success", "p": 1.0},
            "delay": delay or {"kind": "deterministic", "ms": 20.0},
        },
        "transport": transport or {"kind": "udp"},
        "requests": 20,
        "repetitions": 2,
        "seed": 42,
    }
    data.update(extra)
    return validate(data)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def lossless_spec() -> ScenarioSpec:
    return make_spec()
