import pytest

from staggered_dd.device import load_device


@pytest.fixture(scope="session")
def device():
    return load_device()


@pytest.fixture(scope="session")
def zero_width(device):
    """Bundled device with instantaneous single-qubit gates."""
    return device.with_gate_durations(x=0, sx=0)
