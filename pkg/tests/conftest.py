import numpy as np
import pytest

from loraswitch import profiling, toy


@pytest.fixture(scope="session")
def default_setup():
    return toy.default_setup()


@pytest.fixture(scope="session")
def default_profiles(default_setup):
    """freq2 profiles for the pinned default pair, noise seed 7."""
    base = toy.as_denoiser(default_setup.base)
    out = {}
    for role in ("content", "style"):
        adapter = default_setup.content if role == "content" else default_setup.style
        out[role] = profiling.profile_adapter(
            base,
            toy.as_denoiser(adapter),
            default_setup.total_steps,
            7,
            "freq2",
            height=default_setup.height,
            width=default_setup.width,
            channels=default_setup.channels,
            adapter_id=role,
        )
    return out


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=12345))
