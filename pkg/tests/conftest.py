import numpy as np
import pytest

import turbrestore as tr


@pytest.fixture(scope="session")
def text_frame():
    return tr.text_card(128, 128, "LUCKY IMAGING 123")


@pytest.fixture(scope="session")
def sim_sequence(text_frame):
    """The canonical seed-42 simulator sequence (100 frames, 128x128)."""
    seq, flows = tr.degrade(text_frame, tr.TurbulenceParams())
    return seq, flows


@pytest.fixture(scope="session")
def small_sim_sequence():
    """A fast 20-frame 64x64 sequence for unit-level checks."""
    card = tr.text_card(64, 64, "AB12")
    params = tr.TurbulenceParams(frames=20, seed=7)
    seq, flows = tr.degrade(card, params)
    return card, seq, flows


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
