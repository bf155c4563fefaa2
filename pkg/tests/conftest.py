import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.services.statekit import BasisLayout, Factor, Role, make_state, qubit_layout  # noqa: E402

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
CONFIG_DIR = os.path.join(ROOT, "configs")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def qubits():
    """FrameSlot(A) ⊗ B[2] ⊗ C[2]"""
    return qubit_layout()


@pytest.fixture
def single_c():
    return BasisLayout.build(Role.A, [Factor(Role.C, 2)])


@pytest.fixture
def random_state_on(rng):
    def _make(layout):
        d = layout.dimension
        return make_state(layout, rng.standard_normal(d) + 1j * rng.standard_normal(d), normalize=True)

    return _make


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    from app.services.reporter import reporter

    out = tmp_path / "output"
    monkeypatch.setattr(reporter, "output_dir", str(out))
    return out


@pytest.fixture
def config_path():
    def _path(name):
        return os.path.join(CONFIG_DIR, name)

    return _path
