import numpy as np
import pytest

from mfsr.degradation import DegradationSpec, synthesize
from mfsr import testimages

_ACCEPTANCE = []

QUARTER_SHIFTS = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]


def record_criterion(number, title, passed, detail=""):
    _ACCEPTANCE.append((number, title, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f" -- {detail}" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quarter_shift_obs():
    """Noiseless, blur-free, four quarter-LR-pixel shifts at 2x2 decimation, 32x32."""
    hr = testimages.blobs(32)
    obs = synthesize(hr, 4, DegradationSpec(decimation=(2, 2)), shifts=QUARTER_SHIFTS)
    return hr, obs


@pytest.fixture
def small_noisy_obs():
    hr = testimages.scene(16)
    spec = DegradationSpec(blur_length=3, blur_angle=20, decimation=(2, 2), snr_db=25, seed=4)
    return hr, synthesize(hr, 3, spec, shift_range=2.0)
