import numpy as np
import pytest

from gaitsig.imu_io import write_recording
from gaitsig.models import NormalizedGrid, ScalarSignal, Signature
from gaitsig.preprocess import preprocess_recording
from gaitsig.synth import SynthSpec, generate, noise_std_for_snr, walking_template


@pytest.fixture
def grid():
    return NormalizedGrid(100)


@pytest.fixture(scope="session")
def walk():
    """Noise-free 30 s walk with 5% period jitter."""
    return generate(SynthSpec(duration=30.0, seed=3))


@pytest.fixture(scope="session")
def noisy_walk():
    template = walking_template()
    return generate(SynthSpec(noise_std=noise_std_for_snr(template, 20.0), duration=40.0, seed=11))


@pytest.fixture(scope="session")
def walk_signal(walk):
    return preprocess_recording(walk.recording, (0.1, 10.0), 4)


@pytest.fixture(scope="session")
def noisy_walk_signal(noisy_walk):
    return preprocess_recording(noisy_walk.recording, (0.1, 10.0), 4)


@pytest.fixture
def noisy_walk_csv(tmp_path, noisy_walk):
    path = tmp_path / "walk.csv"
    write_recording(noisy_walk.recording, path)
    return path


@pytest.fixture
def make_sine():
    def make(freq=1.0, amplitude=3.0, duration=5.0, rate=100.0, phase=0.0):
        times = np.arange(int(round(duration * rate))) / rate
        return ScalarSignal(times, amplitude * np.sin(2 * np.pi * freq * times + phase), rate)

    return make


@pytest.fixture
def make_signature():
    def make(values, std=None, num_cycles=1):
        values = np.asarray(values, dtype=float)
        return Signature(values, np.zeros_like(values) if std is None else std, num_cycles)

    return make
