import numpy as np
import pytest

from gmat.channel import ChannelEpisode, FadingConfig, csit_at, sample_episode
from gmat.protocol import make_schedule

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def random_episode(K, rng, tau_t=0.0, tau_r=0.0):
    schedule = make_schedule(K)
    return sample_episode(FadingConfig(K, tau_t, tau_r), schedule, rng), schedule


def phase2_view(episode, schedule):
    return csit_at(episode, schedule.start(2))


def episode_from_slots(slots):
    return ChannelEpisode(np.array(slots, dtype=complex))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
