"""
Correlated Rayleigh fading episodes and delayed-CSIT views.

One :class:`ChannelEpisode` holds every slot of one protocol run. Row ``i``
of the slot matrix ``H(t)`` is ``h_i^T(t)``, the channel from the K
transmit antennas to user ``i``. Slots are numbered from 1 to ``T`` as in
the transmission protocol; users are numbered from 0.

Precoder code never receives the episode itself but a :class:`CsitView`,
which only hands out slots strictly before its ``now`` slot.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import hermitian_sqrt

__all__ = ['FadingConfig', 'ChannelEpisode', 'CsitView', 'correlation_matrix',
           'sample_episode', 'csit_at', 'randn_c']


def randn_c(rng, *shape):
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def correlation_matrix(K, tau):
    """Exponential correlation matrix with entries ``tau**|i-j|``."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    if K < 1:
        raise ValueError("K must be positive")
    idx = np.arange(K)
    return np.power(float(tau), np.abs(idx[:, None] - idx[None, :])).astype(complex)


@dataclass(frozen=True)
class FadingConfig:
    K: int
    tau_t: float = 0.0
    tau_r: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be at least 2")
        for name in ('tau_t', 'tau_r'):
            tau = getattr(self, name)
            if not 0.0 <= tau < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {tau}")


class ChannelEpisode:
    """
    All channel matrices of one protocol run.

    Parameters
    ----------
    H : array_like, shape (T, K, K)
        ``H[t-1]`` is the channel matrix of slot ``t``.
    """

    def __init__(self, H):
        H = np.array(H, dtype=complex)
        if H.ndim != 3 or H.shape[1] != H.shape[2]:
            raise ValueError(f"episode array must have shape (T, K, K), got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError("episode contains non-finite channel entries")
        H.setflags(write=False)
        self._H = H

    @property
    def K(self):
        return self._H.shape[1]

    @property
    def T(self):
        return self._H.shape[0]

    def channel(self, t):
        """Channel matrix of slot ``t`` (1-based)."""
        if not 1 <= t <= self.T:
            raise ValueError(f"slot {t} outside 1..{self.T}")
        return self._H[t - 1]

    def h(self, i, t):
        """Channel vector of user ``i`` at slot ``t``."""
        return self.channel(t)[i]

    def as_array(self):
        return self._H

    def with_slots(self, slots, H_new):
        """Copy of the episode with the listed slots replaced."""
        H = self._H.copy()
        for t, Ht in zip(slots, H_new):
            H[t - 1] = Ht
        return ChannelEpisode(H)


class CsitView:
    """Transmitter knowledge at slot ``now``: every slot before it."""

    def __init__(self, episode, now):
        if not 1 <= now <= episode.T:
            raise ValueError(f"slot {now} outside 1..{episode.T}")
        self._episode = episode
        self.now = now
        self.K = episode.K

    @property
    def known_slots(self):
        return range(1, self.now)

    def channel(self, t):
        if not 1 <= t < self.now:
            raise ValueError(f"slot {t} is not known at slot {self.now} (delayed CSIT)")
        return self._episode.channel(t)

    def h(self, i, t):
        return self.channel(t)[i]


def csit_at(episode, slot):
    return CsitView(episode, slot)


def sample_episode(cfg, schedule, rng=None):
    """
    Draw a correlated Rayleigh episode ``H(t) = R_r^1/2 H_w(t) R_t^1/2``.

    Parameters
    ----------
    cfg : FadingConfig
    schedule : Schedule
        Fixes the number of slots.
    rng : numpy.random.Generator, optional
        Defaults to ``numpy.random.default_rng(cfg.seed)``.
    """
    if cfg.K != schedule.K:
        raise ValueError(f"config has K={cfg.K} but schedule has K={schedule.K}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    K = cfg.K
    Rt_half = hermitian_sqrt(correlation_matrix(K, cfg.tau_t))
    Rr_half = hermitian_sqrt(correlation_matrix(K, cfg.tau_r))
    Hw = randn_c(rng, schedule.T, K, K)
    return ChannelEpisode(Rr_half @ Hw @ Rt_half)
