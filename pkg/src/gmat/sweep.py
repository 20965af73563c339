"""
Monte-Carlo sum-rate sweeps.

A sweep is described by a flat ``key=value`` text file::

    # 2-user comparison at finite SNR
    K = 2
    snr_db = 0, 5, 10, 15, 20
    realizations = 1000
    schemes = MAT, GMAT-MMSE, GMAT-DSINR
    tau_mode = random
    seed = 1

Recognised keys (defaults in brackets): ``K``, ``snr_db`` (comma list,
strictly increasing), ``realizations`` [1000], ``schemes``
[MAT, GMAT-MMSE, GMAT-DSINR], ``tau_mode`` (``fixed`` or ``random``)
[fixed], ``tau_t`` [0], ``tau_r`` [0], ``seed`` [0], ``rate_mode``
(``exact-mi`` or ``mmse-sinr``) [exact-mi], ``beta`` [0.01],
``max_iters`` [500], ``projection`` (``scale-to-budget`` or ``none``)
[scale-to-budget], ``workers`` [1].

Realization ``r`` draws everything from ``SeedSequence(seed, spawn_key=(r,))``,
so results do not depend on the number of workers. All schemes are
rescaled to the same total power budget before evaluation.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import FadingConfig, csit_at, sample_episode
from .metrics import RATE_MODES, RatePoint, sum_rate
from .precoders import (PROJECTIONS, DivergenceError, MmseOptConfig,
                        gmat_dsinr_precoder, gmat_mmse_optimize,
                        ic_dual_matrices, mat_precoder, mrt_zf_precoders)
from .protocol import MAX_USERS, make_lifting_constants, make_schedule

__all__ = ['SCHEMES', 'ConfigError', 'SweepConfig', 'RateCurve', 'parse_config',
           'run_sweep', 'compute_precoders', 'emit_csv', 'emit_plot_data',
           'read_csv', 'snr_to_rho', 'CSV_HEADER']

log = logging.getLogger(__name__)

SCHEMES = ('MAT', 'GMAT-MMSE', 'GMAT-DSINR', 'MRT', 'ZF')
TWO_USER_ONLY = ('MRT', 'ZF')
TAU_MODES = ('fixed', 'random')
CSV_HEADER = ('scheme', 'snr_db', 'sum_rate_bps_hz', 'std_err', 'realizations')


class ConfigError(ValueError):
    """Invalid sweep configuration."""


def snr_to_rho(snr_db, K):
    """Per-stream power ``rho = P / K`` for a total SNR ``P`` in dB."""
    return 10.0 ** (snr_db / 10.0) / K


@dataclass(frozen=True)
class SweepConfig:
    K: int
    snr_grid_db: tuple
    realizations: int = 1000
    schemes: tuple = ('MAT', 'GMAT-MMSE', 'GMAT-DSINR')
    tau_mode: str = 'fixed'
    tau_t: float = 0.0
    tau_r: float = 0.0
    seed: int = 0
    rate_mode: str = 'exact-mi'
    beta: float = 0.01
    max_iters: int = 500
    projection: str = 'scale-to-budget'
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'snr_grid_db', tuple(float(x) for x in self.snr_grid_db))
        object.__setattr__(self, 'schemes', tuple(self.schemes))
        if not 2 <= self.K <= MAX_USERS:
            raise ConfigError(f"K: must lie in 2..{MAX_USERS}, got {self.K}")
        if not self.snr_grid_db:
            raise ConfigError("snr_db: grid must not be empty")
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ConfigError("snr_db: grid must be strictly increasing")
        if self.realizations < 1:
            raise ConfigError("realizations: must be at least 1")
        if not self.schemes:
            raise ConfigError("schemes: at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"schemes: unknown scheme {s!r}; expected {SCHEMES}")
            if s in TWO_USER_ONLY and self.K != 2:
                raise ConfigError(f"schemes: {s} is only defined for K = 2")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes: duplicate entries")
        if self.tau_mode not in TAU_MODES:
            raise ConfigError(f"tau_mode: expected one of {TAU_MODES}")
        for name in ('tau_t', 'tau_r'):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1)")
        if self.rate_mode not in RATE_MODES:
            raise ConfigError(f"rate_mode: expected one of {RATE_MODES}")
        if not self.beta > 0:
            raise ConfigError("beta: must be positive")
        if self.max_iters < 0:
            raise ConfigError("max_iters: must be nonnegative")
        if self.projection not in PROJECTIONS:
            raise ConfigError(f"projection: expected one of {PROJECTIONS}")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")

    def mmse_opt(self, rho):
        return MmseOptConfig(rho=rho, beta=self.beta, max_iters=self.max_iters,
                             projection=self.projection)


@dataclass
class RateCurve:
    scheme: str
    points: list
    dropped: int = 0
    per_realization: np.ndarray = field(default=None, repr=False)


def _split_list(value):
    return [v.strip() for v in value.split(',') if v.strip()]


_PARSERS = {
    'K': ('K', int),
    'snr_db': ('snr_grid_db', lambda v: tuple(float(x) for x in _split_list(v))),
    'realizations': ('realizations', int),
    'schemes': ('schemes', lambda v: tuple(_split_list(v))),
    'tau_mode': ('tau_mode', lambda v: {'per-realization-random': 'random'}.get(v, v)),
    'tau_t': ('tau_t', float),
    'tau_r': ('tau_r', float),
    'seed': ('seed', int),
    'rate_mode': ('rate_mode', str),
    'beta': ('beta', float),
    'max_iters': ('max_iters', int),
    'projection': ('projection', str),
    'workers': ('workers', int),
}


def parse_config(text):
    """Parse the ``key=value`` sweep format into a validated :class:`SweepConfig`."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv = _PARSERS[key]
        if name in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[name] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    for required in ('K', 'snr_grid_db'):
        if required not in values:
            key = 'snr_db' if required == 'snr_grid_db' else required
            raise ConfigError(f"missing required key {key!r}")
    return SweepConfig(**values)


def compute_precoders(scheme, csit, schedule, rho, cfg):
    """Precoders of one scheme, scaled to the common power budget."""
    budget = schedule.power_budget
    if scheme == 'MAT':
        return mat_precoder(csit, schedule).scaled_to(budget)
    if scheme == 'GMAT-DSINR':
        return gmat_dsinr_precoder(csit, schedule, rho).scaled_to(budget)
    if scheme == 'GMAT-MMSE':
        return gmat_mmse_optimize(csit, schedule, cfg.mmse_opt(rho))
    if scheme in TWO_USER_ONLY:
        # Unknown phase-2 gains are set to one, as for the virtual channel.
        ref = mat_precoder(csit, schedule).scaled_to(budget)
        mrt, zf = mrt_zf_precoders(ic_dual_matrices(csit, ref, rho, phase2_gains=(1.0, 1.0)))
        return (mrt if scheme == 'MRT' else zf).scaled_to(budget)
    raise ValueError(f"unknown scheme {scheme!r}")


def _realization(cfg, r):
    """Rates of realization ``r``: {scheme: array over SNR or None if dropped}."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(r,)))
    if cfg.tau_mode == 'random':
        tau_t, tau_r = rng.uniform(0.0, 1.0, size=2)
    else:
        tau_t, tau_r = cfg.tau_t, cfg.tau_r
    schedule = make_schedule(cfg.K)
    episode = sample_episode(FadingConfig(cfg.K, float(tau_t), float(tau_r), cfg.seed),
                             schedule, rng)
    csit = csit_at(episode, schedule.start(2))
    constants = make_lifting_constants(schedule, episode)
    out = {}
    for scheme in cfg.schemes:
        rates = np.empty(len(cfg.snr_grid_db))
        try:
            for n, snr in enumerate(cfg.snr_grid_db):
                rho = snr_to_rho(snr, cfg.K)
                prec = compute_precoders(scheme, csit, schedule, rho, cfg)
                rates[n] = sum_rate(episode, prec, rho, schedule, mode=cfg.rate_mode,
                                    constants=constants)
        except DivergenceError as exc:
            log.warning("realization %d, %s dropped: %s", r, scheme, exc)
            rates = None
        out[scheme] = rates
    return out


def _realization_chunk(cfg, indices):
    return [_realization(cfg, r) for r in indices]


def run_sweep(cfg):
    """
    Run every realization and average per scheme and SNR.

    Returns one :class:`RateCurve` per scheme in configuration order.
    Realizations whose MMSE descent diverges are dropped for that scheme
    and counted in ``RateCurve.dropped``.
    """
    indices = range(cfg.realizations)
    if cfg.workers == 1:
        results = [_realization(cfg, r) for r in indices]
    else:
        chunks = [list(indices[k::cfg.workers]) for k in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_realization_chunk, [cfg] * len(chunks), chunks))
        results = [None] * cfg.realizations
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                results[r] = res

    curves = []
    for scheme in cfg.schemes:
        kept = [res[scheme] for res in results if res[scheme] is not None]
        dropped = cfg.realizations - len(kept)
        if not kept:
            raise RuntimeError(f"every realization of {scheme} diverged")
        data = np.array(kept)
        n = data.shape[0]
        mean = data.mean(axis=0)
        se = data.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
        points = []
        for snr, m, e in zip(cfg.snr_grid_db, mean, se):
            log.info("%-10s %6.2f dB  %.6f bps/Hz (+/- %.2g, n=%d)", scheme, snr, m, e, n)
            points.append(RatePoint(snr, snr_to_rho(snr, cfg.K), float(m), n, float(e)))
        curves.append(RateCurve(scheme, points, dropped, data))
    return curves


def _fmt(x):
    return f"{x:.17g}"


def emit_csv(curves, path):
    """One row per (scheme, SNR) with header ``CSV_HEADER``."""
    if not curves:
        raise ValueError("nothing to write: no rate curves")
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for c in curves:
            for p in c.points:
                writer.writerow([c.scheme, _fmt(p.snr_db), _fmt(p.sum_rate),
                                 _fmt(p.std_err), p.realizations])


def read_csv(path):
    """Parse a file written by :func:`emit_csv` back into rate curves."""
    curves = {}
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for scheme, snr, rate, se, n in reader:
            snr = float(snr)
            pt = RatePoint(snr, float('nan'), float(rate), int(n), float(se))
            curves.setdefault(scheme, []).append(pt)
    return [RateCurve(s, pts) for s, pts in curves.items()]


def emit_plot_data(curves, path):
    """Same data with one column pair (rate, std_err) per scheme."""
    if not curves:
        raise ValueError("nothing to write: no rate curves")
    grid = [p.snr_db for p in curves[0].points]
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        header = ['snr_db']
        for c in curves:
            header += [c.scheme, f"{c.scheme}_std_err"]
        writer.writerow(header)
        for n, snr in enumerate(grid):
            row = [_fmt(snr)]
            for c in curves:
                row += [_fmt(c.points[n].sum_rate), _fmt(c.points[n].std_err)]
            writer.writerow(row)
