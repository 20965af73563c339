"""
Precoding for the K-user MISO broadcast channel with fully delayed CSIT.

The protocol follows the multi-phase interference repetition/alignment
scheme (MAT) and its finite-SNR generalization (GMAT), in which the
order-2 combining vectors are optimized either by gradient descent on a
virtual MMSE cost or in closed form from a regularized dual SINR.

Submodules
----------
numerics    complex linear-algebra kernels
channel     correlated Rayleigh episodes and delayed-CSIT views
protocol    schedule arithmetic, generation matrices, effective channels
precoders   MAT, GMAT-MMSE, GMAT-DSINR, MRT/ZF
metrics     MMSE, mutual information, sum rate, DoF slope
sweep       Monte-Carlo sweeps and CSV output
"""

from .channel import ChannelEpisode, CsitView, FadingConfig, csit_at, sample_episode
from .metrics import RatePoint, dof_slope, sum_rate
from .precoders import (MmseOptConfig, gmat_dsinr_precoder, gmat_mmse_optimize,
                        mat_precoder, mmse_cost)
from .protocol import PrecoderSet, make_lifting_constants, make_schedule
from .sweep import SweepConfig, parse_config, run_sweep

__version__ = '0.1.0'
