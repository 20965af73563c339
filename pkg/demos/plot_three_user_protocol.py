"""
Three users and the lifting recursion
=====================================

With three users the block has 11 slots: six for the individual symbols
(two branches of three users), three for order-2 messages and two for
order-3 messages. Order-3 messages are built from order-2 ones as
``W(3) = C Lambda W(2)``, where ``Lambda`` holds channel coefficients seen
in phase 2 and ``C`` is a fixed full-rank mixing matrix.
"""

import numpy as np

from gmat.channel import FadingConfig, csit_at, sample_episode
from gmat.precoders import mat_precoder
from gmat.protocol import (effective_channels, gen_matrix_template,
                           make_lifting_constants, make_schedule)

schedule = make_schedule(3)
print(f"L={schedule.L}, phase lengths {schedule.T_k}, T={schedule.T}, DoF {schedule.dof}")
print("order-2 rows:", gen_matrix_template(3, 2).rows)

# %%
# Lifting constants
# -----------------
# Entry r of Lambda(l, 2) is the coefficient that the user left out of row
# r saw on antenna l in that row's slot.

rng = np.random.default_rng(3)
episode = sample_episode(FadingConfig(3, tau_t=0.3, tau_r=0.1), schedule, rng)
constants = make_lifting_constants(schedule, episode)
print("C(2) =\n", np.round(constants.C[2].real, 3))
for l in range(schedule.L):
    expected = [episode.h(2, 7)[l], episode.h(1, 8)[l], episode.h(0, 9)[l]]
    print(f"Lambda({l}, 2) matches h_C(7), h_B(8), h_A(9) on antenna {l}:",
          np.allclose(constants.lam(l, 2), expected))

# %%
# Interference seen by user A
# ---------------------------
# User A collects 11 observations of its 6 desired symbols. The 12 columns
# of interference from users B and C (two branches each) occupy only five
# dimensions under MAT, leaving room to resolve the desired ones.

mat = mat_precoder(csit_at(episode, schedule.start(2)), schedule)
H = effective_channels(episode, schedule, mat, constants)
interf = np.hstack([H[0, l, j] for l in range(schedule.L) for j in (1, 2)])
desired = np.hstack([H[0, l, 0] for l in range(schedule.L)])
sv = np.linalg.svd(interf, compute_uv=False)
print("interference singular values:", np.round(sv, 4))
print("rank of [desired, interference]:", np.linalg.matrix_rank(np.hstack([desired, interf])))
