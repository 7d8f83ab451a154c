"""
Two integrator controllers, one diverging and one bounded regret
================================================================

Both controllers drive ``x_{t+1} = x_t + u_t`` to a target they learn one
step late. The first uses the gain ``1/(tau+1)`` and reaches the target like
``1/t``; the second uses ``(2 tau + 1)/(tau + 1)^2`` and reaches it like
``1/t^2``. Only the second has summable tracking error, and that is what
separates growing from bounded regret.
"""

import math

import numpy as np

from reglab import (CostSchedule, Example1Baseline, Example1Improved, SteadyStatePair, SystemModel,
                    classify_summability, dynamic_regret, rollout)
from reglab.metrics import prefix_sum_fn

T = 4000
plant = SystemModel.integrator(1)
cost = CostSchedule.constant(SteadyStatePair([0.0], [0.0]), T)

###############################################################################
# Roll both controllers out from x0 = 1 and compare with the exact laws.

slow = rollout(plant, Example1Baseline(), cost, [1.0], T)
fast = rollout(plant, Example1Improved(), cost, [1.0], T)
t = np.arange(1, 6)
print("x_t (1/t law):  ", slow.x[1:6, 0], "vs", 1 / t)
print("x_t (1/t^2 law):", fast.x[1:6, 0], "vs", 1 / t ** 2)

###############################################################################
# Regret at doubling horizons. The first keeps gaining about ln 2 per
# doubling, the second settles below 2 + pi^2/6.

for H in (250, 500, 1000, 2000, 4000):
    print(f"T={H:5d}  regret 1/t: {dynamic_regret(slow, cost, H):.4f}"
          f"   regret 1/t^2: {dynamic_regret(fast, cost, H):.6f}")
print("limit for the 1/t^2 controller:", 2 + math.pi ** 2 / 6)

###############################################################################
# The same conclusion from the summability classifier.

horizons = (125, 250, 500, 1000, 2000)
for name, traj in (("1/t", slow), ("1/t^2", fast)):
    v = classify_summability(prefix_sum_fn(traj.loss), horizons)
    print(f"{name:6s} verdict={v.verdict:10s} last doubling adds {v.growth_per_doubling:.4f}")
