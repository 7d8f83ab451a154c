"""
How much switching a regret bound can tolerate
==============================================

A decay certificate ``k sigma(t)`` only turns into a regret bound if the
cost does not switch too often. Products of ``k sigma(gap)`` over runs of
switches must contract, and that depends on the chatter bound ``n0`` and the
average dwell time ``phi``. This demo finds the smallest admissible ``phi``
for two certificates and checks the closed-form constants against an
exhaustive search over switch sequences.
"""

from reglab import (RateCertificate, brute_force_sum_product, delta_bar, lemma2_P, min_dwell,
                    min_dwell_exponential)
from reglab.bounds import exponential_sum_product_bound

inverse_square = RateCertificate.from_family("inverse_square")
geometric = RateCertificate.from_family("geometric", 2.0, lam=0.5)

###############################################################################
# Contraction factor as the dwell time grows (k = 1, sigma = 1/t^2, n0 = 1).

for phi in (1.0, 1.5, 2.0, 3.0, 5.0):
    db = delta_bar(1, inverse_square, 1, phi, strict=False)
    print(f"phi={phi:3.1f}  delta={db.delta:.4f}  worst gaps {db.witness}")
print("smallest phi on the half-step grid:", min_dwell(1, inverse_square, 1))

###############################################################################
# Once delta < 1, every sum of switch products stays below P.

for n0 in (0, 1, 2):
    phi = min_dwell(1, inverse_square, n0)
    P = lemma2_P(1, delta_bar(1, inverse_square, n0, phi).delta, n0)
    worst = max(brute_force_sum_product(1, inverse_square, n0, phi, n).value for n in range(11))
    print(f"n0={n0}  phi={phi}  exhaustive max {worst:.4f} <= P = {P:.4f}")

###############################################################################
# For exponential decay ``c lam^t`` the dwell time has a closed form, and so
# does the resulting bound.

c, lam, phi0 = 2.0, 0.5, 1.0
phi_min = min_dwell_exponential(c, lam, phi0)
print("closed-form minimal dwell time:", phi_min)
for n0 in (0, 1, 2):
    bound = exponential_sum_product_bound(c, lam, phi0, n0)
    worst = max(brute_force_sum_product(c, geometric, n0, phi_min + 1, n).value for n in range(11))
    print(f"n0={n0}  exhaustive max {worst:.4f} <= {bound:.4f}")
