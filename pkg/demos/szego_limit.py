"""Cluster shifts of a hydrogen shell against the classical orbit-average measure.

The first-order Stark shifts of shell N, scaled by N/F, fill [-3F/2, 3F/2]. As N grows their
empirical distribution approaches the law of the orbit average of F x_1 under Liouville measure
on the energy surface. Run: python demos/szego_limit.py
"""
import numpy as np

from szegolab.distributions import EmpiricalDistribution, ks_distance
from szegolab.kepler import classical_samples
from szegolab.stark import quantum_distribution, quantum_moment

F = 1.0
samples = classical_samples(F, 200_000, seed=1)
classical = EmpiricalDistribution.from_samples(samples)
print(f"classical second moment {np.mean(samples ** 2):.5f}   (limit 3F^2/8 = {3 * F * F / 8})")
print(" N   quantum m2   |m2 - 3/8|    KS distance")
for N in (5, 10, 20, 40):
    m2 = quantum_moment(N, F, 2)
    ks = ks_distance(quantum_distribution(N, F), classical)
    print(f"{N:3d}   {m2:.6f}    {abs(m2 - 0.375):.2e}      {ks:.4f}")
