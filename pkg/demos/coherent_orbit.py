"""A coherent state and its Kepler orbit.

Each label alpha fixes a great circle on S^3, hence a Kepler ellipse at energy -1/2. The shell-N
coherent state built from alpha concentrates on that ellipse, so its Stark diagonal element
tends to the orbit average of x_1. Run: python demos/coherent_orbit.py
"""
import numpy as np

from szegolab.coherent import coherent_stark_diagonal, momentum_norm, sample_alpha, tail_mass
from szegolab.kepler import orbit_average, orbit_from_alpha

alpha = sample_alpha(np.random.default_rng(3))
orbit = orbit_from_alpha(alpha)
avg = orbit_average(orbit, lambda x: x[..., 0])
worst = max(orbit.invariant_errors().values())
print(f"eccentricity {orbit.eccentricity:.4f}, worst invariant violation {worst:.1e}")
print(f"orbit average of x_1: {avg:.6f}")
print(" N   <x_1> in state   error     norm-1     mass beyond r=4")
for N in (4, 8, 16, 32):
    d = coherent_stark_diagonal(alpha, N, 1.0)
    tail = tail_mass(alpha, N, 4.0) if N <= 10 else float("nan")
    print(f"{N:3d}   {d:.6f}        {abs(d - avg):.2e}  {momentum_norm(alpha, N) - 1:+.1e}   {tail:.2e}")
