"""Complex-scaled Stark resonances of the N = 2 shell in a Coulomb Sturmian basis.

At zero field the four states sit on -1/8 for every dilation angle. A small field splits them
into the linear Stark pattern and gives them exponentially small widths; the mean shift is the
second-order polarizability term. Run: python demos/resonance_cluster.py
"""
from szegolab.hydrogen import SemiclassicalConfig
from szegolab.scaling import (SturmianBasis, resonance_cluster, second_order_mean_shift,
                              theta_independence_scan)

cfg = SemiclassicalConfig(2, 1.0)
basis = SturmianBasis(kappa=0.5, n_max=30, l_max=5)
scan = theta_independence_scan(cfg, basis, [0.1, 0.3, 0.5], field=0.0)
print(f"field 0: cluster moves by at most {scan.max_distance:.1e} across theta")

f = 1e-4
cluster, _ = resonance_cluster(cfg, 0.3, basis, field=f)
print(f"field {f}: shifts from -1/8 (first-order pattern is 0, 0, +-3f = +-{3 * f:g})")
for z, m in zip(cluster.shifts, cluster.m):
    print(f"  m={m:+d}  {z.real:+.9e} {z.imag:+.1e}i")
print(f"mean shift {cluster.shifts.mean().real:.6e}, second-order prediction "
      f"{second_order_mean_shift(cfg, basis, f):.6e}")
