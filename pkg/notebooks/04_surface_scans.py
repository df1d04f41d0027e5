"""
Speed-limit surfaces over initial state and horizon
===================================================

A coarse version of the (a, tau) scans; the CLI runs the full 101 x 200
grids (``qsl-lab scan --model pdiv-crossover --k 0.5 --output scan.csv``).
"""

import io

import numpy as np

from qsl_lab.scan import ScanConfig, compare_scans, qsl_surface_scan

cfg_half = ScanConfig(model="pdiv-crossover", k=0.5, a_count=11, tau_count=20)
cfg_one = ScanConfig(model="pdiv-crossover", k=1.0, a_count=11, tau_count=20)
half = qsl_surface_scan(cfg_half)
one = qsl_surface_scan(cfg_one)
print(half.verdict.divisibility.value, one.verdict.divisibility.value)

# rows are (a, tau, ratio, bures_angle, lambda_op), a-major
surface = half.ratio_surface
print("a = 1 column:", surface[-1].min(), surface[-1].max())
print("smallest ratio:", surface.min().round(4), "at a =", cfg_half.a_grid[np.argmin(surface) // cfg_half.tau_count])

# where the two surfaces differ, and where only one of them sits at 1
cmp = compare_scans(half, one)
print("max |difference|:", round(cmp.max_abs_diff, 4))
print("points at 1 in one scan only:", cmp.unity_only_a.tolist(), cmp.unity_only_b.tolist())

buf = io.StringIO()
half.write_csv(buf)
print(buf.getvalue().splitlines()[:3])
