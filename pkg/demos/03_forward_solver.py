#!/usr/bin/env python3
"""Solving a heat-style block system forward in time.

The solver works per frequency: one small LU solve per bin.  A positive
coercivity certificate guarantees invertibility and the norm bound 1/c; the
causal trapezoidal stepper provides a second, independent route that agrees
with the spectral one up to the reported wrap-around.
"""

import numpy as np

from evoq import (
    EvoProblem,
    SupportWindow,
    coercivity,
    make_heat_instance,
    solve_forward,
    support_leakage,
    timestep_oracle,
)
from evoq.waveforms import bump_signal

inst = make_heat_instance(k=4, n=2048)
print(f"instance: {inst.name}, state dimension {inst.m}, nu = {inst.nu}")

cert = coercivity(inst.law, inst.nu, inst.grid)
print(f"coercivity certificate: c = {cert.c_est:.4f} "
      f"(checked on {cert.sample_count} frequencies)")

rhs = bump_signal(inst.grid, inst.nu, inst.m, component=0, center=-2.0, width=1.0)
prob = EvoProblem(inst.nu, inst.grid, inst.law, inst.A, rhs, "forward")
report = solve_forward(prob, inst.pad_fraction)

print(f"\nspectral solve:")
print(f"   residual            = {report.residual_rel:.2e}")
print(f"   ||u|| / ||f||       = {report.norm_ratio:.4f}  (bound 1/c = {1/cert.c_est:.4f})")
print(f"   causality leakage   = {report.causality_leakage:.2e}")
print(f"   wrap-around (pad)   = {report.wraparound_tolerance:.2e}")

stepped = timestep_oracle(prob)
gap = (stepped - report.solution).norm / report.solution.norm
print(f"\ncausal stepper: support leakage before t=-3: "
      f"{support_leakage(stepped, SupportWindow.at_least(-3.0)):.1f} (exact zero)")
print(f"stepper vs spectral: rel gap {gap:.2e} "
      f"(within the reported wrap-around {report.wraparound_tolerance:.2e} "
      f"or the O(dt^2) stepping error, whichever dominates)")
