#!/usr/bin/env python3
"""Null control in the supported sense, and its duality certificates.

Feasibility of least-norm synthesis, inclusion of the post-horizon range,
and finiteness of the observability constant are three faces of one
property; the demo evaluates all three on a controllable and an
uncontrollable configuration.
"""

import math

import numpy as np

from evoq import (
    ControlProblem,
    EvoProblem,
    TimeGrid,
    assemble_endmaps,
    check_skew,
    douglas_check,
    finite_sum_law,
    null_control,
    observability_constant,
)
from evoq.waveforms import random_signal

grid = TimeGrid(-4.0, 4.0, 128)
law = finite_sum_law([np.eye(2)])
A = check_skew(np.array([[0.0, -1.0], [1.0, 0.0]]))
rng = np.random.default_rng(5)
F = random_signal(grid, 1.0, 2, rng)
base = EvoProblem(1.0, grid, law, A, F, "forward")

for label, B in (("B acts on both components", np.array([[1.0, 0.3], [0.0, 0.5]])),
                 ("B acts on the first component only", np.array([[1.0], [0.0]]))):
    cp = ControlProblem(base=base, B=B, T=1.0)
    maps = assemble_endmaps(cp)
    res = null_control(cp, maps)
    dgl = douglas_check(maps.L_F, maps.L_G)
    obs = observability_constant(cp, maps)
    c_txt = f"{obs.c_obs:.4f}" if math.isfinite(obs.c_obs) else "infinite"
    print(f"{label}:")
    print(f"   least-norm synthesis feasible : {res.feasible} "
          f"(terminal residual {res.terminal_residual:.2e})")
    print(f"   post-horizon range included   : {dgl.included}")
    print(f"   observability constant        : {c_txt}")
    if res.feasible:
        print(f"   control norm                  : {res.control_norm:.4f} "
              f"(rank {res.regularization.rank}, "
              f"cutoff {res.regularization.cutoff:.1e})")
    print()

print("the three verdicts agree in both cases; infeasibility is a finding,"
      "\nnot an error, and comes with a witness datum the observation misses.")
