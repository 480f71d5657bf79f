"""
Fault estimation on a SCARA pick-and-place cycle
================================================

A computed-torque controller drives the arm through four waypoints. Two joint
torque faults switch on at 1 s and 3 s while a force acts at the tool from
0.5 s. The streaming estimator sees only noisy positions and torques.
"""

import dataclasses

import numpy as np

from jacobifdi import Scenario, detect, run_scenario

scenario = Scenario()
record = run_scenario(scenario)
t = record["t"]

# %%
# Estimates lag the true faults by the evaluation delay ``t_d = T/3``.

print("delay t_d = %.4f s" % scenario.delay)
for name, onset in (("fest1", 1.0), ("fest2", 3.0)):
    settled = record[name][t > onset + 0.2]
    print(f"{name}: mean {settled.mean():.3f}, range [{settled.min():.2f}, {settled.max():.2f}]")

# %%
# Threshold detection with a three-sample hold.

est = np.column_stack([record["fest1"], record["fest2"]])
final = detect(t, est, scenario.threshold, hold=scenario.hold)[-1]
print("flags:", final.flags, "onsets:", final.onsets)

# %%
# Without noise the fault-free floor is what sets the achievable threshold.

quiet = run_scenario(dataclasses.replace(scenario, noise=False, faults=False))
print("noise-free, fault-free peak |f_hat|:", np.nanmax(np.abs(np.column_stack([quiet["fest1"], quiet["fest2"]])), axis=0))
