"""
Decoupling a disturbance from the fault channels
================================================

The SCARA arm has two fault torques and one unknown force at the tool. A
projector that annihilates the disturbance direction leaves a map from the
residual to the faults.
"""

import numpy as np

from jacobifdi import MechanicalModel, fault_gain, left_annihilator, right_annihilator, scara_model
from jacobifdi import decoupled_fault_matrix, fault_identify_partial

model = scara_model()
q, qd = np.array([0.3, 0.6, 0.2]), np.array([0.5, -0.2, 0.0])

Dp = left_annihilator(model.D(q, qd))
print("|D_perp D| =", np.abs(Dp @ model.D(q, qd)).max())

K = fault_gain(model, q, qd)
print("K F =\n", K @ model.F(q, qd))
print("K D =", (K @ model.D(q, qd)).ravel())

# %%
# When both faults enter through the same direction only a combination of
# them is identifiable. A selector picks that combination.

F = np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]])
toy = MechanicalModel(3, 2, 1, M=lambda q: np.eye(3), C=lambda q, qd: np.zeros((3, 3)),
                      G=lambda q: np.zeros(3), F=lambda q, qd: F,
                      D=lambda q, qd: np.array([[0.0], [0.0], [1.0]]))
DpF, _ = decoupled_fault_matrix(toy, q, qd)
print("hidden fault direction:", right_annihilator(DpF).ravel())

f = np.array([1.0, 3.0])
u = -F @ f                      # zero motion, so the input balances the faults
out = fault_identify_partial(toy, q, qd, np.zeros(3), u, [[1.0, 0.0, 0.0]])
print("f1 + 2 f2 =", out[0])
