"""
Orthonormal Jacobi polynomials
==============================

The kernels are built from Jacobi polynomials orthonormal under the weight
``(1 - tau)^alpha (1 + tau)^beta`` on ``[-1, 1]``. This demo checks the
orthonormality numerically and shows where the evaluation delay comes from.
"""

import numpy as np
from scipy.integrate import quad

from jacobifdi import JacobiBasis

basis = JacobiBasis(3, 3)

# %%
# Gram matrix of the first few members against adaptive quadrature.

n = 5
gram = np.empty((n, n))
for i in range(n):
    for j in range(n):
        gram[i, j] = quad(
            lambda x: basis.eval_orthonormal(i, x) * basis.eval_orthonormal(j, x),
            -1, 1, weight="alg", wvar=(basis.beta, basis.alpha),
        )[0]
print("max |G - I| =", np.abs(gram - np.eye(n)).max())

# %%
# The first-order approximation is exact up to a multiple of ``P_2``. Placing
# the evaluation point on the largest zero of ``P_2`` removes that term; on a
# window of length ``T`` the zero at ``1/3`` means a delay of ``T/3``.

z = basis.zeros(2)
print("zeros of P_2:", z)
T = 0.1
print("delay for T = 0.1 s:", T * (1 - z[-1]) / 2)
