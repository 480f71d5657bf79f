"""
Filtering products of signals
=============================

Terms like ``M(q) qdd`` need the derivative of ``q`` inside a product with a
configuration-dependent factor. Expanding the factor in the window's Jacobi
coefficients lets the derivative move onto a set of modified kernels.
"""

import numpy as np

from jacobifdi import JacobiBasis, KernelSpec, SignalWindow, WindowSpec, approximate_product, fir_weights
from jacobifdi.kernels import continuous_apply

basis = JacobiBasis(3, 3)
Ts, L, T = 0.005, 20, 0.1
window = WindowSpec(Ts, L, T / 3)

q = lambda s: 0.4 * np.sin(1.5 * s)
a = lambda s: np.cos(q(s))           # slowly varying factor
qdd = lambda s: -0.9 * np.sin(1.5 * s)

t = 1.0
wa, wq = SignalWindow(L), SignalWindow(L)
for k in range(L - 1, -1, -1):
    wa.push(a(t - k * Ts))
    wq.push(q(t - k * Ts))

# %%
# Increasing the expansion order ``N*`` adds coefficient/modified pairs.

reference = continuous_apply(KernelSpec.plain(basis, 1, window), lambda s: a(s) * qdd(s), t)
for n_star in (0, 1, 2, 3):
    coeff = [fir_weights(KernelSpec.coefficient(basis, window, i)) for i in range(n_star + 1)]
    mod = [fir_weights(KernelSpec.modified(basis, 1, window, i, 2)) for i in range(n_star + 1)]
    est = approximate_product(coeff, mod, wa, wq)
    print(f"N* = {n_star}: {est:+.6f}  (continuum {reference:+.6f})")
