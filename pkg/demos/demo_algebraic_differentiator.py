"""
Algebraic differentiation with FIR filters
==========================================

Derivatives of a sampled signal are estimated by moving the derivative onto a
smooth kernel and discretizing the kernel into taps. The result is a plain
FIR filter, delayed by ``t_d``.
"""

import numpy as np

from jacobifdi import JacobiBasis, KernelSpec, SignalWindow, WindowSpec, apply, default_delay, fir_weights

basis = JacobiBasis(3, 3)
Ts, L = 0.005, 20
t_d = default_delay(basis, 1, Ts * L)
window = WindowSpec(Ts, L, t_d)

smooth = fir_weights(KernelSpec.plain(basis, 1, window))
slope = fir_weights(KernelSpec.derivative(basis, 1, window, 1))
print("tap sums:", smooth.weights.sum(), slope.weights.sum())

# %%
# Feed a noisy sine one sample at a time. The estimates refer to ``t - t_d``.

rng = np.random.default_rng(0)
t = np.arange(400) * Ts
x = np.sin(2 * np.pi * t) + 1e-3 * rng.standard_normal(t.size)

buf = SignalWindow(L)
errors = []
for tk, xk in zip(t, x):
    buf.push(xk)
    if buf.ready:
        est = apply(slope, buf)
        errors.append(est - 2 * np.pi * np.cos(2 * np.pi * (tk - t_d)))
print("derivative error: rms %.3g, max %.3g" % (np.sqrt(np.mean(np.square(errors))), np.max(np.abs(errors))))

# %%
# A backward difference on the same data for comparison.

fd = np.diff(x) / Ts - 2 * np.pi * np.cos(2 * np.pi * (t[1:] - Ts / 2))
print("backward difference error: rms %.3g" % np.sqrt(np.mean(fd**2)))
