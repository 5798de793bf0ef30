"""First-order coherence and quadrature squeezing of the reflected light.

G1(tau) starts at the input flux |f|^2 and relaxes to |<b_out>|^2; the
inelastic part between the two limits is the light that was scattered by
the Kerr nonlinearity. The squeezing spectrum is evaluated by analytic
Fourier transforms of the two-point cumulants.
"""

import numpy as np

from kerrio import ModelParams, g1, squeezing_spectrum

p = ModelParams(delta=0.3, u=0.1, f=0.2)
taus = np.linspace(0, 20, 11)
cold = g1(p, order=2, tau_grid=taus)
warm = g1(p.with_(n_b=0.25), order=2, tau_grid=taus)
print("tau    G1 (n_b=0)     G1 (n_b=0.25, regular part)")
for t, a, b in zip(taus, cold.values.real, warm.values.real):
    print(f"{t:5.1f}  {a:.8f}   {b:.8f}")
print(f"coherent limit at n_b=0: {cold.metadata['coherent_limit']:.8f}")
print(f"thermal delta coefficient at tau=0: {warm.metadata['delta_at_zero']}")

omegas = np.linspace(-2, 2, 9)
plus, minus = squeezing_spectrum(p.with_(delta=0.0), order=2, theta=1.49, omega_grid=omegas)
print("\nomega   S+        S-")
for w, a, b in zip(omegas, plus.values, minus.values):
    print(f"{w:5.1f}  {a:+.5f}  {b:+.5f}")
# S+ < 0 near omega = 0 means the X+ quadrature fluctuates below the vacuum level.
# X- = (exp(-i theta/2) b - exp(i theta/2) b^dag) / 2 is anti-Hermitian, so S- is
# minus the normal-ordered spectrum of the Hermitian quadrature i X-.
