"""Bunching and antibunching of the reflected photons.

The sign of g2(0) - 1 follows the sign of the detuning: on one side of
resonance the Kerr shift pushes the two-photon state out of resonance
(antibunching), on the other side it pulls it in (bunching). The order-2
truncation tracks the exact curve qualitatively; the residual error is
third order in U (compare the two printed U values).
"""

import numpy as np

from kerrio import FockConfig, ModelParams, g2, output_g2

fock = FockConfig(n_max=20)
taus = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
for u in (0.1, 0.05):
    print(f"U = {u}")
    for delta in (-0.2, 0.2):
        p = ModelParams(delta=delta, u=u, f=0.2)
        pert = g2(p, order=2, tau_grid=taus).values
        exact = output_g2(p, fock, taus)
        print(f"  delta {delta:+.1f}  " + "  ".join(f"{a:.4f}/{b:.4f}" for a, b in zip(pert, exact)))
print("(each entry: order-2 perturbative / Lindblad, at tau =", ", ".join(f"{t:g}" for t in taus) + ")")
