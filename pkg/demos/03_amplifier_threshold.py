"""Phase-insensitive gain and loss wash out entanglement in finite time.

The master equation is integrated on a truncated space and compared with the
moment-level solution; the classicality time marks where every state becomes
separable.
"""

import numpy as np

from fockwitness import devices, formulas
from fockwitness import states as S
from fockwitness import witnesses as W
from fockwitness.params import AmplifierParams, MomentSet

bell = S.single_photon_bell()
m0 = MomentSet.from_state(bell)

# %% pure loss: the witness decays as exp(-(C_a + C_b) t)
print("pure loss, C_a=0.3, C_b=0.2")
for t in (0.0, 1.0, 2.0, 4.0):
    p = AmplifierParams(0, 0.3, 0, 0.2, t)
    rho = devices.lindblad_evolve(bell, p, cutoff=4)
    print(f"  t={t:3.1f}  master eq={W.hz_product(rho).margin:.8f}  closed form={formulas.amp_loss_scaled(m0, p):.8f}")

# %% gain and loss together: the first-order witness dies long before t*,
# after which no witness of any order can fire
A, C = 0.2, 0.1
probe = AmplifierParams(A, C, A, C, 0.0)
t_star, _ = devices.classicality_threshold(probe)
print(f"\ngain A={A}, loss C={C}: classicality time t* = ln(A/C)/(A-C) = {t_star:.4f}")
for t in np.linspace(0, 1.5 * t_star, 7):
    p = AmplifierParams(A, C, A, C, float(t))
    moments = devices.linear_amp_moments(m0, p)
    line = f"  t={t:6.3f}  moment witness={moments.witness:+.6f}"
    if t <= 2.0:
        rho = devices.lindblad_evolve(bell, p, cutoff=24)
        line += f"  master eq={W.hz_product(rho).margin:+.6f}"
    print(line)
