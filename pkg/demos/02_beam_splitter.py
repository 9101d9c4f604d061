"""Nonclassical light on one port of a beam splitter produces entanglement.

Fock-space propagation is compared against the moment-map closed forms, then a
squeezed input is mixed with a strong coherent beam.
"""

import cmath

import numpy as np

from fockwitness import devices, formulas
from fockwitness import states as S
from fockwitness import witnesses as W
from fockwitness.fock import moment_table, tensor
from fockwitness.params import BeamSplitterParams

# %% |3> on port a, vacuum on port b, sweep the reflectivity
inputs = {"|3>": S.number(3), "coherent 1.2": S.coherent(1.2), "squeezed r=0.5": S.squeezed_vacuum(0.5)}
print("|r|    " + "  ".join(f"{k:>16s}" for k in inputs))
for r in np.linspace(0.1, 0.9, 9):
    p = BeamSplitterParams.from_angle(float(np.arcsin(r)))
    margins = []
    for a in inputs.values():
        out = devices.beam_splitter(tensor(a, S.number(0)), (0, 1), p)
        margins.append(W.hz_product(out, 2, 2).margin)
    print(f"{r:.2f}  " + "  ".join(f"{m + 0.0:16.5f}" for m in margins))

# %% closed form against Fock propagation at the balanced point
b = BeamSplitterParams.balanced()
a = S.number(3)
fock = W.hz_product(devices.beam_splitter(tensor(a, S.number(0)), (0, 1), b), 2, 2)
closed = formulas.bs_m2_moments(moment_table(a, 4), b.t, b.r)
print(f"\nm=n=2 at 50:50, |3> input: Fock lhs={fock.lhs:.10f}, closed form lhs={closed.values['lhs']:.10f}")

# %% squeezed vacuum mixed with a bright coherent beam
table = moment_table(S.squeezed_vacuum(0.5), 4)
phase = formulas.optimal_beta_phase(b.t, b.r, table)
for mag in (2.0, 4.0, 8.0):
    beta = mag * cmath.exp(1j * phase)
    out = devices.beam_splitter(tensor(S.squeezed_vacuum(0.5), S.coherent(beta, headroom=10)), (0, 1), b)
    exact = W.hz_product(out).margin
    lead = formulas.bs_coherent_leading(beta, b.t, b.r, table)
    print(f"|beta|={mag:3.0f}  Fock margin={exact:10.4f}  leading term={lead:10.4f}  rel gap={abs(exact - lead) / abs(lead):.3%}")
