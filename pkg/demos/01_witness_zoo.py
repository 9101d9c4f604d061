"""Tour of the two-mode witnesses on a handful of textbook states.

Run with ``python3 demos/01_witness_zoo.py``.
"""

from fockwitness import states as S
from fockwitness import witnesses as W
from fockwitness.fock import Mixture, tensor

# %% states
zoo = {
    "coherent x coherent": S.product_coherent(1.0, 0.5j),
    "(|10> + |01>)/sqrt2": S.single_photon_bell(),
    "|3,0> + |0,3>": S.number_pair(3, 0),
    "photon-added pair (1, 1)": S.photon_added_pair(1, 1),
    "cat pair (1, 0.3)": S.cat_pair(1.0, 0.3),
}
thermal = S.thermal(0.4)
zoo["thermal x |1>"] = Mixture(thermal.weights, tuple(tensor(c, S.number(1)) for c in thermal.states))

# %% first-order checks
print(f"{'state':28s} {'hz_product':>12s} {'hz_central':>12s} {'duan':>12s}")
for name, st in zoo.items():
    prod = W.hz_product(st)
    cent = W.hz_central(st)
    duan = W.duan_simon(st)
    print(f"{name:28s} {prod.margin + 0.0:12.5f} {cent.margin + 0.0:12.5f} {duan.margin + 0.0:12.5f}")

# %% higher orders catch what first order misses
npair = S.number_pair(3, 0)
for m in (1, 2, 3):
    rep = W.hz_product(npair, m, m)
    print(f"|3,0>+|0,3>  order m=n={m}: lhs={rep.lhs:.3f} rhs={rep.rhs:.3f} -> {rep.verdict}")
