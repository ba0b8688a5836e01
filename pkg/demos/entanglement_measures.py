# coding: utf-8

# # Measuring entanglement
#
# Schmidt coefficients, entropy of entanglement and the partial-transpose
# test on a few hand-picked states plus a Werner-style family.

# %%
import numpy as np

from qinfo import infotheory as it
from qinfo.qstate import DensityOperator, PureState, bell_state, ket, product_state, random_state, to_density
from qinfo.rng import Rng

# %%
states = {
    "|0>|+>": product_state(ket("0"), ket("+")),
    "phi+": bell_state("phi+"),
    "psi-": bell_state("psi-"),
    "random": random_state(2, Rng(3)),
}
for name, psi in states.items():
    sd = it.schmidt_decompose(psi, 1)
    print(f"{name:7s} schmidt={np.round(sd.coefficients, 4)} "
          f"E={it.entanglement_entropy(psi, 1):.4f} ebits  ppt={it.ppt_check(to_density(psi))[0]}")

# %% [markdown]
# Mixing the singlet with white noise. The partial transpose turns negative
# once the singlet weight passes 1/3.

# %%
singlet = to_density(bell_state("psi-")).matrix
for w in np.linspace(0, 1, 11):
    rho = DensityOperator(w * singlet + (1 - w) * np.eye(4) / 4)
    ok, lo = it.ppt_check(rho)
    print(f"w={w:.1f}  min eig of partial transpose {lo:+.3f}  {'separable' if ok else 'entangled'}")

# %% [markdown]
# Three qubits: a GHZ state has one ebit across every single-qubit cut.

# %%
ghz = (ket("000").amplitudes + ket("111").amplitudes) / np.sqrt(2)
ghz = PureState(ghz)
for cut in ([0], [1], [2]):
    print(cut, it.entanglement_entropy(ghz, cut), it.ppt_status(to_density(ghz), cut))
