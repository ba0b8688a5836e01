# coding: utf-8

# # Limits: no cloning, Holevo, tomography cost

# %%
import numpy as np

from qinfo import infotheory as it
from qinfo.protocols import random_cloner_search, tomography_single_qubit, bloch_vector
from qinfo.qstate import CNOT, apply_gate, bloch_state, fidelity, ket, product_state, random_state
from qinfo.rng import Rng

rng = Rng(11)

# %% CNOT copies basis states and fails on superpositions
for label in ["0", "1", "+"]:
    out = apply_gate(product_state(ket(label), ket("0")), CNOT, [0, 1])
    target = product_state(ket(label), ket(label))
    print(label, "copy fidelity", round(fidelity(out, target), 6))

# %%
reports = random_cloner_search(2000, rng)
print("best random 2-qubit unitary still misses by", round(min(r.max_shortfall for r in reports), 4))
print(it.cloning_consistency(ket("0"), ket("+")))

# %% [markdown]
# ## Holevo quantity of two non-orthogonal states

# %%
for angle in np.linspace(0, np.pi / 2, 5):
    a = ket("0")
    b = bloch_state(theta=2 * angle, phi=0.0)
    ens = it.Ensemble((a, b), np.array([0.5, 0.5]))
    print(f"angle {angle:.3f}  chi={it.holevo_chi(ens):.4f}")

# %% [markdown]
# ## Tomography error vs shots

# %%
psi = random_state(1, rng)
truth = bloch_vector(psi)
for shots in (100, 1000, 10_000, 100_000):
    est = tomography_single_qubit(psi, shots, rng)
    print(shots, "max error", round(float(np.max(np.abs(np.array(est.bloch) - truth))), 4))
