# coding: utf-8

# # Teleportation and dense coding
#
# Both protocols start from a shared singlet. Dense coding pushes two
# classical bits through one qubit; teleportation pushes one qubit through
# two classical bits. Run with `python demos/teleport_and_dense_coding.py`.

# %%
import numpy as np

from qinfo.protocols import (
    TELEPORT_CORRECTIONS,
    bob_state_before_message,
    superdense_encode_decode,
    teleport,
    teleport_branches,
)
from qinfo.qstate import bloch_state
from qinfo.rng import Rng

rng = Rng(7)

# %% [markdown]
# ## Dense coding
# Alice applies one of four local operations to her half of the pair and
# sends the qubit. Bob's Bell measurement recovers both bits.

# %%
for msg in ["00", "01", "10", "11"]:
    decoded, log = superdense_encode_decode(msg, rng)
    print(msg, "->", "".join(map(str, decoded)), "| events:", " ".join(log.kinds()))

# %% [markdown]
# ## Teleportation
# Pick some state on the Bloch sphere. Each of Alice's four readouts is
# equally likely, and Bob's qubit before the correction is a fixed
# Pauli image of chi.

# %%
chi = bloch_state(theta=1.1, phi=0.4)
for branch in teleport_branches(chi):
    name, _ = TELEPORT_CORRECTIONS[branch.bell_state]
    print(f"{branch.bell_state:5s} p={branch.probability:.3f} correction {name}")

# %%
# Before the two bits arrive Bob holds a maximally mixed qubit,
# whatever chi was.
print(np.round(bob_state_before_message(chi).matrix, 12))

# %%
fids = [teleport(chi, rng).fidelity_to_input for _ in range(500)]
print("worst fidelity over 500 runs:", min(fids))

# the full event log of one run, as JSON lines
print(teleport(chi, rng).transcript.to_jsonl())
