# coding: utf-8

# # BB84 with and without an eavesdropper
#
# The error rate in the check bits is the only thing Alice and Bob can see.
# Intercept-resend pushes it to about 25%; a noisy channel at p gives p/2.

# %%
import numpy as np

from qinfo.qkd import Bb84Config, bb84_entangled_run, bb84_run

# %%
for adversary in ["none", "intercept-zx", "intercept-fixed:z", "depolarize:0.1", "depolarize:0.2"]:
    s = bb84_run(Bb84Config(50_000, adversary=adversary, seed=1, qber_abort_threshold=0.15))
    n = 0 if s.final_key is None else s.final_key.size
    print(f"{adversary:18s} qber={s.qber_estimate:.4f}  {s.verdict:9s} final key {n} bits")

# %% [markdown]
# What Eve learned. Our simulator can peek at her record; Alice and Bob
# cannot.

# %%
s = bb84_run(Bb84Config(100_000, adversary="intercept-zx", seed=2))
print("Eve agrees with Alice on", round(s.adversary_agreement, 3), "of the sifted bits")

# %% [markdown]
# Abort threshold sweep under a 10% channel.

# %%
for thr in (0.08, 0.10, 0.11, 0.12, 0.15):
    verdicts = [bb84_run(Bb84Config(20_000, adversary="depolarize:0.2", seed=k, qber_abort_threshold=thr)).verdict
                for k in range(20)]
    print(f"threshold {thr:.2f}: aborted {verdicts.count('aborted')}/20")

# %% [markdown]
# Entanglement-based variant with a CHSH check on extra pairs.

# %%
e = bb84_entangled_run(Bb84Config(10_000, seed=3, chsh_pairs=20_000))
print("anticorrelation", e.anticorrelation, "S =", round(e.chsh_value, 3), "vs 2*sqrt(2) =", round(2 * np.sqrt(2), 3))
e = bb84_entangled_run(Bb84Config(10_000, seed=3, chsh_pairs=20_000, adversary="intercept-zx"))
print("with Eve: qber", round(e.qber_estimate, 3), "S =", round(e.chsh_value, 3))
