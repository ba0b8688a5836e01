"""BB84 key distribution with pluggable channel adversaries.

Qubits are simulated in batches: a run of N transmissions is an ``(N, 2)``
array of single-qubit amplitudes (``(N, 2, 2)`` for singlet pairs), evolved
and measured with the Born rule row by row. This is the same physics as the
register simulator in :mod:`qinfo.qstate`, vectorized so that 1e5-qubit
sessions stay fast.

Randomness is split into independent sub-streams of the session seed, so
changing the adversary never changes Alice's or Bob's own random choices:

=====  =============================================
key    used for
=====  =============================================
1      Alice's bits and bases
2      Bob's bases
3      channel (Eve's bases and outcomes, noise)
4      Born-rule draws of the legitimate measurements
5      check-subset selection
6      reconciliation pairings
7      privacy-amplification hash seed
8      CHSH setting choices
=====  =============================================

Bases are encoded ``0 = Z`` (sigma_z eigenbasis) and ``1 = X``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .infotheory import binary_entropy
from .protocols import Transcript
from .qstate import BORN_FLOOR, H, I2, X, Y, Z, axis_basis
from .rng import Rng

Z_BASIS, X_BASIS = 0, 1

ALICE, BOB, CHANNEL, MEASURE, CHECKS, RECON, HASH, CHSH = range(1, 9)

_PAULI_STACK = np.stack([I2, X, Y, Z])
_BASIS_STACK = np.stack([I2, H])  # rows: the basis change for Z and for X


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class AdversaryModel:
    """What happens to each qubit in transit.

    ``kind`` is one of ``none``, ``intercept-zx`` (Eve measures sigma_z or
    sigma_x at random and resends her result), ``intercept-fixed`` (always
    ``basis``), or ``depolarize`` (with probability ``p`` the qubit is hit by
    a uniformly random Pauli, i.e. replaced by the maximally mixed state).
    """

    kind: str = "none"
    basis: str | None = None
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "intercept-zx", "intercept-fixed", "depolarize"):
            raise ConfigError(f"unknown adversary {self.kind!r}")
        if self.kind == "intercept-fixed" and self.basis not in ("z", "x"):
            raise ConfigError("intercept-fixed needs basis 'z' or 'x'")
        if self.kind == "depolarize" and not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"depolarizing probability must lie in [0, 1], got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "AdversaryModel":
        """Parse ``none``, ``intercept-zx``, ``intercept-fixed:z|x`` or ``depolarize:<p>``."""
        text = text.strip().lower()
        if text in ("none", "intercept-zx"):
            return cls(text)
        kind, _, arg = text.partition(":")
        if kind == "intercept-fixed":
            return cls(kind, basis=arg)
        if kind == "depolarize":
            try:
                return cls(kind, p=float(arg))
            except ValueError:
                raise ConfigError(f"bad depolarizing probability {arg!r}") from None
        raise ConfigError(f"unknown adversary {text!r}")

    def __str__(self) -> str:
        if self.kind == "intercept-fixed":
            return f"intercept-fixed:{self.basis}"
        if self.kind == "depolarize":
            return f"depolarize:{self.p!r}"
        return self.kind

    @property
    def intercepts(self) -> bool:
        return self.kind.startswith("intercept")


@dataclass(frozen=True)
class Bb84Config:
    num_qubits_sent: int
    check_fraction: float = 0.25
    qber_abort_threshold: float = 0.11
    adversary: AdversaryModel = field(default_factory=AdversaryModel)
    seed: int = 0
    recon_rounds: int = 4
    # the 2 in n * (1 - 2 h(qber)); a leakage heuristic, not a security proof
    leakage_factor: float = 2.0
    chsh_pairs: int = 0

    def __post_init__(self):
        if isinstance(self.adversary, str):
            object.__setattr__(self, "adversary", AdversaryModel.parse(self.adversary))
        if int(self.num_qubits_sent) < 1:
            raise ConfigError("num_qubits_sent must be positive")
        if not 0.0 < self.check_fraction < 1.0:
            raise ConfigError("check_fraction must lie in (0, 1)")
        if self.check_fraction * self.num_qubits_sent < 1:
            raise ConfigError("check_fraction * num_qubits_sent must be at least 1")
        if not 0.0 < self.qber_abort_threshold < 1.0:
            raise ConfigError("qber_abort_threshold must lie in (0, 1)")
        if self.recon_rounds < 0 or self.chsh_pairs < 0 or self.leakage_factor < 0:
            raise ConfigError("recon_rounds, chsh_pairs and leakage_factor must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def to_json(self) -> dict:
        d = asdict(self)
        d["adversary"] = str(self.adversary)
        return d


# -- batch simulation ----------------------------------------------------------

def _apply(amps: np.ndarray, qubit: int, gates: np.ndarray) -> np.ndarray:
    """Apply a per-row 2x2 gate (``gates`` is ``(N, 2, 2)``) to one qubit of each row."""
    moved = np.moveaxis(amps, qubit + 1, 1)
    shape = moved.shape
    out = np.einsum("nij,njk->nik", gates, moved.reshape(shape[0], 2, -1))
    return np.moveaxis(out.reshape(shape), 1, qubit + 1)


def _measure(amps: np.ndarray, qubit: int, bases: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projective measurement of one qubit per row in the basis whose columns are ``bases[n]``.

    Returns the outcomes and the collapsed, renormalized post-measurement rows.
    """
    rotated = _apply(amps, qubit, np.conj(np.swapaxes(bases, 1, 2)))
    moved = np.moveaxis(rotated, qubit + 1, 1).reshape(amps.shape[0], 2, -1)
    weight = np.sum(np.abs(moved) ** 2, axis=2)
    p0 = weight[:, 0] / weight.sum(axis=1)
    p0 = np.where(p0 < BORN_FLOOR, 0.0, np.where(p0 > 1.0 - BORN_FLOOR, 1.0, p0))
    outcome = (u >= p0).astype(np.uint8)
    keep = np.zeros_like(moved)
    rows = np.arange(amps.shape[0])
    keep[rows, outcome] = moved[rows, outcome]
    keep /= np.linalg.norm(keep.reshape(amps.shape[0], -1), axis=1)[:, None, None]
    collapsed = np.moveaxis(keep.reshape(np.moveaxis(rotated, qubit + 1, 1).shape), 1, qubit + 1)
    return outcome, _apply(collapsed, qubit, bases)


def _prepare(bits: np.ndarray, bases: np.ndarray) -> np.ndarray:
    amps = np.zeros((bits.size, 2), dtype=np.complex128)
    amps[np.arange(bits.size), bits] = 1.0
    return _apply(amps, 0, _BASIS_STACK[bases])


def _singlets(n: int) -> np.ndarray:
    amps = np.zeros((n, 2, 2), dtype=np.complex128)
    amps[:, 0, 1] = 1 / np.sqrt(2)
    amps[:, 1, 0] = -1 / np.sqrt(2)
    return amps


@dataclass
class _EveRecord:
    bases: np.ndarray
    bits: np.ndarray


def _channel(amps: np.ndarray, qubit: int, adversary: AdversaryModel, rng: Rng) -> tuple[np.ndarray, _EveRecord | None]:
    n = amps.shape[0]
    if adversary.kind == "none":
        return amps, None
    if adversary.kind == "depolarize":
        hit = rng.random(n) < adversary.p
        which = rng.integers(4, n)
        gates = _PAULI_STACK[np.where(hit, which, 0)]
        return _apply(amps, qubit, gates), None
    if adversary.kind == "intercept-zx":
        eve_bases = rng.bits(n)
    else:
        eve_bases = np.full(n, Z_BASIS if adversary.basis == "z" else X_BASIS, dtype=np.uint8)
    # measuring and resending the eigenstate found is exactly the collapsed post-state
    eve_bits, amps = _measure(amps, qubit, _BASIS_STACK[eve_bases], rng.random(n))
    return amps, _EveRecord(eve_bases, eve_bits)


# -- classical post-processing ---------------------------------------------------

def _bitarray(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.uint8).ravel()
    if np.any(a > 1):
        raise ValueError(f"{name} must contain only 0/1")
    return a


def sift(alice_bases, bob_bases, alice_bits, bob_bits) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep only rounds where both parties used the same basis, in order."""
    ab, bb = np.asarray(alice_bases), np.asarray(bob_bases)
    a, b = _bitarray(alice_bits, "alice_bits"), _bitarray(bob_bits, "bob_bits")
    if not (ab.size == bb.size == a.size == b.size):
        raise ValueError("sift needs four lists of equal length")
    idx = np.flatnonzero(ab == bb)
    return a[idx], b[idx], idx


def estimate_qber(sifted_alice, sifted_bob, check_indices) -> tuple[float, np.ndarray, np.ndarray]:
    """Mismatch rate on the publicly compared positions; those bits are then discarded."""
    a, b = _bitarray(sifted_alice, "sifted_alice"), _bitarray(sifted_bob, "sifted_bob")
    if a.size != b.size:
        raise ValueError("sifted keys differ in length")
    idx = np.unique(np.asarray(check_indices, dtype=np.int64))
    if idx.size == 0:
        raise ValueError("no check positions given")
    if idx[0] < 0 or idx[-1] >= a.size:
        raise IndexError("check index out of range")
    qber = float(np.mean(a[idx] != b[idx]))
    rest = np.ones(a.size, dtype=bool)
    rest[idx] = False
    return qber, a[rest], b[rest]


@dataclass(frozen=True, eq=False)
class ReconciliationResult:
    corrected_alice: np.ndarray
    corrected_bob: np.ndarray
    bits_disclosed: int
    residual_mismatch: int
    rounds: int


def reconcile_parity(alice_key, bob_key, rng: Rng, rounds: int = 4) -> ReconciliationResult:
    """Pairwise parity reconciliation.

    Each round pairs the bits at random. Alice announces each pair's parity;
    pairs whose parities differ are discarded, otherwise both keep the first
    bit and drop the second. ``residual_mismatch`` compares the outputs
    directly, which only a simulator can do.
    """
    a, b = _bitarray(alice_key, "alice_key"), _bitarray(bob_key, "bob_key")
    if a.size != b.size:
        raise ValueError("keys differ in length")
    disclosed = 0
    for _ in range(rounds):
        if a.size < 2:
            a, b = a[:0], b[:0]
            break
        perm = rng.permutation(a.size)
        pairs = perm[: 2 * (a.size // 2)].reshape(-1, 2)
        disclosed += pairs.shape[0]
        same = (a[pairs[:, 0]] ^ a[pairs[:, 1]]) == (b[pairs[:, 0]] ^ b[pairs[:, 1]])
        keep = np.sort(pairs[same, 0])
        a, b = a[keep], b[keep]
    return ReconciliationResult(a, b, disclosed, int(np.sum(a != b)), rounds)


def hash_matrix(output_length: int, input_length: int, rng: Rng) -> np.ndarray:
    """Uniformly random binary matrix; a 2-universal family over GF(2)."""
    return rng.bits(output_length * input_length).reshape(output_length, input_length)


def privacy_amplify(key, output_length: int, rng: Rng | None = None, matrix=None) -> np.ndarray:
    """Compress ``key`` to ``output_length`` bits as ``R @ key mod 2``.

    Both parties build the same ``R`` from a publicly agreed seed. Passing
    ``matrix`` overrides the random choice (e.g. the identity, in tests).
    """
    k = _bitarray(key, "key")
    if output_length > k.size or output_length < 0:
        raise ValueError(f"cannot amplify {k.size} bits to {output_length}")
    if matrix is None:
        if rng is None:
            raise ValueError("privacy_amplify needs an rng or an explicit matrix")
        matrix = hash_matrix(output_length, k.size, rng)
    r = np.asarray(matrix, dtype=np.int64)
    if r.shape != (output_length, k.size):
        raise ValueError(f"hash matrix shape {r.shape} does not map {k.size} -> {output_length}")
    return ((r @ k.astype(np.int64)) % 2).astype(np.uint8)


def amplified_length(key_length: int, qber: float, leakage_factor: float = 2.0) -> int:
    """``max(0, floor(n * (1 - leakage_factor * h2(qber))))``."""
    return max(0, math.floor(key_length * (1.0 - leakage_factor * binary_entropy(min(max(qber, 0.0), 1.0)))))


# -- sessions --------------------------------------------------------------------

@dataclass(eq=False)
class Bb84Session:
    config: Bb84Config
    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_bits: np.ndarray
    sifted_alice: np.ndarray
    sifted_bob: np.ndarray
    sifted_indices: np.ndarray
    check_indices: np.ndarray
    qber_estimate: float
    verdict: str
    transcript: Transcript
    raw_key_alice: np.ndarray | None = None
    raw_key_bob: np.ndarray | None = None
    reconciliation: ReconciliationResult | None = None
    final_key_alice: np.ndarray | None = None
    final_key_bob: np.ndarray | None = None
    # simulator-only ground truth; real parties never see these
    eve_bases: np.ndarray | None = None
    eve_bits: np.ndarray | None = None
    bob_raw_outcomes: np.ndarray | None = None
    chsh_value: float | None = None

    @property
    def completed(self) -> bool:
        return self.verdict == "completed"

    @property
    def final_key(self) -> np.ndarray | None:
        """The shared key, or ``None`` when aborted or when the two copies differ."""
        if not self.completed or not self.keys_match:
            return None
        return self.final_key_alice

    @property
    def keys_match(self) -> bool:
        if self.final_key_alice is None:
            return False
        return bool(np.array_equal(self.final_key_alice, self.final_key_bob))

    @property
    def sift_fraction(self) -> float:
        return self.sifted_alice.size / self.config.num_qubits_sent

    @property
    def adversary_agreement(self) -> float | None:
        """Fraction of sifted positions where Eve's bit equals Alice's (oracle)."""
        if self.eve_bits is None or self.sifted_indices.size == 0:
            return None
        idx = self.sifted_indices
        return float(np.mean(self.eve_bits[idx] == self.alice_bits[idx]))

    @property
    def anticorrelation(self) -> float | None:
        """Entangled variant: same-basis rounds where Bob's raw outcome opposed Alice's."""
        if self.bob_raw_outcomes is None or self.sifted_indices.size == 0:
            return None
        idx = self.sifted_indices
        return float(np.mean(self.bob_raw_outcomes[idx] != self.alice_bits[idx]))

    def report(self) -> dict:
        def length(k):
            return None if k is None else int(k.size)

        rec = self.reconciliation
        return {
            "config": self.config.to_json(),
            "qber": None if math.isnan(self.qber_estimate) else self.qber_estimate,
            "sift_fraction": self.sift_fraction,
            "verdict": self.verdict,
            "key_length_raw": length(self.raw_key_alice),
            "key_length_final": length(self.final_key_alice),
            "keys_match": self.keys_match,
            "bits_disclosed": None if rec is None else rec.bits_disclosed,
            "residual_mismatch": None if rec is None else rec.residual_mismatch,
            "adversary_agreement": self.adversary_agreement,
            "anticorrelation": self.anticorrelation,
            "chsh": self.chsh_value,
        }


def _finish(cfg: Bb84Config, rng: Rng, log: Transcript, alice_bits, alice_bases, bob_bases, bob_bits, **extra) -> Bb84Session:
    log.message("Alice", "Bob", [], content="bases", count=int(alice_bases.size))
    log.message("Bob", "Alice", [], content="bases", count=int(bob_bases.size))
    sa, sb, idx = sift(alice_bases, bob_bases, alice_bits, bob_bits)
    log.note("sift", retained=int(idx.size))

    k = int(round(cfg.check_fraction * sa.size))
    if k == 0:
        log.note("abort", reason="no sifted bits available for checking")
        return Bb84Session(cfg, alice_bits, alice_bases, bob_bases, bob_bits, sa, sb, idx,
                           np.zeros(0, dtype=np.int64), float("nan"), "aborted", log, **extra)
    checks = rng.child(CHECKS).choose(sa.size, k)
    qber, ra, rb = estimate_qber(sa, sb, checks)
    log.message("Alice", "Bob", sa[checks], content="check bits", positions=int(k))
    log.message("Bob", "Alice", sb[checks], content="check bits", positions=int(k))
    log.note("qber", estimate=qber, threshold=cfg.qber_abort_threshold)
    session = Bb84Session(cfg, alice_bits, alice_bases, bob_bases, bob_bits, sa, sb, idx,
                          checks, qber, "aborted", log, **extra)
    if qber > cfg.qber_abort_threshold:
        log.note("abort", reason="qber above threshold")
        return session

    session.verdict = "completed"
    session.raw_key_alice, session.raw_key_bob = ra, rb
    rec = reconcile_parity(ra, rb, rng.child(RECON), cfg.recon_rounds)
    session.reconciliation = rec
    log.note("reconcile", rounds=rec.rounds, parities_disclosed=rec.bits_disclosed, kept=int(rec.corrected_alice.size))

    m = amplified_length(rec.corrected_alice.size, qber, cfg.leakage_factor)
    hash_seed = int(rng.child(HASH).raw(1)[0])
    log.message("Alice", "Bob", [], content="hash seed", seed=hash_seed, output_length=m)
    # each side rebuilds the matrix from the public seed on its own
    session.final_key_alice = privacy_amplify(rec.corrected_alice, m, Rng(hash_seed))
    session.final_key_bob = privacy_amplify(rec.corrected_bob, m, Rng(hash_seed))
    log.note("amplify", output_length=m)
    return session


def bb84_run(config: Bb84Config) -> Bb84Session:
    """Prepare-and-measure BB84.

    Alice sends random bits in random Z/X bases, the channel applies the
    adversary, Bob measures in random bases, the two sift on announced bases,
    compare a random check subset, abort if the error rate is above threshold,
    and otherwise reconcile and privacy-amplify the unchecked remainder.
    """
    cfg = config
    n = cfg.num_qubits_sent
    rng = Rng(cfg.seed)
    log = Transcript()

    alice = rng.child(ALICE)
    alice_bits = alice.bits(n)
    alice_bases = alice.bits(n)
    amps = _prepare(alice_bits, alice_bases)
    log.prepare("bb84", [], count=n, party="Alice")

    amps, eve = _channel(amps, 0, cfg.adversary, rng.child(CHANNEL))
    log.note("channel", adversary=str(cfg.adversary))

    bob_bases = rng.child(BOB).bits(n)
    bob_bits, _ = _measure(amps, 0, _BASIS_STACK[bob_bases], rng.child(MEASURE).random(n))
    log.measure("random Z/X", [], [], count=n, party="Bob")

    return _finish(cfg, rng, log, alice_bits, alice_bases, bob_bases, bob_bits,
                   eve_bases=None if eve is None else eve.bases,
                   eve_bits=None if eve is None else eve.bits)


def bb84_entangled_run(config: Bb84Config) -> Bb84Session:
    """Entanglement-based variant with a singlet source.

    Qubit 0 of each pair goes to Alice, qubit 1 crosses the channel to Bob.
    Same-basis outcomes are anticorrelated, so Bob flips every bit before
    sifting. With ``config.chsh_pairs > 0`` the source also emits that many
    extra pairs for a CHSH test, stored as ``chsh_value``.
    """
    cfg = config
    n = cfg.num_qubits_sent
    rng = Rng(cfg.seed)
    log = Transcript()
    amps = _singlets(n)
    log.prepare("psi-", [], count=n, party="source")

    channel = rng.child(CHANNEL)
    amps, eve = _channel(amps, 1, cfg.adversary, channel)
    log.note("channel", adversary=str(cfg.adversary))

    alice = rng.child(ALICE)
    alice.bits(n)  # keep the stream layout of bb84_run: bits first, then bases
    alice_bases = alice.bits(n)
    bob_bases = rng.child(BOB).bits(n)
    meas = rng.child(MEASURE)
    alice_bits, amps = _measure(amps, 0, _BASIS_STACK[alice_bases], meas.random(n))
    bob_raw, _ = _measure(amps, 1, _BASIS_STACK[bob_bases], meas.random(n))
    log.measure("random Z/X", [], [], count=n, party="Alice")
    log.measure("random Z/X", [], [], count=n, party="Bob")
    bob_bits = bob_raw ^ 1
    log.note("bit flip", party="Bob")

    chsh = None
    if cfg.chsh_pairs:
        chsh = chsh_test(cfg.chsh_pairs, rng.child(CHSH), cfg.adversary).s_value
        log.note("chsh", pairs=cfg.chsh_pairs, value=chsh)

    return _finish(cfg, rng, log, alice_bits, alice_bases, bob_bases, bob_bits,
                   eve_bases=None if eve is None else eve.bases,
                   eve_bits=None if eve is None else eve.bits,
                   bob_raw_outcomes=bob_raw, chsh_value=chsh)


# -- CHSH -------------------------------------------------------------------------

ALICE_ANGLES = (0.0, np.pi / 2)
BOB_ANGLES = (np.pi / 4, 3 * np.pi / 4)


@dataclass(frozen=True)
class ChshResult:
    correlators: tuple[tuple[float, float], tuple[float, float]]
    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def s_value(self) -> float:
        """``|E(a,b) - E(a,b') + E(a',b) + E(a',b')|``; at most 2 classically."""
        e = self.correlators
        return float(abs(e[0][0] - e[0][1] + e[1][0] + e[1][1]))


def chsh_test(num_pairs: int, rng: Rng, adversary: AdversaryModel | None = None) -> ChshResult:
    """Estimate the CHSH score of the singlet source from ``num_pairs`` pairs.

    Each pair gets independent uniformly random settings; Alice measures along
    0 or pi/2 in the Z-X plane, Bob along pi/4 or 3 pi/4.
    """
    if num_pairs < 4:
        raise ValueError("need at least 4 pairs")
    adversary = adversary or AdversaryModel()
    amps = _singlets(num_pairs)
    amps, _ = _channel(amps, 1, adversary, rng.child(CHANNEL))
    x = rng.bits(num_pairs)
    y = rng.bits(num_pairs)
    a_bases = np.stack([axis_basis(t) for t in ALICE_ANGLES])[x]
    b_bases = np.stack([axis_basis(t) for t in BOB_ANGLES])[y]
    a_out, amps = _measure(amps, 0, a_bases, rng.random(num_pairs))
    b_out, _ = _measure(amps, 1, b_bases, rng.random(num_pairs))
    prod = 1.0 - 2.0 * (a_out ^ b_out)
    corr = [[0.0, 0.0], [0.0, 0.0]]
    counts = [[0, 0], [0, 0]]
    for i in range(2):
        for j in range(2):
            sel = (x == i) & (y == j)
            counts[i][j] = int(sel.sum())
            corr[i][j] = float(prod[sel].mean()) if counts[i][j] else 0.0
    return ChshResult(tuple(map(tuple, corr)), tuple(map(tuple, counts)))


# -- batch reporting ------------------------------------------------------------------

REPORT_FIELDS = (
    "seed", "verdict", "qber", "sift_fraction", "key_length_raw", "key_length_final",
    "keys_match", "adversary_agreement",
)


def sessions_to_csv(sessions: Iterable[Bb84Session]) -> str:
    """One row per session, for statistical post-processing elsewhere."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for s in sessions:
        r = s.report()
        r["seed"] = s.config.seed
        w.writerow(["" if r[k] is None else r[k] for k in REPORT_FIELDS])
    return buf.getvalue()


def session_report_json(session: Bb84Session) -> str:
    return json.dumps(session.report(), sort_keys=True)
