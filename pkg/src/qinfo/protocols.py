"""Entanglement-assisted protocols run on the statevector simulator.

Every run keeps a :class:`Transcript` of what was prepared, which gates were
applied, what was measured and which classical bits were sent, in execution
order.

Bell-basis measurements use the disentangling circuit (CNOT, then H on the
control, then a computational readout). The two readout bits identify the
Bell state as in ``BELL_FROM_READOUT``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .infotheory import entanglement_entropy
from .linalg import as_matrix, is_unitary
from .qstate import (
    CNOT,
    H,
    I2,
    X,
    X_BASIS,
    Y,
    Y_BASIS,
    Z,
    Z_BASIS,
    DensityOperator,
    MeasurementRecord,
    PureState,
    StateError,
    apply_gate,
    bell_state,
    fidelity,
    ket,
    measure_computational,
    probabilities,
    product_state,
    random_unitary,
    reduced_density,
    sample_counts,
)
from .rng import Rng

FIDELITY_TOL = 1e-9
CLONE_SHORTFALL = 0.01

BELL_FROM_READOUT = {(0, 0): "phi+", (0, 1): "psi+", (1, 0): "phi-", (1, 1): "psi-"}
READOUT_FROM_BELL = {v: k for k, v in BELL_FROM_READOUT.items()}

# Bob's qubit after Alice's Bell outcome, given a psi- resource:
#   phi+ -> -i sigma_y chi,  phi- -> sigma_x chi,  psi+ -> -sigma_z chi,  psi- -> -chi
# so these corrections return exactly chi, phases included.
TELEPORT_CORRECTIONS: dict[str, tuple[str, np.ndarray]] = {
    "phi+": ("i*sigma_y", 1j * Y),
    "phi-": ("sigma_x", X),
    "psi+": ("-sigma_z", -Z),
    "psi-": ("-1", -I2),
}

# Alice's encoding for superdense coding, keyed by the message bits.
SUPERDENSE_ENCODING: dict[tuple[int, int], tuple[str, np.ndarray]] = {
    (0, 0): ("1", I2),
    (0, 1): ("sigma_x", X),
    (1, 0): ("sigma_z", Z),
    (1, 1): ("sigma_x*sigma_z", X @ Z),
}


class ProtocolError(RuntimeError):
    """A protocol postcondition failed; the simulator itself is inconsistent."""


@dataclass(frozen=True)
class Event:
    step: int
    kind: str
    payload: dict

    def to_json(self) -> dict:
        return {"step": self.step, "kind": self.kind, "payload": self.payload}


@dataclass
class Transcript:
    """Append-only event log of one protocol run."""

    events: list[Event] = field(default_factory=list)

    def _add(self, kind: str, **payload) -> Event:
        ev = Event(len(self.events), kind, payload)
        self.events.append(ev)
        return ev

    def prepare(self, label: str, qubits: Sequence[int], **extra) -> Event:
        return self._add("prepare", label=label, qubits=list(qubits), **extra)

    def gate(self, name: str, targets: Sequence[int]) -> Event:
        return self._add("gate", name=name, targets=list(targets))

    def measure(self, basis: str, targets: Sequence[int], outcome: Sequence[int], **extra) -> Event:
        return self._add("measure", basis=basis, targets=list(targets), outcome=[int(b) for b in outcome], **extra)

    def message(self, sender: str, receiver: str, bits: Sequence[int], **extra) -> Event:
        return self._add("message", sender=sender, receiver=receiver, bits=[int(b) for b in bits], **extra)

    def note(self, kind: str, **payload) -> Event:
        return self._add(kind, **payload)

    def kinds(self) -> list[str]:
        return [e.kind for e in self.events]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in self.events)


class _Register:
    """A statevector plus the transcript that records what happens to it."""

    def __init__(self, state: PureState, transcript: Transcript):
        self.state = state
        self.log = transcript

    def gate(self, name: str, matrix, targets: Sequence[int]) -> None:
        self.state = apply_gate(self.state, matrix, targets)
        self.log.gate(name, targets)

    def bell_measure(self, a: int, b: int, rng: Rng) -> tuple[tuple[int, int], MeasurementRecord]:
        self.gate("CNOT", CNOT, [a, b])
        self.gate("H", H, [a])
        rec = measure_computational(self.state, [a, b], rng)
        self.state = rec.post_state
        self.log.measure("Z", [a, b], rec.bits, probability=rec.probability)
        return rec.bits, rec


def _extract(state: PureState, fixed: dict[int, int]) -> PureState:
    """Remaining qubits' state given that ``fixed`` qubits are in known basis states."""
    n = state.num_qubits
    idx = tuple(fixed.get(q, slice(None)) for q in range(n))
    return PureState.normalized(state.amplitudes.reshape((2,) * n)[idx].reshape(-1))


def _as_bits(message) -> tuple[int, int]:
    bits = tuple(int(c) for c in message) if isinstance(message, str) else tuple(int(b) for b in message)
    if len(bits) != 2 or set(bits) - {0, 1}:
        raise ValueError(f"message must be two bits, got {message!r}")
    return bits


# -- superdense coding --------------------------------------------------------

def superdense_encode_decode(message, rng: Rng) -> tuple[tuple[int, int], Transcript]:
    """Send two classical bits by transmitting one half of a shared phi+ pair.

    Bob prepares phi+ on qubits (0, 1) with H then CNOT and hands qubit 0 to
    Alice. She applies the Pauli for her message, returns the qubit, and Bob
    reads the pair out in the Bell basis.
    """
    bits = _as_bits(message)
    log = Transcript()
    reg = _Register(ket("00"), log)
    log.prepare("|00>", [0, 1], party="Bob")
    reg.gate("H", H, [0])
    reg.gate("CNOT", CNOT, [0, 1])
    log.note("transfer", qubits=[0], sender="Bob", receiver="Alice")
    name, op = SUPERDENSE_ENCODING[bits]
    reg.gate(name, op, [0])
    log.note("transfer", qubits=[0], sender="Alice", receiver="Bob")
    decoded, _ = reg.bell_measure(0, 1, rng)
    return decoded, log


# -- teleportation -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TeleportOutcome:
    bell_outcome: tuple[int, int]
    bell_state: str
    correction_applied: str
    bob_state: PureState
    fidelity_to_input: float
    transcript: Transcript


def _check_qubit(chi: PureState) -> None:
    if not isinstance(chi, PureState) or chi.num_qubits != 1:
        raise StateError("teleport needs a single-qubit PureState")


def teleport(chi: PureState, rng: Rng) -> TeleportOutcome:
    """Teleport ``chi`` from qubit 0 to qubit 2 over a psi- pair on qubits (1, 2).

    Alice Bell-measures qubits (0, 1), sends the two readout bits, and Bob
    applies the correction listed in ``TELEPORT_CORRECTIONS``.
    """
    _check_qubit(chi)
    log = Transcript()
    reg = _Register(product_state(chi, bell_state("psi-")), log)
    log.prepare("chi", [0], party="Alice")
    log.prepare("psi-", [1, 2], parties=["Alice", "Bob"])
    bits, _ = reg.bell_measure(0, 1, rng)
    log.message("Alice", "Bob", bits)
    if len(log.events[-1].payload["bits"]) != 2:
        raise ProtocolError("teleportation message must carry exactly two bits")
    label = BELL_FROM_READOUT[bits]
    bob = _extract(reg.state, {0: bits[0], 1: bits[1]})
    name, op = TELEPORT_CORRECTIONS[label]
    bob = apply_gate(bob, op, [0])
    log.gate(name, [2])
    f = fidelity(bob, chi)
    if f < 1.0 - FIDELITY_TOL:
        raise ProtocolError(f"teleportation fidelity {f} below 1 - {FIDELITY_TOL}")
    return TeleportOutcome(bits, label, name, bob, f, log)


@dataclass(frozen=True, eq=False)
class TeleportBranch:
    bell_state: str
    probability: float
    bob_uncorrected: PureState


def teleport_branches(chi: PureState) -> list[TeleportBranch]:
    """All four measurement branches with their Born probabilities (no sampling)."""
    _check_qubit(chi)
    state = product_state(chi, bell_state("psi-"))
    state = apply_gate(apply_gate(state, CNOT, [0, 1]), H, [0])
    p = probabilities(state, [0, 1])
    out = []
    for k in range(4):
        bits = (k >> 1, k & 1)
        out.append(TeleportBranch(BELL_FROM_READOUT[bits], float(p[k]), _extract(state, {0: bits[0], 1: bits[1]})))
    return out


def bob_state_before_message(chi: PureState) -> DensityOperator:
    """Bob's density operator after Alice measures but before he hears her result."""
    m = sum(b.probability * np.outer(b.bob_uncorrected.amplitudes, b.bob_uncorrected.amplitudes.conj())
            for b in teleport_branches(chi))
    return DensityOperator(m)


def alice_state_after_measurement(chi: PureState) -> DensityOperator:
    """Alice's two-qubit state once measured, averaged over outcomes, in the Bell basis."""
    m = np.zeros((4, 4), dtype=np.complex128)
    for b in teleport_branches(chi):
        v = bell_state(b.bell_state).amplitudes
        m += b.probability * np.outer(v, v.conj())
    return DensityOperator(m)


# -- entanglement swapping -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SwapOutcome:
    final_state: PureState
    alice_outcome: tuple[int, int]
    bc_bell_state: str
    uncorrected_state: PureState
    transcript: Transcript

    @property
    def fidelity_to_singlet(self) -> float:
        return fidelity(self.final_state, bell_state("psi-"))


def entanglement_swap(rng: Rng) -> SwapOutcome:
    """Entangle B and C, which never interacted, by Bell-measuring A1 and A2.

    Qubit order is (A1, B, A2, C) with psi- on (A1, B) and on (A2, C). After
    the measurement (B, C) is the Bell state matching Alice's readout; the
    teleportation corrections applied to C turn it into psi-.
    """
    log = Transcript()
    reg = _Register(product_state(bell_state("psi-"), bell_state("psi-")), log)
    log.prepare("psi-", [0, 1], parties=["Alice", "Bob"])
    log.prepare("psi-", [2, 3], parties=["Alice", "Charles"])
    bits, _ = reg.bell_measure(0, 2, rng)
    log.message("Alice", "Charles", bits)
    label = BELL_FROM_READOUT[bits]
    bc = _extract(reg.state, {0: bits[0], 2: bits[1]})
    name, op = TELEPORT_CORRECTIONS[label]
    final = apply_gate(bc, op, [1])
    log.gate(name, [3])
    f = fidelity(final, bell_state("psi-"))
    if f < 1.0 - FIDELITY_TOL:
        raise ProtocolError(f"swapped pair fidelity {f} below 1 - {FIDELITY_TOL}")
    return SwapOutcome(final, bits, label, bc, log)


def swap_initial_entropy() -> float:
    """Entanglement across (A1, B) | (A2, C) before the Bell measurement."""
    return entanglement_entropy(product_state(bell_state("psi-"), bell_state("psi-")), [0, 1])


# -- tomography -------------------------------------------------------------------

TOMOGRAPHY_BASES = {"x": X_BASIS, "y": Y_BASIS, "z": Z_BASIS}


@dataclass(frozen=True)
class TomographyResult:
    bloch: tuple[float, float, float]
    counts: dict[str, tuple[int, int]]
    shots_per_basis: int

    @property
    def outside_bloch_ball(self) -> bool:
        """Plug-in estimates are reported raw and can land outside the ball."""
        return float(np.linalg.norm(self.bloch)) > 1.0


def required_observables(dimension: int) -> int:
    """Independent expectation values fixing a ``dimension``-level state."""
    return dimension * dimension - 1


def bloch_vector(state) -> np.ndarray:
    """Exact ``(<X>, <Y>, <Z>)`` of a single-qubit pure or mixed state."""
    m = state.matrix if isinstance(state, DensityOperator) else np.outer(state.amplitudes, state.amplitudes.conj())
    if m.shape != (2, 2):
        raise StateError("bloch_vector needs a single qubit")
    return np.real([np.trace(m @ P) for P in (X, Y, Z)])


def tomography_single_qubit(unknown: PureState, shots_per_basis: int, rng: Rng) -> TomographyResult:
    """Estimate the Bloch vector from outcome frequencies in the X, Y and Z bases."""
    _check_qubit(unknown)
    if shots_per_basis < 1:
        raise ValueError("shots_per_basis must be at least 1")
    counts = {}
    est = []
    for axis in "xyz":
        c = sample_counts(unknown, [0], shots_per_basis, rng, TOMOGRAPHY_BASES[axis])
        counts[axis] = (int(c[0]), int(c[1]))
        est.append((c[0] - c[1]) / shots_per_basis)
    return TomographyResult(tuple(float(e) for e in est), counts, shots_per_basis)


# -- cloning -------------------------------------------------------------------

@dataclass(frozen=True)
class CloneReport:
    fidelities: tuple[float, ...]

    @property
    def max_shortfall(self) -> float:
        return 1.0 - min(self.fidelities)

    @property
    def clones_all(self) -> bool:
        return self.max_shortfall <= CLONE_SHORTFALL


def attempt_general_clone(candidate_cloner, test_states: Sequence[PureState]) -> CloneReport:
    """Score a two-qubit unitary as a would-be cloner ``U|s>|0> -> |s>|s>``."""
    u = as_matrix(candidate_cloner, name="candidate_cloner")
    if u.shape != (4, 4) or not is_unitary(u):
        raise StateError("candidate cloner must be a 4x4 unitary")
    blank = ket("0")
    fids = []
    for s in test_states:
        _check_qubit(s)
        out = apply_gate(product_state(s, blank), u, [0, 1])
        fids.append(fidelity(out, product_state(s, s)))
    return CloneReport(tuple(fids))


def random_cloner_search(trials: int, rng: Rng, test_states: Sequence[PureState] | None = None) -> list[CloneReport]:
    """Score ``trials`` Haar-random unitaries against ``{|0>, |1>, |+>}`` by default."""
    states = list(test_states) if test_states is not None else [ket("0"), ket("1"), ket("+")]
    return [attempt_general_clone(random_unitary(4, rng), states) for _ in range(trials)]
