"""Dense state-vector simulator for small parametrized circuits.

Conventions
-----------
* Basis ordering is qubit-0-major: index = sum(bit_q * 2**(n-1-q)), so for two
  qubits |00>=0, |01>=1, |10>=2, |11>=3 with the left bit being q0.
* RY(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]
* RZ(t) = diag(exp(-i t/2), exp(i t/2))
* CRZ(t) applies RZ(t) to the target on the control=1 subspace only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class GateKind(str, enum.Enum):
    RY = "RY"
    RZ = "RZ"
    CRZ = "CRZ"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    angle: float
    target: int
    control: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "angle", float(self.angle))
        if self.target < 0:
            raise ValueError(f"negative target qubit {self.target}")
        if (self.kind is GateKind.CRZ) != (self.control is not None):
            raise ValueError("a control qubit is required for CRZ and only for CRZ")
        if self.control is not None:
            if self.control < 0:
                raise ValueError(f"negative control qubit {self.control}")
            if self.control == self.target:
                raise ValueError("control and target must differ")

    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)

    def inverse(self) -> "Gate":
        return Gate(self.kind, -self.angle, self.target, self.control)

    def matrix(self) -> np.ndarray:
        """2x2 matrix acting on the target (for CRZ: the control=1 block)."""
        return _single_qubit_matrix(self.kind, self.angle)


def RY(angle: float, target: int) -> Gate:
    return Gate(GateKind.RY, angle, target)


def RZ(angle: float, target: int) -> Gate:
    return Gate(GateKind.RZ, angle, target)


def CRZ(angle: float, control: int, target: int) -> Gate:
    return Gate(GateKind.CRZ, angle, target, control)


def _single_qubit_matrix(kind: GateKind, angle: float) -> np.ndarray:
    half = 0.5 * angle
    if kind is GateKind.RY:
        c, s = np.cos(half), np.sin(half)
        return np.array([[c, -s], [s, c]], dtype=complex)
    # RZ and the controlled block of CRZ
    return np.array([[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]], dtype=complex)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            _check_gate(g, self.num_qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.num_qubits, self.gates + other.gates)


def adjoint(circuit: Circuit) -> Circuit:
    """Reverse the gate order and negate every rotation angle."""
    return Circuit(circuit.num_qubits, tuple(g.inverse() for g in reversed(circuit.gates)))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count must be a power of two >= 2, got {size}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def ground_state(num_qubits: int) -> StateVector:
    if num_qubits < 1:
        raise ValueError(f"num_qubits must be >= 1, got {num_qubits}")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps)


def _check_gate(gate: Gate, num_qubits: int) -> None:
    for q in gate.qubits():
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")


def _apply_inplace(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    # psi has shape (2,)*n; axis q is qubit q
    u = gate.matrix()
    if gate.control is None:
        out = np.tensordot(u, psi, axes=([1], [gate.target]))
        return np.moveaxis(out, 0, gate.target)
    out = psi.copy()
    sel = [slice(None)] * n
    sel[gate.control] = 1
    block = psi[tuple(sel)]
    # the target axis shifts down by one if it sat after the removed control axis
    t = gate.target - (gate.target > gate.control)
    rotated = np.moveaxis(np.tensordot(u, block, axes=([1], [t])), 0, t)
    out[tuple(sel)] = rotated
    return out


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.num_qubits
    _check_gate(gate, n)
    psi = state.amplitudes.reshape((2,) * n)
    return StateVector(_apply_inplace(psi, gate, n).reshape(-1))


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    n = state.num_qubits
    if circuit.num_qubits != n:
        raise ValueError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {n}"
        )
    psi = state.amplitudes.reshape((2,) * n)
    for g in circuit.gates:
        psi = _apply_inplace(psi, g, n)
    return StateVector(psi.reshape(-1))


def outcome_probability(state: StateVector, basis_index: int) -> float:
    size = state.amplitudes.size
    if not 0 <= basis_index < size:
        raise ValueError(f"basis index {basis_index} out of range [0, {size})")
    return float(abs(state.amplitudes[basis_index]) ** 2)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a master seed and integer keys.

    The derivation depends only on its arguments, never on call order.
    """
    ss = np.random.SeedSequence([int(master_seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_outcomes(state: StateVector, shots: int, seed: int) -> np.ndarray:
    """Measure ``state`` ``shots`` times; returns counts per basis index."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return rng.multinomial(shots, probs)
