"""Dense state-vector reference simulator for small registers.

Deliberately independent of :mod:`stochdd.dd`: gates act on a ``(2,)*n``
tensor view of the amplitude array, and the gate matrices are written out
here again instead of being shared with the DD code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateOp
from .errors import InvalidArgumentError, ResourceLimitError, UnsupportedGateError
from .noise import noise_sites

MAX_DENSE_QUBITS = 20
DEFAULT_BRANCH_CAP = 10**7

_R2 = np.sqrt(0.5)
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _matrix(kind, params):
    if kind in _PAULI:
        return _PAULI[kind]
    if kind == "H":
        return np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex)
    if kind in ("S", "SDG", "T", "TDG"):
        angle = {"S": np.pi / 2, "SDG": -np.pi / 2, "T": np.pi / 4, "TDG": -np.pi / 4}[kind]
        return np.diag([1, np.exp(1j * angle)])
    if kind == "PHASE":
        return np.diag([1, np.exp(1j * params[0])])
    if kind in ("RX", "RY", "RZ"):
        # exp(-i t/2 P)
        t = params[0]
        return np.cos(t / 2) * _PAULI["I"] - 1j * np.sin(t / 2) * _PAULI[kind[1]]
    if kind == "U3":
        theta, phi, lam = params
        # RZ(phi) RY(theta) RZ(lam), rephased so the top-left entry is real
        rz = lambda a: np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])  # noqa: E731
        ry = np.cos(theta / 2) * _PAULI["I"] - 1j * np.sin(theta / 2) * _PAULI["Y"]
        return np.exp(0.5j * (phi + lam)) * (rz(phi) @ ry @ rz(lam))
    raise UnsupportedGateError(kind)


_BASE = {"CX": "X", "CZ": "Z", "CCX": "X"}


@dataclass
class DenseState:
    amplitudes: np.ndarray
    num_qubits: int

    @classmethod
    def zeros(cls, n: int) -> "DenseState":
        if n > MAX_DENSE_QUBITS:
            raise ResourceLimitError(f"dense oracle limited to {MAX_DENSE_QUBITS} qubits, asked for {n}")
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1
        return cls(amps, n)

    @classmethod
    def basis(cls, bits: str) -> "DenseState":
        state = cls.zeros(len(bits))
        state.amplitudes[0] = 0
        state.amplitudes[int(bits, 2)] = 1
        return state

    def copy(self):
        return DenseState(self.amplitudes.copy(), self.num_qubits)

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2


def apply_single(amps: np.ndarray, n: int, u: np.ndarray, target: int, controls=()) -> np.ndarray:
    """Apply 2x2 ``u`` (any matrix) on ``target`` where every control is 1."""
    psi = amps.reshape((2,) * n).copy()
    index = [slice(None)] * n
    for c in controls:
        index[c] = 1
    sub = psi[tuple(index)]
    # the target axis position shifts down by the number of controls before it
    axis = target - sum(1 for c in controls if c < target)
    sub = np.moveaxis(np.tensordot(u, sub, axes=([1], [axis])), 0, axis)
    psi[tuple(index)] = sub
    return psi.reshape(-1)


def dense_apply(gate: GateOp, state: DenseState) -> DenseState:
    n = state.num_qubits
    if n > MAX_DENSE_QUBITS:
        raise ResourceLimitError(f"dense oracle limited to {MAX_DENSE_QUBITS} qubits")
    if any(q >= n or q < 0 for q in gate.qubits):
        raise InvalidArgumentError(f"{gate} does not fit {n} qubits")
    kind = gate.kind
    if kind in ("MEASURE", "BARRIER"):
        return state
    if kind == "SWAP":
        a, b = gate.targets
        psi = state.amplitudes.reshape((2,) * n)
        if gate.controls:
            index = [slice(None)] * n
            for c in gate.controls:
                index[c] = 1
            out = psi.copy()
            sub = psi[tuple(index)]
            shift = lambda q: q - sum(1 for c in gate.controls if c < q)  # noqa: E731
            out[tuple(index)] = np.swapaxes(sub, shift(a), shift(b))
        else:
            out = np.swapaxes(psi, a, b)
        return DenseState(np.ascontiguousarray(out).reshape(-1), n)
    u = _matrix(_BASE.get(kind, kind), gate.params)
    return DenseState(apply_single(state.amplitudes, n, u, gate.targets[0], gate.controls), n)


def dense_run(circuit: Circuit, initial: DenseState | None = None) -> DenseState:
    """Noiseless final state of ``circuit`` from ``|0...0>`` (or ``initial``)."""
    state = DenseState.zeros(circuit.num_qubits) if initial is None else initial.copy()
    for op in circuit.ops:
        state = dense_apply(op, state)
    return state


def dense_unitary(circuit: Circuit) -> np.ndarray:
    """Full 2^n x 2^n matrix of ``circuit`` built column by column."""
    n = circuit.num_qubits
    cols = []
    for b in range(1 << n):
        amps = np.zeros(1 << n, dtype=complex)
        amps[b] = 1
        cols.append(dense_run(circuit, DenseState(amps, n)).amplitudes)
    return np.array(cols).T


def _noise_branches(amps, n, q, spec, channel):
    """(probability, amplitudes) branches of one channel on qubit ``q``."""
    if channel == "depol":
        p = spec.p_depol
        out = [(1 - p, amps)]
        for k in ("I", "X", "Y", "Z"):
            out.append((p / 4, apply_single(amps, n, _PAULI[k], q)))
        return out
    if channel == "flip":
        p = spec.p_flip
        return [(1 - p, amps), (p, apply_single(amps, n, _PAULI["Z"], q))]
    p = spec.p_damp
    decay = apply_single(amps, n, np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex), q)
    survive = apply_single(amps, n, np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex), q)
    s0 = float(np.vdot(decay, decay).real)
    out = []
    if s0 > 0:
        out.append((s0, decay / np.sqrt(s0)))
    if s0 < 1:
        out.append((1 - s0, survive / np.sqrt(1 - s0)))
    return out


def _channel_sequence(circuit, spec):
    return [noise_sites(spec, i, op, circuit.num_qubits) for i, op in enumerate(circuit.ops)]


def dense_channel_average(circuit: Circuit, spec, max_branches: int = DEFAULT_BRANCH_CAP) -> np.ndarray:
    """Exact outcome distribution of the noisy circuit by enumerating every error branch.

    Depolarizing contributes five branches (no event, then I/X/Y/Z at p/4),
    phase flip two, amplitude damping two with probabilities recomputed from
    the branch's current state. Zero-probability branches are pruned.
    """
    n = circuit.num_qubits
    if n > MAX_DENSE_QUBITS:
        raise ResourceLimitError(f"dense oracle limited to {MAX_DENSE_QUBITS} qubits")
    schedule = _channel_sequence(circuit, spec)
    dist = np.zeros(1 << n)
    visited = 0
    stack = [(0, 1.0, DenseState.zeros(n).amplitudes)]
    # each stack entry: next op index, branch weight, amplitudes before that op
    while stack:
        i, weight, amps = stack.pop()
        if i == len(circuit.ops):
            visited += 1
            if visited > max_branches:
                raise ResourceLimitError(f"more than {max_branches} noise branches")
            dist += weight * np.abs(amps) ** 2
            continue
        amps = dense_apply(circuit.ops[i], DenseState(amps, n)).amplitudes
        frontier = [(weight, amps)]
        for channel, q in schedule[i]:
            frontier = [
                (w * pb, b)
                for w, a in frontier
                for pb, b in _noise_branches(a, n, q, spec, channel)
                if pb > 0
            ]
            if len(frontier) > max_branches:
                raise ResourceLimitError(f"more than {max_branches} noise branches")
        stack.extend((i + 1, w, a) for w, a in frontier)
    return dist
