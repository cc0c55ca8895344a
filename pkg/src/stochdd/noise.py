"""Stochastic error channels applied to one trajectory at a time.

Each channel takes the current state and a random stream and returns the
state of one sampled branch. Draw order is fixed so a seeded stream replays
the same trajectory:

* depolarizing: one uniform for the error event, and only if it fires a
  second uniform choosing I, X, Y or Z;
* amplitude damping: one uniform choosing the decay or survivor branch;
* phase flip: one uniform.

A channel with probability 0 consumes no draws. Passing a list as ``trace``
records every fired event as ``(channel, qubit, detail)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import dd
from .circuit import GateOp
from .errors import InvalidArgumentError, NumericDegeneracyError

PAULIS = ("I", "X", "Y", "Z")
POLICIES = ("operands-only", "all-qubits-per-step")

# Error rates used for every benchmark in the reference evaluation.
DEFAULT_P_DEPOL = 0.001
DEFAULT_P_DAMP = 0.002
DEFAULT_P_FLIP = 0.001

_CLAMP_TOL = 1e-9


def _check_probability(name, p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class NoiseSpec:
    """Channel probabilities and where they are inserted.

    ``op_filter`` / ``qubit_filter`` optionally restrict insertion to the
    listed op indices / qubits; ``None`` means everywhere. They exist to
    build targeted fixtures (e.g. noise on one qubit after one gate).
    """

    p_depol: float = DEFAULT_P_DEPOL
    p_damp: float = DEFAULT_P_DAMP
    p_flip: float = DEFAULT_P_FLIP
    policy: str = "operands-only"
    rng_seed: int = 0
    op_filter: frozenset[int] | None = None
    qubit_filter: frozenset[int] | None = None

    def __post_init__(self):
        for name in ("p_depol", "p_damp", "p_flip"):
            object.__setattr__(self, name, _check_probability(name, getattr(self, name)))
        if self.policy not in POLICIES:
            raise InvalidArgumentError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.op_filter is not None:
            object.__setattr__(self, "op_filter", frozenset(int(i) for i in self.op_filter))
        if self.qubit_filter is not None:
            object.__setattr__(self, "qubit_filter", frozenset(int(q) for q in self.qubit_filter))

    @classmethod
    def noiseless(cls, **kw):
        return cls(p_depol=0.0, p_damp=0.0, p_flip=0.0, **kw)

    @property
    def is_noiseless(self):
        return self.p_depol == 0 and self.p_damp == 0 and self.p_flip == 0

    def as_dict(self):
        return {
            "p_depol": self.p_depol,
            "p_damp": self.p_damp,
            "p_flip": self.p_flip,
            "policy": self.policy,
        }

    def sites(self, op_index: int, gate: GateOp, num_qubits: int):
        """``(depolarized qubits, decohered qubits)`` after op ``op_index``."""
        if not gate.is_unitary or (self.op_filter is not None and op_index not in self.op_filter):
            return (), ()
        operands = sorted(gate.qubits)
        decohered = operands if self.policy == "operands-only" else range(num_qubits)
        if self.qubit_filter is not None:
            operands = [q for q in operands if q in self.qubit_filter]
            decohered = [q for q in decohered if q in self.qubit_filter]
        return tuple(operands), tuple(decohered)


@dataclass(frozen=True)
class KrausPair:
    """Amplitude-damping factors embedded at one qubit.

    ``a0`` is the decay factor [[0, sqrt(p)], [0, 0]] and ``a1`` the survivor
    factor [[1, 0], [0, sqrt(1-p)]].
    """

    a0: dd.MatrixDD
    a1: dd.MatrixDD
    p: float
    qubit: int


def damping_kraus(p: float, qubit: int, n: int, arena: dd.Arena) -> KrausPair:
    p = _check_probability("p", p)
    factors = []
    for name, u in (("A0", ((0, math.sqrt(p)), (0, 0))), ("A1", ((1, 0), (0, math.sqrt(1 - p))))):
        key = (name, (p,), (qubit,), (), n)
        op = arena._gates.get(key)
        if op is None:
            op = arena._gates[key] = dd.embed_single(u, qubit, n, arena)
        factors.append(op)
    return KrausPair(factors[0], factors[1], p, qubit)


def _check_qubit(state, qubit):
    if not 0 <= qubit < state.num_qubits:
        raise InvalidArgumentError(f"qubit {qubit} out of range for {state.num_qubits} qubits")


def _pauli(state, kind, qubit):
    return dd.gate_matrix(kind, (), (qubit,), (), state.num_qubits, state.arena)


def apply_depolarizing(state: dd.StateDD, qubit: int, p: float, rng, trace=None) -> dd.StateDD:
    """With probability ``p`` apply a uniformly drawn I, X, Y or Z to ``qubit``."""
    _check_qubit(state, qubit)
    p = _check_probability("p", p)
    if p == 0.0 or rng.random() >= p:
        return state
    kind = PAULIS[min(int(rng.random() * 4), 3)]
    if trace is not None:
        trace.append(("depol", qubit, kind))
    if kind == "I":
        return state
    return dd.apply_matrix(_pauli(state, kind, qubit), state)


def apply_phase_flip(state: dd.StateDD, qubit: int, p: float, rng, trace=None) -> dd.StateDD:
    """With probability ``p`` apply Z to ``qubit``."""
    _check_qubit(state, qubit)
    p = _check_probability("p", p)
    if p == 0.0 or rng.random() >= p:
        return state
    if trace is not None:
        trace.append(("flip", qubit, "Z"))
    return dd.apply_matrix(_pauli(state, "Z", qubit), state)


def decay_probability(state: dd.StateDD, qubit: int, p: float) -> float:
    """Squared norm of the decay branch, ``||A0 psi||^2 = p * P(qubit = 1)``."""
    s0 = p * dd.prob_one(state, qubit)
    if not -_CLAMP_TOL <= s0 <= 1 + _CLAMP_TOL:
        raise NumericDegeneracyError(f"damping branch probability {s0!r} outside [0, 1]")
    return min(max(s0, 0.0), 1.0)


def apply_amplitude_damping(state: dd.StateDD, qubit: int, p: float, rng, trace=None) -> dd.StateDD:
    """Pick the decay branch with its state-dependent probability, else the survivor branch.

    The chosen branch is renormalised. A qubit with no |1> component is left
    untouched because both factors act trivially on it.
    """
    _check_qubit(state, qubit)
    p = _check_probability("p", p)
    if p == 0.0:
        return state
    s0 = decay_probability(state, qubit, p)
    u = rng.random()
    if s0 == 0.0:
        return state
    kraus = damping_kraus(p, qubit, state.num_qubits, state.arena)
    if u < s0:
        if trace is not None:
            trace.append(("damp", qubit, "decay"))
        return dd.scale(dd.apply_matrix(kraus.a0, state), 1 / math.sqrt(s0))
    if s0 >= 1.0:
        raise NumericDegeneracyError("survivor branch drawn with zero probability")
    return dd.scale(dd.apply_matrix(kraus.a1, state), 1 / math.sqrt(1 - s0))


CHANNELS = {
    "depol": (apply_depolarizing, "p_depol"),
    "damp": (apply_amplitude_damping, "p_damp"),
    "flip": (apply_phase_flip, "p_flip"),
}


def noise_sites(spec: NoiseSpec, op_index: int, gate: GateOp, num_qubits: int) -> list[tuple[str, int]]:
    """Ordered ``(channel, qubit)`` pairs that fire after ``gate``.

    Each operand goes through depolarize, damp, flip before the next operand;
    under ``all-qubits-per-step`` idle qubits then get damp and flip.
    Channels with probability 0 are left out.
    """
    depol_q, decohere_q = spec.sites(op_index, gate, num_qubits)
    out = []
    for q in depol_q:
        if spec.p_depol:
            out.append(("depol", q))
        if q in decohere_q:
            if spec.p_damp:
                out.append(("damp", q))
            if spec.p_flip:
                out.append(("flip", q))
    for q in decohere_q:
        if q in depol_q:
            continue
        if spec.p_damp:
            out.append(("damp", q))
        if spec.p_flip:
            out.append(("flip", q))
    return out


def apply_site(state: dd.StateDD, channel: str, qubit: int, spec: NoiseSpec, rng, trace=None) -> dd.StateDD:
    fn, attr = CHANNELS[channel]
    return fn(state, qubit, getattr(spec, attr), rng, trace)


def insert_noise(
    state: dd.StateDD, gate: GateOp, spec: NoiseSpec, rng, trace=None, op_index: int = 0
) -> dd.StateDD:
    """Run the channels that follow ``gate`` in :func:`noise_sites` order."""
    for channel, q in noise_sites(spec, op_index, gate, state.num_qubits):
        state = apply_site(state, channel, q, spec, rng, trace)
    return state
