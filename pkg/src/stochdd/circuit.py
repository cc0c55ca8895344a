"""Circuit intermediate representation and built-in benchmark generators.

Qubit ``i`` of a circuit is ``q_i`` in the decision diagram, with q0 the most
significant bit of the basis index. OpenQASM ``q[0]`` of the first register
therefore prints as the leftmost character of every bitstring we report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import gates
from .errors import CircuitValidationError, InvalidArgumentError


_CONTROLLED_ALIAS = {(base, k): kind for kind, (base, k) in gates.CONTROLLED_KINDS.items()}


@dataclass(frozen=True)
class GateOp:
    kind: str
    params: tuple[float, ...] = ()
    targets: tuple[int, ...] = ()
    controls: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", str(self.kind).upper())
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        # one spelling per gate: X with one control is CX, and so on
        alias = _CONTROLLED_ALIAS.get((self.kind, len(self.controls)))
        if alias:
            object.__setattr__(self, "kind", alias)

    @property
    def qubits(self) -> tuple[int, ...]:
        """Targets followed by controls."""
        return self.targets + self.controls

    @property
    def is_unitary(self) -> bool:
        return self.kind not in gates.NON_UNITARY_KINDS

    def __str__(self):
        p = f"({', '.join(f'{x:.6g}' for x in self.params)})" if self.params else ""
        c = f" ctrl={list(self.controls)}" if self.controls else ""
        return f"{self.kind}{p} {list(self.targets)}{c}"


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    name: str = "circuit"
    clbits: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def gate_ops(self) -> tuple[GateOp, ...]:
        return tuple(op for op in self.ops if op.is_unitary)

    def check(self) -> "Circuit":
        """Raise :class:`CircuitValidationError` unless :func:`validate` is clean."""
        problems = validate(self)
        if problems:
            raise CircuitValidationError(problems)
        return self


def validate(circuit: Circuit) -> list[str]:
    """Every rule violation in ``circuit``; an empty list means it is valid."""
    out = []
    n = circuit.num_qubits
    if n < 1:
        out.append(f"circuit needs at least one qubit, has {n}")
    seen_measure = False
    for i, op in enumerate(circuit.ops):
        where = f"op {i} ({op.kind})"
        if op.kind not in gates.ALL_KINDS:
            out.append(f"{where}: unknown gate kind")
            continue
        arity = gates.param_arity(op.kind)
        if len(op.params) != arity:
            out.append(f"{where}: expects {arity} parameter(s), got {len(op.params)}")
        if any(not math.isfinite(p) for p in op.params):
            out.append(f"{where}: non-finite parameter")
        bad = [q for q in op.qubits if q < 0 or q >= n]
        if bad:
            out.append(f"{where}: qubit index {bad} out of range for {n} qubits")
        if len(set(op.qubits)) != len(op.qubits):
            out.append(f"{where}: overlapping qubits {list(op.qubits)}")
        if op.kind in gates.CONTROLLED_KINDS:
            need = gates.CONTROLLED_KINDS[op.kind][1]
            if len(op.controls) != need:
                out.append(f"{where}: needs {need} control(s), got {len(op.controls)}")
        if op.kind == "SWAP" and len(op.targets) != 2:
            out.append(f"{where}: needs two targets")
        elif op.kind in gates.NON_UNITARY_KINDS:
            if not op.targets:
                out.append(f"{where}: needs at least one qubit")
            if op.controls:
                out.append(f"{where}: cannot be controlled")
        elif op.kind != "SWAP" and len(op.targets) != 1:
            out.append(f"{where}: needs exactly one target")
        if op.kind == "MEASURE":
            seen_measure = True
        elif seen_measure and op.kind != "BARRIER":
            out.append(f"{where}: gate after measurement (mid-circuit measurement is not supported)")
    return out


def generate_ghz(n: int) -> Circuit:
    """H on q0 then a CX ladder q0->q1->...->q_{n-1}."""
    if n < 1:
        raise InvalidArgumentError("GHZ needs n >= 1")
    ops = [GateOp("H", targets=(0,))]
    ops += [GateOp("CX", targets=(k + 1,), controls=(k,)) for k in range(n - 1)]
    return Circuit(n, ops, name=f"ghz_{n}")


def generate_qft(n: int) -> Circuit:
    """Textbook QFT: H and controlled phases per qubit, then a swap reversal.

    Controlled phases stay single 2-qubit diagonal ops so noise attaches to
    logical gates rather than to a hardware decomposition.
    """
    if n < 1:
        raise InvalidArgumentError("QFT needs n >= 1")
    ops = []
    for k in range(n):
        ops.append(GateOp("H", targets=(k,)))
        for j in range(k + 1, n):
            ops.append(GateOp("PHASE", (math.pi / 2 ** (j - k),), targets=(k,), controls=(j,)))
    for i in range(n // 2):
        ops.append(GateOp("SWAP", targets=(i, n - 1 - i)))
    return Circuit(n, ops, name=f"qft_{n}")


BUILTINS = {"ghz": generate_ghz, "entanglement": generate_ghz, "qft": generate_qft}


_QASM_NAMES = {
    "I": "id", "X": "x", "Y": "y", "Z": "z", "H": "h", "S": "s", "SDG": "sdg",
    "T": "t", "TDG": "tdg", "RX": "rx", "RY": "ry", "RZ": "rz", "PHASE": "u1", "U3": "u3",
}
_QASM_CONTROLLED = {
    "X": "cx", "Y": "cy", "Z": "cz", "H": "ch", "RX": "crx", "RY": "cry",
    "RZ": "crz", "PHASE": "cu1", "U3": "cu3",
}


def to_qasm(circuit: Circuit) -> str:
    """Emit OpenQASM 2.0 text (debug facility; parses back to the same ops)."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    nmeas = sum(len(op.targets) for op in circuit.ops if op.kind == "MEASURE")
    nclbits = max(circuit.clbits, nmeas)
    if nclbits:
        lines.append(f"creg c[{nclbits}];")
    cbit = 0
    for op in circuit.ops:
        args = ",".join(f"q[{q}]" for q in op.controls + op.targets)
        params = "(" + ",".join(repr(p) for p in op.params) + ")" if op.params else ""
        base = gates.base_kind(op.kind)
        if op.kind == "MEASURE":
            for q in op.targets:
                lines.append(f"measure q[{q}] -> c[{cbit}];")
                cbit += 1
            continue
        if op.kind == "BARRIER":
            lines.append(f"barrier {args};")
            continue
        if op.kind == "SWAP":
            name = {0: "swap", 1: "cswap"}.get(len(op.controls))
        elif not op.controls:
            name = _QASM_NAMES[op.kind]
        elif len(op.controls) == 1:
            name = _QASM_CONTROLLED.get(base)
        elif len(op.controls) == 2 and base == "X":
            name = "ccx"
        else:
            name = None
        if name is None:
            raise InvalidArgumentError(f"{op} has no OpenQASM 2.0 spelling")
        lines.append(f"{name}{params} {args};")
    return "\n".join(lines) + "\n"
