"""Gate-kind table: names, parameter arity and the 2x2 matrices they act with.

Controlled kinds (CX, CZ, CCX) are stored as their single-qubit base kind
plus a fixed number of controls. Any single-qubit kind may additionally carry
extra controls (``ch``, ``crz``, ``cu1`` ... in OpenQASM).
"""

import cmath
import math

SINGLE_QUBIT_KINDS = frozenset(
    ["I", "X", "Y", "Z", "H", "S", "SDG", "T", "TDG", "RX", "RY", "RZ", "PHASE", "U3"]
)
CONTROLLED_KINDS = {"CX": ("X", 1), "CZ": ("Z", 1), "CCX": ("X", 2)}
ALL_KINDS = SINGLE_QUBIT_KINDS | frozenset(CONTROLLED_KINDS) | {"SWAP", "MEASURE", "BARRIER"}
NON_UNITARY_KINDS = frozenset(["MEASURE", "BARRIER"])

PARAM_ARITY = {"RX": 1, "RY": 1, "RZ": 1, "PHASE": 1, "U3": 3}

_S2 = 1 / math.sqrt(2)

_FIXED = {
    "I": ((1, 0), (0, 1)),
    "X": ((0, 1), (1, 0)),
    "Y": ((0, -1j), (1j, 0)),
    "Z": ((1, 0), (0, -1)),
    "H": ((_S2, _S2), (_S2, -_S2)),
    "S": ((1, 0), (0, 1j)),
    "SDG": ((1, 0), (0, -1j)),
    "T": ((1, 0), (0, cmath.exp(1j * math.pi / 4))),
    "TDG": ((1, 0), (0, cmath.exp(-1j * math.pi / 4))),
}


def param_arity(kind):
    return PARAM_ARITY.get(kind, 0)


def base_kind(kind):
    """Single-qubit kind a gate applies to its target, ignoring controls."""
    if kind in CONTROLLED_KINDS:
        return CONTROLLED_KINDS[kind][0]
    return kind


def unitary(kind, params=()):
    """Return the 2x2 matrix of a single-qubit kind as nested tuples of complex."""
    if kind in CONTROLLED_KINDS:
        kind = CONTROLLED_KINDS[kind][0]
    if kind in _FIXED:
        m = _FIXED[kind]
    elif kind == "RX":
        (t,) = params
        c, s = math.cos(t / 2), math.sin(t / 2)
        m = ((c, -1j * s), (-1j * s, c))
    elif kind == "RY":
        (t,) = params
        c, s = math.cos(t / 2), math.sin(t / 2)
        m = ((c, -s), (s, c))
    elif kind == "RZ":
        (t,) = params
        m = ((cmath.exp(-0.5j * t), 0), (0, cmath.exp(0.5j * t)))
    elif kind == "PHASE":
        (lam,) = params
        m = ((1, 0), (0, cmath.exp(1j * lam)))
    elif kind == "U3":
        theta, phi, lam = params
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        m = (
            (c, -cmath.exp(1j * lam) * s),
            (cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c),
        )
    else:
        raise KeyError(kind)
    return tuple(tuple(complex(x) for x in row) for row in m)
