"""Decision diagrams for state vectors and operator matrices.

A vector of 2^n amplitudes is split recursively on the most significant
qubit: q0 labels the root level, so basis index ``b`` has q0 as its highest
bit. Matrices are split into four quadrants the same way. Common factors
live on edge weights; an amplitude (or matrix entry) is the product of the
weights along its path.

Every node is normalised by dividing its outgoing weights by the weight of
largest magnitude (ties go to the lowest successor index), so that weight is
exactly 1 and all others have magnitude <= 1. Nodes are hash-consed in a
unique table and weights are interned in a value table with absolute
per-component tolerance ``TOL``; together these make the representation
canonical.

All tables live in an :class:`Arena`. An arena must only be touched by one
thread of execution at a time. Diagrams are never mixed across arenas except
by the read-only traversals (:func:`inner_product`, :func:`amplitude`,
:func:`norm_squared`, :func:`to_vector`).

Edges are plain ``(node, weight)`` tuples; the all-zero sub-vector is the
``ZERO`` edge pointing at the terminal with weight 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gates
from .errors import InvalidArgumentError, NumericDegeneracyError, UnsupportedGateError

TOL = 1e-13
_INV_TOL = 1.0 / TOL


class Node:
    """Non-terminal DD node; ``edges`` has 2 entries for vectors, 4 for matrices."""

    __slots__ = ("level", "edges", "ident")

    def __init__(self, level, edges, ident=False):
        self.level = level
        self.edges = edges
        self.ident = ident

    def __repr__(self):
        kind = "M" if len(self.edges) == 4 else "V"
        return f"<{kind}Node q{self.level} @{id(self):x}>"


TERMINAL = Node(-1, (), ident=True)
ZERO = (TERMINAL, 0j)
ONE = (TERMINAL, 1 + 0j)

Edge = tuple  # (Node, complex)


class Arena:
    """Unique table, value table and compute tables for one thread of work.

    ``use_compute_table=False`` disables every memo cache, which is only
    useful for checking that memoisation never changes a result.
    """

    def __init__(self, use_compute_table: bool = True):
        self.use_compute_table = use_compute_table
        self._values: dict[float, float] = {}
        self._buckets: dict[int, float] = {}
        self._unique: dict[tuple, Node] = {}
        self._identity: dict[tuple[int, int], Edge] = {}
        self._gates: dict[tuple, MatrixDD] = {}
        self._clear_compute()
        for x in (0.0, 1.0, 0.5, 1 / math.sqrt(2)):
            self._intern(x)
            self._intern(-x)

    # -- tables -----------------------------------------------------------

    def _clear_compute(self):
        self._mv_cache = {}
        self._mm_cache = {}
        self._add_cache = {}
        self._ip_cache = {}
        self._norm_cache = {}
        self._p1_cache = {}

    def clear_compute_tables(self):
        self._clear_compute()

    @property
    def num_nodes(self):
        return len(self._unique)

    def snapshot(self):
        """Capture the table state so later work can be rolled back with :meth:`restore`."""
        return (
            dict(self._values),
            dict(self._buckets),
            dict(self._unique),
            dict(self._identity),
            dict(self._gates),
        )

    def restore(self, snap):
        values, buckets, unique, identity, gate_cache = snap
        self._values = dict(values)
        self._buckets = dict(buckets)
        self._unique = dict(unique)
        self._identity = dict(identity)
        self._gates = dict(gate_cache)
        self._clear_compute()

    def collect(self, roots: Sequence[Edge]):
        """Drop unique-table entries not reachable from ``roots`` or cached gates."""
        live = set()
        stack = [e[0] for e in roots]
        stack.extend(g.root[0] for g in self._gates.values())
        stack.extend(e[0] for e in self._identity.values())
        while stack:
            node = stack.pop()
            if node is TERMINAL or id(node) in live:
                continue
            live.add(id(node))
            stack.extend(e[0] for e in node.edges)
        self._unique = {k: v for k, v in self._unique.items() if id(v) in live}
        self._clear_compute()

    def _intern(self, x: float) -> float:
        if -TOL < x < TOL:
            self._values[x] = 0.0
            return 0.0
        k = math.floor(x * _INV_TOL)
        buckets = self._buckets
        r = buckets.get(k)
        if r is None:
            for j in (k - 1, k + 1):
                c = buckets.get(j)
                if c is not None and abs(c - x) <= TOL:
                    r = c
                    break
            else:
                buckets[k] = r = x
        self._values[x] = r
        return r

    def canon(self, z: complex) -> complex:
        """Intern ``z``: values within ``TOL`` per component share one representative."""
        values = self._values
        re = z.real
        im = z.imag
        r = values.get(re)
        if r is None:
            r = self._intern(re)
        i = values.get(im)
        if i is None:
            i = self._intern(im)
        return complex(r, i)

    # -- node construction -------------------------------------------------

    def make_vnode(self, level: int, e0: Edge, e1: Edge) -> Edge:
        n0, w0 = e0
        n1, w1 = e1
        a0 = abs(w0)
        a1 = abs(w1)
        if a0 < TOL:
            if a1 < TOL:
                return ZERO
            n0 = TERMINAL
            top = self.canon(w1)
            w0 = 0j
            w1 = 1 + 0j
        elif a1 < TOL:
            n1 = TERMINAL
            top = self.canon(w0)
            w0 = 1 + 0j
            w1 = 0j
        elif a0 + TOL >= a1:
            top = self.canon(w0)
            w1 = self.canon(w1 / w0)
            w0 = 1 + 0j
        else:
            top = self.canon(w1)
            w0 = self.canon(w0 / w1)
            w1 = 1 + 0j
        key = (level, n0, w0, n1, w1)
        node = self._unique.get(key)
        if node is None:
            node = Node(level, ((n0, w0), (n1, w1)))
            self._unique[key] = node
        return (node, top)

    def make_mnode(self, level: int, edges: Sequence[Edge]) -> Edge:
        mags = [abs(w) for _, w in edges]
        mmax = max(mags)
        if mmax < TOL:
            return ZERO
        best = 0
        while mags[best] + TOL < mmax:
            best += 1
        div = edges[best][1]
        top = self.canon(div)
        out = []
        for i, (n, w) in enumerate(edges):
            if i == best:
                out.append((n, 1 + 0j))
            elif mags[i] < TOL:
                out.append(ZERO)
            else:
                out.append((n, self.canon(w / div)))
        out = tuple(out)
        key = (level,) + out
        node = self._unique.get(key)
        if node is None:
            e0, e1, e2, e3 = out
            ident = (
                e1[1] == 0
                and e2[1] == 0
                and e0[1] == 1
                and e3[1] == 1
                and e0[0] is e3[0]
                and (e0[0] is TERMINAL or e0[0].ident)
            )
            node = Node(level, out, ident)
            self._unique[key] = node
        return (node, top)

    def identity(self, level: int, n: int) -> Edge:
        """Identity operator on qubits ``level..n-1``."""
        key = (level, n)
        e = self._identity.get(key)
        if e is None:
            if level >= n:
                e = ONE
            else:
                below = self.identity(level + 1, n)
                e = self.make_mnode(level, (below, ZERO, ZERO, below))
            self._identity[key] = e
        return e

    # -- arithmetic --------------------------------------------------------

    def scale_edge(self, e: Edge, c: complex) -> Edge:
        w = e[1] * c
        if abs(w) < TOL:
            return ZERO
        return (e[0], self.canon(w))

    def add(self, a: Edge, b: Edge) -> Edge:
        an, aw = a
        bn, bw = b
        if aw == 0:
            return b
        if bw == 0:
            return a
        if an is bn:
            w = aw + bw
            if abs(w) < TOL:
                return ZERO
            return (an, self.canon(w))
        ratio = self.canon(bw / aw)
        key = (an, bn, ratio)
        cache = self._add_cache
        r = cache.get(key) if self.use_compute_table else None
        if r is None:
            if len(an.edges) == 2:
                (c0, x0), (c1, x1) = an.edges
                (d0, y0), (d1, y1) = bn.edges
                r = self.make_vnode(
                    an.level,
                    self.add((c0, x0), self._scaled(d0, y0 * ratio)),
                    self.add((c1, x1), self._scaled(d1, y1 * ratio)),
                )
            else:
                r = self.make_mnode(
                    an.level,
                    tuple(
                        self.add(ea, self._scaled(eb[0], eb[1] * ratio))
                        for ea, eb in zip(an.edges, bn.edges)
                    ),
                )
            if self.use_compute_table:
                cache[key] = r
        if r[1] == 0:
            return ZERO
        return (r[0], self.canon(r[1] * aw))

    def _scaled(self, node, w):
        if abs(w) < TOL:
            return ZERO
        return (node, self.canon(w))

    def _mv(self, m: Node, v: Node) -> Edge:
        """Product of unit-weight matrix node ``m`` and vector node ``v``.

        Intermediate weights stay raw; :meth:`make_vnode` interns them.
        """
        if m.ident:
            return (v, 1 + 0j)
        key = (m, v)
        use_cache = self.use_compute_table
        if use_cache:
            r = self._mv_cache.get(key)
            if r is not None:
                return r
        (m0, a0), (m1, a1), (m2, a2), (m3, a3) = m.edges
        (v0, b0), (v1, b1) = v.edges
        mv = self._mv
        add = self.add
        lo = ZERO
        hi = ZERO
        if b0:
            if a0:
                s = mv(m0, v0)
                lo = (s[0], s[1] * a0 * b0)
            if a2:
                s = mv(m2, v0)
                hi = (s[0], s[1] * a2 * b0)
        if b1:
            if a1:
                s = mv(m1, v1)
                t = (s[0], s[1] * a1 * b1)
                lo = add(lo, t) if lo[1] else t
            if a3:
                s = mv(m3, v1)
                t = (s[0], s[1] * a3 * b1)
                hi = add(hi, t) if hi[1] else t
        r = self.make_vnode(m.level, lo, hi)
        if use_cache:
            self._mv_cache[key] = r
        return r

    def mat_vec(self, m: Edge, v: Edge) -> Edge:
        if m[1] == 0 or v[1] == 0:
            return ZERO
        r = self._mv(m[0], v[0])
        return self.scale_edge(r, m[1] * v[1])

    def _mm(self, a: Node, b: Node) -> Edge:
        if a.ident:
            return (b, 1 + 0j)
        if b.ident:
            return (a, 1 + 0j)
        key = (a, b)
        cache = self._mm_cache
        if self.use_compute_table:
            r = cache.get(key)
            if r is not None:
                return r
        ae = a.edges
        be = b.edges
        res = []
        for row in (0, 1):
            for col in (0, 1):
                acc = ZERO
                for k in (0, 1):
                    an, aw = ae[2 * row + k]
                    bn, bw = be[2 * k + col]
                    if aw == 0 or bw == 0:
                        continue
                    sub = self._mm(an, bn)
                    if sub[1] == 0:
                        continue
                    acc = self.add(acc, self._scaled(sub[0], sub[1] * aw * bw))
                res.append(acc)
        r = self.make_mnode(a.level, res)
        if self.use_compute_table:
            cache[key] = r
        return r

    def mat_mat(self, a: Edge, b: Edge) -> Edge:
        if a[1] == 0 or b[1] == 0:
            return ZERO
        return self.scale_edge(self._mm(a[0], b[0]), a[1] * b[1])

    def node_norm(self, node: Node) -> float:
        """Squared norm of the sub-vector below ``node`` (unit incoming weight)."""
        if node is TERMINAL:
            return 1.0
        cache = self._norm_cache
        if self.use_compute_table:
            s = cache.get(node)
            if s is not None:
                return s
        (c0, w0), (c1, w1) = node.edges
        s = 0.0
        if w0 != 0:
            s += abs(w0) ** 2 * self.node_norm(c0)
        if w1 != 0:
            s += abs(w1) ** 2 * self.node_norm(c1)
        if self.use_compute_table:
            cache[node] = s
        return s

    def node_prob_one(self, node: Node, qubit: int) -> float:
        """Mass of basis states with ``qubit`` = 1 below ``node`` (unit incoming weight)."""
        if node is TERMINAL:
            return 0.0
        (c0, w0), (c1, w1) = node.edges
        if node.level == qubit:
            return abs(w1) ** 2 * self.node_norm(c1) if w1 != 0 else 0.0
        key = (node, qubit)
        cache = self._p1_cache
        if self.use_compute_table:
            s = cache.get(key)
            if s is not None:
                return s
        s = 0.0
        if w0 != 0:
            s += abs(w0) ** 2 * self.node_prob_one(c0, qubit)
        if w1 != 0:
            s += abs(w1) ** 2 * self.node_prob_one(c1, qubit)
        if self.use_compute_table:
            cache[key] = s
        return s

    def node_inner(self, a: Node, b: Node) -> complex:
        """<a|b> of two unit-weight sub-vectors at the same level."""
        if a is TERMINAL:
            return 1 + 0j
        key = (a, b)
        cache = self._ip_cache
        if self.use_compute_table:
            r = cache.get(key)
            if r is not None:
                return r
        r = 0j
        for (an, aw), (bn, bw) in zip(a.edges, b.edges):
            if aw == 0 or bw == 0:
                continue
            r += aw.conjugate() * bw * self.node_inner(an, bn)
        if self.use_compute_table:
            cache[key] = r
        return r

    # -- gate construction ---------------------------------------------------

    def single_qubit_op(self, u, target: int, controls: Sequence[int], n: int) -> Edge:
        """Embed 2x2 matrix ``u`` on ``target``, conditioned on all ``controls`` being 1."""
        ctrl = frozenset(controls)
        zero = ZERO

        def below(level, a, b):
            if level == n:
                w = complex(u[a][b])
                return zero if abs(w) < TOL else (TERMINAL, self.canon(w))
            if level in ctrl:
                off = self.identity(level + 1, n) if a == b else zero
                return self.make_mnode(level, (off, zero, zero, below(level + 1, a, b)))
            e = below(level + 1, a, b)
            return self.make_mnode(level, (e, zero, zero, e))

        def above(level):
            if level == target:
                return self.make_mnode(
                    level, [below(level + 1, a, b) for a, b in ((0, 0), (0, 1), (1, 0), (1, 1))]
                )
            if level in ctrl:
                return self.make_mnode(level, (self.identity(level + 1, n), zero, zero, above(level + 1)))
            e = above(level + 1)
            return self.make_mnode(level, (e, zero, zero, e))

        return above(0)


# ---------------------------------------------------------------------------
# Public diagram types


@dataclass(frozen=True)
class StateDD:
    root: Edge
    num_qubits: int
    arena: Arena | None = field(default=None, repr=False, compare=False)

    def __getstate__(self):
        return {"root": self.root, "num_qubits": self.num_qubits}

    def __setstate__(self, state):
        object.__setattr__(self, "root", state["root"])
        object.__setattr__(self, "num_qubits", state["num_qubits"])
        object.__setattr__(self, "arena", None)


@dataclass(frozen=True)
class MatrixDD:
    root: Edge
    num_qubits: int
    arena: Arena | None = field(default=None, repr=False, compare=False)


def _require_arena(dd):
    if dd.arena is None:
        raise InvalidArgumentError("diagram is detached from its arena (unpickled?)")
    return dd.arena


def _check_bits(bits, n):
    bits = str(bits)
    if len(bits) != n or any(ch not in "01" for ch in bits):
        raise InvalidArgumentError(f"expected a bitstring of length {n}, got {bits!r}")
    return bits


def make_basis_state(n: int, bits: str | None = None, arena: Arena | None = None) -> StateDD:
    """Basis state ``|bits>``; q0 is the leftmost character."""
    if n < 1:
        raise InvalidArgumentError("a state needs at least one qubit")
    bits = _check_bits("0" * n if bits is None else bits, n)
    arena = Arena() if arena is None else arena
    e = ONE
    for level in range(n - 1, -1, -1):
        e = arena.make_vnode(level, ZERO, e) if bits[level] == "1" else arena.make_vnode(level, e, ZERO)
    return StateDD(e, n, arena)


def from_vector(vec, arena: Arena | None = None) -> StateDD:
    vec = np.asarray(vec, dtype=complex)
    n = int(round(math.log2(len(vec)))) if len(vec) else 0
    if n < 1 or len(vec) != 1 << n:
        raise InvalidArgumentError("vector length must be a power of two >= 2")
    arena = Arena() if arena is None else arena

    def build(level, lo, hi):
        if level == n:
            w = complex(vec[lo])
            return ZERO if abs(w) < TOL else (TERMINAL, arena.canon(w))
        mid = (lo + hi) // 2
        return arena.make_vnode(level, build(level + 1, lo, mid), build(level + 1, mid, hi))

    return StateDD(build(0, 0, len(vec)), n, arena)


def from_matrix(mat, arena: Arena | None = None) -> MatrixDD:
    mat = np.asarray(mat, dtype=complex)
    dim = mat.shape[0]
    n = int(round(math.log2(dim))) if dim else 0
    if n < 1 or mat.shape != (1 << n, 1 << n):
        raise InvalidArgumentError("matrix must be square with power-of-two size >= 2")
    arena = Arena() if arena is None else arena

    def build(level, r0, c0, size):
        if level == n:
            w = complex(mat[r0, c0])
            return ZERO if abs(w) < TOL else (TERMINAL, arena.canon(w))
        h = size // 2
        quads = [build(level + 1, r0 + i * h, c0 + j * h, h) for i in (0, 1) for j in (0, 1)]
        return arena.make_mnode(level, quads)

    return MatrixDD(build(0, 0, 0, dim), n, arena)


def amplitude(state: StateDD, bits: str) -> complex:
    """Product of edge weights along the path selected by ``bits``."""
    bits = _check_bits(bits, state.num_qubits)
    node, w = state.root
    for ch in bits:
        if w == 0:
            return 0j
        node, x = node.edges[int(ch)]
        w *= x
    return w


def to_vector(state: StateDD) -> np.ndarray:
    n = state.num_qubits
    out = np.zeros(1 << n, dtype=complex)

    def fill(e, level, offset, acc):
        node, w = e
        if w == 0:
            return
        acc = acc * w
        if level == n:
            out[offset] = acc
            return
        half = 1 << (n - level - 1)
        fill(node.edges[0], level + 1, offset, acc)
        fill(node.edges[1], level + 1, offset + half, acc)

    fill(state.root, 0, 0, 1 + 0j)
    return out


def to_matrix(op: MatrixDD) -> np.ndarray:
    n = op.num_qubits
    out = np.zeros((1 << n, 1 << n), dtype=complex)

    def fill(e, level, r, c, acc):
        node, w = e
        if w == 0:
            return
        acc = acc * w
        if level == n:
            out[r, c] = acc
            return
        h = 1 << (n - level - 1)
        for k, (i, j) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            fill(node.edges[k], level + 1, r + i * h, c + j * h, acc)

    fill(op.root, 0, 0, 0, 1 + 0j)
    return out


def gate_matrix(
    kind: str,
    params: Sequence[float] = (),
    targets: Sequence[int] = (),
    controls: Sequence[int] = (),
    n: int = 1,
    arena: Arena | None = None,
) -> MatrixDD:
    """Operator DD of a gate on an ``n``-qubit register (identity elsewhere).

    Fixed-control kinds (CX, CZ, CCX) take their control qubits from
    ``controls``; ``SWAP`` takes two ``targets``. Results are cached per arena.
    """
    kind = str(kind).upper()
    params = tuple(float(p) for p in params)
    targets = tuple(int(t) for t in targets)
    controls = tuple(int(c) for c in controls)
    arena = Arena() if arena is None else arena
    key = (kind, params, targets, controls, n)
    hit = arena._gates.get(key)
    if hit is not None:
        return hit

    if kind not in gates.ALL_KINDS or kind in gates.NON_UNITARY_KINDS:
        raise UnsupportedGateError(f"no matrix for gate kind {kind!r}")
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    qubits = targets + controls
    if len(set(qubits)) != len(qubits):
        raise InvalidArgumentError(f"targets {targets} and controls {controls} overlap")
    if any(q < 0 or q >= n for q in qubits):
        raise InvalidArgumentError(f"qubit index out of range for n={n}: {qubits}")
    if len(params) != gates.param_arity(kind):
        raise InvalidArgumentError(f"{kind} takes {gates.param_arity(kind)} parameters, got {len(params)}")

    if kind == "SWAP":
        if len(targets) != 2:
            raise InvalidArgumentError("SWAP needs exactly two targets")
        a, b = targets
        x = gates.unitary("X")
        outer = arena.single_qubit_op(x, b, (a,), n)
        inner = arena.single_qubit_op(x, a, (b,) + controls, n)
        root = arena.mat_mat(outer, arena.mat_mat(inner, outer))
    else:
        if len(targets) != 1:
            raise InvalidArgumentError(f"{kind} needs exactly one target")
        if kind in gates.CONTROLLED_KINDS and len(controls) != gates.CONTROLLED_KINDS[kind][1]:
            raise InvalidArgumentError(f"{kind} needs {gates.CONTROLLED_KINDS[kind][1]} control(s)")
        root = arena.single_qubit_op(gates.unitary(kind, params), targets[0], controls, n)

    op = MatrixDD(root, n, arena)
    arena._gates[key] = op
    return op


def embed_single(u, target: int, n: int, arena: Arena, controls: Sequence[int] = ()) -> MatrixDD:
    """Embed an arbitrary (possibly non-unitary) 2x2 matrix; used for Kraus factors."""
    if not 0 <= target < n:
        raise InvalidArgumentError(f"target {target} out of range for n={n}")
    return MatrixDD(arena.single_qubit_op(u, target, controls, n), n, arena)


def apply_matrix(op: MatrixDD, state: StateDD) -> StateDD:
    if op.num_qubits != state.num_qubits:
        raise InvalidArgumentError(f"operator on {op.num_qubits} qubits, state on {state.num_qubits}")
    arena = _require_arena(state)
    if op.arena is not arena:
        raise InvalidArgumentError("operator and state belong to different arenas")
    return StateDD(arena.mat_vec(op.root, state.root), state.num_qubits, arena)


def multiply(a: MatrixDD, b: MatrixDD) -> MatrixDD:
    """Matrix product ``a @ b``."""
    if a.num_qubits != b.num_qubits:
        raise InvalidArgumentError("operator sizes differ")
    arena = _require_arena(a)
    if b.arena is not arena:
        raise InvalidArgumentError("operators belong to different arenas")
    return MatrixDD(arena.mat_mat(a.root, b.root), a.num_qubits, arena)


def add(a: StateDD, b: StateDD) -> StateDD:
    if a.num_qubits != b.num_qubits:
        raise InvalidArgumentError("states have different qubit counts")
    arena = _require_arena(a)
    if b.arena is not arena:
        raise InvalidArgumentError("states belong to different arenas")
    return StateDD(arena.add(a.root, b.root), a.num_qubits, arena)


def scale(state: StateDD, c: complex) -> StateDD:
    arena = _require_arena(state)
    return StateDD(arena.scale_edge(state.root, complex(c)), state.num_qubits, arena)


def _reader(*dds):
    for d in dds:
        if d.arena is not None:
            return d.arena
    return Arena()


def norm_squared(state: StateDD) -> float:
    node, w = state.root
    if w == 0:
        return 0.0
    return abs(w) ** 2 * _reader(state).node_norm(node)


def prob_one(state: StateDD, qubit: int) -> float:
    """Probability mass (unnormalised) of basis states with ``qubit`` set."""
    if not 0 <= qubit < state.num_qubits:
        raise InvalidArgumentError(f"qubit {qubit} out of range")
    node, w = state.root
    if w == 0:
        return 0.0
    return abs(w) ** 2 * _reader(state).node_prob_one(node, qubit)


def inner_product(a: StateDD, b: StateDD) -> complex:
    """<a|b>; conjugates ``a``."""
    if a.num_qubits != b.num_qubits:
        raise InvalidArgumentError("states have different qubit counts")
    (an, aw), (bn, bw) = a.root, b.root
    if aw == 0 or bw == 0:
        return 0j
    return aw.conjugate() * bw * _reader(b, a).node_inner(an, bn)


def measure_all(state: StateDD, rng) -> str:
    """Sample a basis bitstring with probability |amplitude|^2 (one draw per qubit)."""
    arena = _reader(state)
    total = norm_squared(state)
    if abs(total - 1.0) > 1e-6:
        raise NumericDegeneracyError(f"cannot measure a state with squared norm {total!r}")
    node = state.root[0]
    out = []
    while node is not TERMINAL:
        (c0, w0), (c1, w1) = node.edges
        p0 = abs(w0) ** 2 * arena.node_norm(c0) if w0 != 0 else 0.0
        p1 = abs(w1) ** 2 * arena.node_norm(c1) if w1 != 0 else 0.0
        if rng.random() * (p0 + p1) < p0:
            out.append("0")
            node = c0
        else:
            out.append("1")
            node = c1
    return "".join(out)


def node_count(dd) -> int:
    """Number of distinct non-terminal nodes reachable from the root."""
    seen = set()
    stack = [dd.root[0]]
    while stack:
        node = stack.pop()
        if node is TERMINAL or id(node) in seen:
            continue
        seen.add(id(node))
        stack.extend(e[0] for e in node.edges if e[1] != 0)
    return len(seen)


def is_normalized(dd) -> bool:
    """True when every reachable node has a weight exactly 1 and none above 1."""
    seen = set()
    stack = [dd.root[0]]
    while stack:
        node = stack.pop()
        if node is TERMINAL or id(node) in seen:
            continue
        seen.add(id(node))
        ws = [w for _, w in node.edges]
        if not any(w == 1 for w in ws) or any(abs(w) > 1 + 1e-12 for w in ws):
            return False
        for n, w in node.edges:
            if w == 0 and n is not TERMINAL:
                return False
        stack.extend(e[0] for e in node.edges)
    return True


def _fmt(w: complex) -> str:
    if w.imag == 0:
        return f"{w.real:.6g}"
    return f"{w.real:.6g}{w.imag:+.6g}i"


def to_dot(dd) -> str:
    """Graphviz text; node label = qubit level, edge label = weight (1 omitted)."""
    lines = ["digraph dd {", '  root [shape=point];', '  t [label="1", shape=box];']
    names = {}
    stack = [dd.root[0]]
    order = []
    while stack:
        node = stack.pop()
        if node is TERMINAL or id(node) in names:
            continue
        names[id(node)] = f"n{len(names)}"
        order.append(node)
        stack.extend(e[0] for e in node.edges if e[1] != 0)

    def ref(node):
        return "t" if node is TERMINAL else names[id(node)]

    def label(w):
        return "" if w == 1 else f' [label="{_fmt(w)}"]'

    node, w = dd.root
    if w == 0:
        lines.append('  z0 [label="0", shape=plaintext];')
        lines.append("  root -> z0;")
    else:
        lines.append(f"  root -> {ref(node)}{label(w)};")
    zeros = 0
    for node in order:
        name = names[id(node)]
        lines.append(f'  {name} [label="q{node.level}", shape=circle];')
        for i, (child, cw) in enumerate(node.edges):
            if cw == 0:
                zeros += 1
                lines.append(f'  z{zeros} [label="0", shape=plaintext];')
                lines.append(f'  {name} -> z{zeros} [taillabel="{i}"];')
            else:
                extra = f', label="{_fmt(cw)}"' if cw != 1 else ""
                lines.append(f'  {name} -> {ref(child)} [taillabel="{i}"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
