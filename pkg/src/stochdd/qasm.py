"""OpenQASM 2.0 subset reader.

Supported: the ``OPENQASM 2.0;`` header, ``include`` (ignored; the standard
gates are built in), any number of ``qreg``/``creg`` declarations, built-in
gates, user ``gate`` macros (inlined at the call site), ``measure``,
``barrier`` (dropped) and ``//`` comments. Quantum registers are flattened
into one index space in declaration order, so ``q[0]`` of the first register
is circuit qubit 0 (the most significant bit of reported bitstrings).

``if``, ``opaque`` and ``reset`` raise :class:`QasmUnsupportedError`;
malformed input raises :class:`QasmSyntaxError`. Nothing else escapes.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .circuit import Circuit, GateOp
from .errors import StochDDError

log = logging.getLogger(__name__)

MAX_QUBITS = 4096
MAX_OPS = 2_000_000
MAX_MACRO_DEPTH = 64


class QasmError(StochDDError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"line {line}" + (f", column {col}" if col is not None else "") if line else ""
        super().__init__(f"{where}: {message}" if where else message)
        self.message = message


class QasmSyntaxError(QasmError):
    pass


class QasmUnsupportedError(QasmError):
    def __init__(self, construct, line=None, col=None):
        self.construct = construct
        super().__init__(f"unsupported construct {construct!r}", line, col)


@dataclass(frozen=True)
class Token:
    kind: str  # id, num, str, sym, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<sym>->|==|[{}()\[\];,+\-*/^])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- expressions --------------------------------------------------------------

_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt,
}


def _eval(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_eval(node[1], env)
    if tag == "call":
        return _FUNCS[node[1]](_eval(node[2], env))
    a, b = _eval(node[1], env), _eval(node[2], env)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        return a / b
    return a**b


# -- built-in gates -------------------------------------------------------------


def _single(kind, nparams=0):
    def emit(params, qs):
        return [GateOp(kind, params, targets=(qs[0],))]

    return emit, nparams, 1


def _ctrl(kind, nparams=0, ncontrols=1):
    def emit(params, qs):
        return [GateOp(kind, params, targets=(qs[-1],), controls=tuple(qs[:-1]))]

    return emit, nparams, ncontrols + 1


def _u2(params, qs):
    return [GateOp("U3", (math.pi / 2, params[0], params[1]), targets=(qs[0],))]


def _cswap(params, qs):
    return [GateOp("SWAP", targets=(qs[1], qs[2]), controls=(qs[0],))]


def _rzz(params, qs):
    a, b = qs
    return [
        GateOp("CX", targets=(b,), controls=(a,)),
        GateOp("RZ", params, targets=(b,)),
        GateOp("CX", targets=(b,), controls=(a,)),
    ]


BUILTIN_GATES = {
    "U": _single("U3", 3), "u3": _single("U3", 3), "u": _single("U3", 3),
    "u2": (_u2, 2, 1), "u1": _single("PHASE", 1), "p": _single("PHASE", 1),
    "id": _single("I"), "x": _single("X"), "y": _single("Y"), "z": _single("Z"),
    "h": _single("H"), "s": _single("S"), "sdg": _single("SDG"),
    "t": _single("T"), "tdg": _single("TDG"),
    "rx": _single("RX", 1), "ry": _single("RY", 1), "rz": _single("RZ", 1),
    "CX": _ctrl("CX"), "cx": _ctrl("CX"), "cz": _ctrl("CZ"), "ccx": _ctrl("CCX", 0, 2),
    "cy": _ctrl("Y"), "ch": _ctrl("H"), "crx": _ctrl("RX", 1), "cry": _ctrl("RY", 1),
    "crz": _ctrl("RZ", 1), "cu1": _ctrl("PHASE", 1), "cp": _ctrl("PHASE", 1),
    "cphase": _ctrl("PHASE", 1), "cu3": _ctrl("U3", 3),
    "swap": (lambda params, qs: [GateOp("SWAP", targets=(qs[0], qs[1]))], 0, 2),
    "cswap": (_cswap, 0, 3), "rzz": (_rzz, 1, 2),
}
_PRIMITIVE = {"U", "CX"}


@dataclass
class _Macro:
    name: str
    params: list[str]
    args: list[str]
    body: list  # (name, [expr], [argname], line, col)


class _Parser:
    def __init__(self, source):
        self.toks = tokenize(source)
        self.i = 0
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, int] = {}
        self.nqubits = 0
        self.nclbits = 0
        self.macros: dict[str, _Macro] = {}
        self.ops: list[GateOp] = []

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return QasmSyntaxError(msg, tok.line, tok.col)

    def expect(self, text=None, kind=None):
        t = self.next()
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.kind != "eof" else "end of input"
            raise QasmSyntaxError(f"expected {want}, got {got}", t.line, t.col)
        return t

    def accept(self, text):
        if self.peek().text == text and self.peek().kind in ("sym", "id"):
            return self.next()
        return None

    # program
    def parse(self):
        if self.peek().text == "OPENQASM":
            self.next()
            ver = self.expect(kind="num")
            if not ver.text.startswith("2"):
                raise QasmUnsupportedError(f"OPENQASM {ver.text}", ver.line, ver.col)
            self.expect(";")
        while self.peek().kind != "eof":
            self.statement()
        return self.ops

    def statement(self):
        t = self.peek()
        if t.kind != "id":
            raise self.error(f"unexpected {t.text!r}", t)
        word = t.text
        if word in ("if", "opaque", "reset"):
            raise QasmUnsupportedError(word, t.line, t.col)
        if word == "OPENQASM":
            raise self.error("OPENQASM header must come first", t)
        self.next()
        if word == "include":
            name = self.expect(kind="str")
            self.expect(";")
            log.info("line %d: include %s ignored (standard gates are built in)", t.line, name.text)
        elif word in ("qreg", "creg"):
            self.declaration(word)
        elif word == "gate":
            self.gate_definition()
        elif word == "measure":
            src = self.argument()
            self.expect("->")
            dst = self.argument(classical=True)
            self.expect(";")
            if len(src) != len(dst):
                raise QasmSyntaxError("measure source and destination sizes differ", t.line, t.col)
            self.emit([GateOp("MEASURE", targets=(q,)) for q in src], t)
        elif word == "barrier":
            self.arguments()
            self.expect(";")
        else:
            params = self.param_list() if self.peek().text == "(" else []
            args = self.arguments()
            self.expect(";")
            values = [self.evaluate(e, {}, t) for e in params]
            width = {len(a) for a in args if len(a) > 1}
            if len(width) > 1:
                raise QasmSyntaxError("register arguments of different sizes", t.line, t.col)
            reps = width.pop() if width else 1
            for k in range(reps):
                qs = [a[k] if len(a) > 1 else a[0] for a in args]
                self.call(word, values, qs, t, 0)

    def declaration(self, word):
        name = self.expect(kind="id")
        self.expect("[")
        size_tok = self.expect(kind="num")
        self.expect("]")
        self.expect(";")
        if not size_tok.text.isdigit() or int(size_tok.text) < 1:
            raise QasmSyntaxError("register size must be a positive integer", size_tok.line, size_tok.col)
        size = int(size_tok.text)
        if name.text in self.qregs or name.text in self.cregs:
            raise QasmSyntaxError(f"register {name.text!r} redeclared", name.line, name.col)
        if word == "qreg":
            if self.nqubits + size > MAX_QUBITS:
                raise QasmSyntaxError(f"more than {MAX_QUBITS} qubits declared", size_tok.line, size_tok.col)
            self.qregs[name.text] = (self.nqubits, size)
            self.nqubits += size
        else:
            if size > MAX_QUBITS:
                raise QasmSyntaxError("classical register too large", size_tok.line, size_tok.col)
            self.cregs[name.text] = size
            self.nclbits += size

    def gate_definition(self):
        name = self.expect(kind="id")
        params = []
        if self.accept("("):
            if not self.accept(")"):
                params.append(self.expect(kind="id").text)
                while self.accept(","):
                    params.append(self.expect(kind="id").text)
                self.expect(")")
        args = [self.expect(kind="id").text]
        while self.accept(","):
            args.append(self.expect(kind="id").text)
        if len(set(args)) != len(args) or len(set(params)) != len(params):
            raise QasmSyntaxError(f"duplicate names in gate {name.text!r} signature", name.line, name.col)
        self.expect("{")
        body = []
        while not self.accept("}"):
            t = self.peek()
            if t.kind != "id":
                raise self.error(f"unexpected {t.text!r} in gate body", t)
            if t.text in ("if", "opaque", "reset", "measure"):
                raise QasmUnsupportedError(t.text, t.line, t.col)
            self.next()
            exprs = self.param_list() if self.peek().text == "(" else []
            names = [self.expect(kind="id").text]
            while self.accept(","):
                names.append(self.expect(kind="id").text)
            self.expect(";")
            for a in names:
                if a not in args:
                    raise QasmSyntaxError(f"unknown qubit argument {a!r} in gate body", t.line, t.col)
            if t.text != "barrier":
                body.append((t.text, exprs, names, t.line, t.col))
        self.macros[name.text] = _Macro(name.text, params, args, body)

    # gate application
    def call(self, name, values, qs, tok, depth):
        if depth > MAX_MACRO_DEPTH:
            raise QasmSyntaxError(f"gate {name!r} nests deeper than {MAX_MACRO_DEPTH}", tok.line, tok.col)
        if len(set(qs)) != len(qs):
            raise QasmSyntaxError(f"overlapping qubit arguments to {name!r}", tok.line, tok.col)
        macro = self.macros.get(name) if name not in _PRIMITIVE else None
        if macro is not None:
            if len(values) != len(macro.params) or len(qs) != len(macro.args):
                raise QasmSyntaxError(
                    f"gate {name!r} takes {len(macro.params)} parameter(s) and "
                    f"{len(macro.args)} qubit(s)", tok.line, tok.col,
                )
            env = dict(zip(macro.params, values))
            binding = dict(zip(macro.args, qs))
            for sub, exprs, names, line, col in macro.body:
                subtok = Token("id", sub, line, col)
                sub_values = [self.evaluate(e, env, subtok) for e in exprs]
                self.call(sub, sub_values, [binding[a] for a in names], subtok, depth + 1)
            return
        spec = BUILTIN_GATES.get(name)
        if spec is None:
            raise QasmUnsupportedError(f"gate {name}", tok.line, tok.col)
        emit, nparams, nqubits = spec
        if len(values) != nparams or len(qs) != nqubits:
            raise QasmSyntaxError(
                f"gate {name!r} takes {nparams} parameter(s) and {nqubits} qubit(s)", tok.line, tok.col
            )
        self.emit(emit(values, qs), tok)

    def emit(self, ops, tok):
        if len(self.ops) + len(ops) > MAX_OPS:
            raise QasmSyntaxError(f"circuit exceeds {MAX_OPS} operations", tok.line, tok.col)
        self.ops.extend(ops)

    # arguments
    def arguments(self):
        args = [self.argument()]
        while self.accept(","):
            args.append(self.argument())
        return args

    def argument(self, classical=False):
        name = self.expect(kind="id")
        regs = self.cregs if classical else self.qregs
        if name.text not in regs:
            kind = "classical" if classical else "quantum"
            raise QasmSyntaxError(f"undeclared {kind} register {name.text!r}", name.line, name.col)
        if classical:
            offset, size = 0, regs[name.text]
        else:
            offset, size = regs[name.text]
        if self.accept("["):
            idx = self.expect(kind="num")
            self.expect("]")
            if not idx.text.isdigit() or int(idx.text) >= size:
                raise QasmSyntaxError(f"index {idx.text} out of range for {name.text}[{size}]", idx.line, idx.col)
            return [offset + int(idx.text)]
        return list(range(offset, offset + size))

    def param_list(self):
        self.expect("(")
        if self.accept(")"):
            return []
        exprs = [self.expr()]
        while self.accept(","):
            exprs.append(self.expr())
        self.expect(")")
        return exprs

    # expressions: precedence climbing, ^ right-associative
    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "sym":
            op = self.next().text
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "sym":
            op = self.next().text
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return ("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return ("^", base, self.unary())
        return base

    def atom(self):
        t = self.next()
        if t.kind == "num":
            return ("num", float(t.text))
        if t.kind == "id":
            if t.text == "pi":
                return ("num", math.pi)
            if t.text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", t.text, arg)
            return ("var", t.text, t.line, t.col)
        if t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise QasmSyntaxError(f"unexpected {t.text!r} in expression", t.line, t.col)

    def evaluate(self, node, env, tok):
        try:
            value = _eval(node, env)
        except KeyError as exc:
            raise QasmSyntaxError(f"unknown parameter {exc.args[0]!r}", tok.line, tok.col) from None
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise QasmSyntaxError(f"cannot evaluate parameter: {exc}", tok.line, tok.col) from None
        if isinstance(value, complex) or not math.isfinite(value):
            raise QasmSyntaxError("parameter is not a finite real number", tok.line, tok.col)
        return float(value)


def parse_qasm(source: str, name: str = "qasm") -> Circuit:
    """Parse OpenQASM 2.0 text into a :class:`Circuit` with macros inlined."""
    parser = _Parser(source)
    try:
        ops = parser.parse()
    except RecursionError:
        tok = parser.peek()
        raise QasmSyntaxError("expression nested too deeply", tok.line, tok.col) from None
    if parser.nqubits == 0:
        raise QasmSyntaxError("no quantum register declared", parser.peek().line)
    return Circuit(parser.nqubits, ops, name=name, clbits=parser.nclbits)


def load_qasm(path) -> Circuit:
    path = Path(path)
    return parse_qasm(path.read_text(encoding="utf-8"), name=path.stem)
