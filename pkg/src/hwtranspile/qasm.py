"""Reader and writer for the ``.q2`` circuit format.

The format is a small OpenQASM-2-like subset::

    qreg q[3];
    h q[0];
    rz(3*pi/2) q[1];      // comments run to end of line
    acecr(-pi/2) q[0],q[1];
    gr(pi/2,0) q;         // a bare register operand denotes the global gate
    delay(160) q[2];

Angles that are rational multiples of pi are written as such so that parsing
reproduces the exact same float; everything else is written with ``repr``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .ir import GATE_SPECS, Circuit, CircuitError, Gate, Operation


class QasmError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[()\[\],;+\-*/])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# Expression values: exact rationals, exact rational multiples of pi, or floats.
@dataclass(frozen=True)
class _PiMul:
    coef: Fraction


_Val = Union[Fraction, _PiMul, float]


def _to_float(v: _Val) -> float:
    if isinstance(v, _PiMul):
        return v.coef.numerator * math.pi / v.coef.denominator
    return float(v)


def _add(a: _Val, b: _Val) -> _Val:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    if isinstance(a, _PiMul) and isinstance(b, _PiMul):
        return _PiMul(a.coef + b.coef)
    return _to_float(a) + _to_float(b)


def _neg(a: _Val) -> _Val:
    if isinstance(a, _PiMul):
        return _PiMul(-a.coef)
    return -a


def _mul(a: _Val, b: _Val) -> _Val:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    if isinstance(a, Fraction) and isinstance(b, _PiMul):
        return _PiMul(a * b.coef)
    if isinstance(a, _PiMul) and isinstance(b, Fraction):
        return _PiMul(a.coef * b)
    return _to_float(a) * _to_float(b)


def _div(a: _Val, b: _Val) -> _Val:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a / b
    if isinstance(a, _PiMul) and isinstance(b, Fraction):
        return _PiMul(a.coef / b)
    if isinstance(a, _PiMul) and isinstance(b, _PiMul):
        return a.coef / b.coef
    return _to_float(a) / _to_float(b)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None) -> QasmError:
        tok = tok or self.tok
        return QasmError(msg, tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> _Tok:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    # expr := term (('+'|'-') term)*
    def expr(self) -> _Val:
        v = self.term()
        while self.tok.text in ("+", "-"):
            sign = self.advance().text
            rhs = self.term()
            v = _add(v, rhs if sign == "+" else _neg(rhs))
        return v

    def term(self) -> _Val:
        v = self.unary()
        while self.tok.text in ("*", "/"):
            opname = self.advance()
            rhs = self.unary()
            if opname.text == "*":
                v = _mul(v, rhs)
            else:
                if _to_float(rhs) == 0.0:
                    raise self.error("division by zero", opname)
                v = _div(v, rhs)
        return v

    def unary(self) -> _Val:
        if self.tok.text == "-":
            self.advance()
            return _neg(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.atom()

    def atom(self) -> _Val:
        t = self.tok
        if t.kind == "num":
            self.advance()
            if re.fullmatch(r"\d+", t.text):
                return Fraction(int(t.text))
            return float(t.text)
        if t.kind == "id" and t.text == "pi":
            self.advance()
            return _PiMul(Fraction(1))
        if t.text == "(":
            self.advance()
            v = self.expr()
            self.expect(")")
            return v
        raise self.error(f"expected a number, 'pi' or '(', found {t.text or 'end of input'!r}")

    def int_literal(self) -> int:
        t = self.expect_kind("num", "an integer")
        if not re.fullmatch(r"\d+", t.text):
            raise self.error(f"expected an integer, found {t.text!r}", t)
        return int(t.text)

    def parse(self) -> Circuit:
        if self.tok.kind == "eof":
            raise self.error("missing register declaration")
        start = self.tok
        if start.text != "qreg":
            raise self.error(f"expected 'qreg' declaration, found {start.text!r}")
        self.advance()
        reg = self.expect_kind("id", "a register name").text
        self.expect("[")
        size_tok = self.tok
        size = self.int_literal()
        if size < 1:
            raise self.error("register size must be positive", size_tok)
        self.expect("]")
        self.expect(";")
        ops: list[Operation] = []
        while self.tok.kind != "eof":
            ops.append(self.statement(reg, size))
        return Circuit(size, tuple(ops))

    def statement(self, reg: str, size: int) -> Operation:
        name_tok = self.expect_kind("id", "a gate name")
        name = name_tok.text
        if name == "qreg":
            raise self.error("only one register declaration is allowed", name_tok)
        if name not in GATE_SPECS:
            raise self.error(f"unknown gate {name!r}", name_tok)
        arity, nparams = GATE_SPECS[name]
        args: list[_Val] = []
        if self.tok.text == "(":
            self.advance()
            if self.tok.text != ")":
                args.append(self.expr())
                while self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
            self.expect(")")
        if len(args) != nparams:
            raise self.error(f"{name} takes {nparams} parameter(s), got {len(args)}", name_tok)
        qubits: list[int] = []
        bare = False
        while True:
            reg_tok = self.expect_kind("id", "a qubit operand")
            if reg_tok.text != reg:
                raise self.error(f"unknown register {reg_tok.text!r}", reg_tok)
            if self.tok.text == "[":
                self.advance()
                idx_tok = self.tok
                idx = self.int_literal()
                if idx >= size:
                    raise self.error(f"qubit {idx} out of range for register of size {size}", idx_tok)
                self.expect("]")
                qubits.append(idx)
            else:
                bare = True
            if self.tok.text != ",":
                break
            self.advance()
        self.expect(";")
        if arity == 0:
            if not bare or qubits:
                raise self.error(f"{name} is global and takes the bare register operand", name_tok)
        elif bare:
            raise self.error(f"{name} needs indexed qubit operands", name_tok)
        elif len(qubits) != arity:
            raise self.error(f"{name} acts on {arity} qubit(s), got {len(qubits)}", name_tok)
        if name == "delay":
            if not isinstance(args[0], Fraction) or args[0].denominator != 1:
                raise self.error("delay takes an integer dt count", name_tok)
        try:
            return Operation(Gate(name, tuple(_to_float(a) for a in args)), tuple(qubits))
        except CircuitError as exc:
            raise self.error(str(exc), name_tok) from None


def parse(text: str) -> Circuit:
    """Parse ``.q2`` source text into a :class:`Circuit`."""
    return _Parser(text).parse()


def format_angle(theta: float) -> str:
    """Rational multiple of pi when it reproduces ``theta`` exactly, else ``repr``."""
    if theta == 0.0:
        return "0"
    c = Fraction(theta / math.pi).limit_denominator(720)
    if c != 0 and c.numerator * math.pi / c.denominator == theta:
        num, den = c.numerator, c.denominator
        sign = "-" if num < 0 else ""
        num = abs(num)
        body = "pi" if num == 1 else f"{num}*pi"
        return f"{sign}{body}" if den == 1 else f"{sign}{body}/{den}"
    return repr(theta)


def _format_params(o: Operation) -> str:
    if not o.params:
        return ""
    if o.kind == "delay":
        return f"({o.params[0]})"
    if o.kind == "phxz":
        return "(" + ",".join(repr(p) for p in o.params) + ")"
    return "(" + ",".join(format_angle(p) for p in o.params) + ")"


def emit_lines(circuit: Circuit, reg: str = "q") -> Iterator[str]:
    yield f"qreg {reg}[{circuit.num_qubits}];"
    for o in circuit.ops:
        if o.gate.is_global:
            operands = reg
        else:
            operands = ",".join(f"{reg}[{q}]" for q in o.qubits)
        yield f"{o.kind}{_format_params(o)} {operands};"


def emit(circuit: Circuit) -> str:
    """Serialise a circuit; ``parse(emit(c)) == c``."""
    return "\n".join(emit_lines(circuit)) + "\n"


def load(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(circuit: Circuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit(circuit))
