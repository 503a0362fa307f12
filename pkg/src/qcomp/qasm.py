"""Reader and writer for a small OpenQASM 2 subset.

Grammar (one statement per line, ``//`` comments, whitespace-insensitive)::

    program   := header? qreg creg? statement*
    header    := "OPENQASM 2.0;" | 'include "qelib1.inc";'
    qreg      := "qreg" ID "[" INT "]" ";"
    creg      := "creg" ID "[" INT "]" ";"
    statement := NAME ( "(" expr ("," expr)* ")" )? qarg ("," qarg)* ";"
               | "measure" qarg "->" ID "[" INT "]" ";"
    qarg      := ID "[" INT "]"
    expr      := arithmetic over numbers and ``pi``

A ``// @global_phase <float>`` pragma carries the circuit's global phase.
"""

from __future__ import annotations

import ast
import math
import operator
import re

from .circuit import GATE_ARITY, Circuit, Gate
from .errors import IndexOutOfRange, QasmSyntaxError, UnknownGate

_PHASE_PRAGMA = re.compile(r"^//\s*@global_phase\s+(\S+)\s*$")
_QREG = re.compile(r"^qreg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_CREG = re.compile(r"^creg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_GATE = re.compile(r"^([a-z][a-z0-9_]*)\s*(?:\((.*)\))?\s+(.+)$")
_QARG = re.compile(r"^([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_MEASURE = re.compile(r"^measure\s+(.+?)\s*->\s*([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_expr(text: str, line: int) -> float:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise QasmSyntaxError(f"bad expression {text!r}", line) from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise QasmSyntaxError(f"unsupported expression {text!r}", line)

    return ev(tree)


def _split_statements(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        m = _PHASE_PRAGMA.match(stripped)
        if m:
            yield lineno, ("pragma", m.group(1))
            continue
        body = raw.split("//", 1)[0].strip()
        if not body:
            continue
        for stmt in body.split(";")[:-1] if body.endswith(";") else [None]:
            if stmt is None:
                raise QasmSyntaxError("statement must end with ';'", lineno)
            stmt = stmt.strip()
            if stmt:
                yield lineno, ("stmt", stmt)


def parse_qasm(text: str) -> Circuit:
    reg = None
    n = None
    phase = 0.0
    gates: list[Gate] = []

    def qarg(tok: str, line: int) -> int:
        m = _QARG.match(tok.strip())
        if not m:
            raise QasmSyntaxError(f"bad qubit argument {tok.strip()!r}", line)
        if m.group(1) != reg:
            raise QasmSyntaxError(f"unknown register {m.group(1)!r}", line)
        idx = int(m.group(2))
        if idx >= n:
            raise IndexOutOfRange(f"line {line}: {reg}[{idx}] out of range for size {n}", line=line)
        return idx

    for line, (kind, stmt) in _split_statements(text):
        if kind == "pragma":
            try:
                phase = float(stmt)
            except ValueError:
                raise QasmSyntaxError(f"bad global phase {stmt!r}", line) from None
            continue
        if stmt.startswith("OPENQASM") or stmt.startswith("include"):
            continue
        m = _QREG.match(stmt)
        if m:
            if reg is not None:
                raise QasmSyntaxError("only one qreg is supported", line)
            reg, n = m.group(1), int(m.group(2))
            if n < 1:
                raise QasmSyntaxError("qreg size must be positive", line)
            continue
        if _CREG.match(stmt):
            continue
        if reg is None:
            raise QasmSyntaxError("gate before qreg declaration", line)
        m = _MEASURE.match(stmt)
        if m:
            gates.append(Gate("measure", (qarg(m.group(1), line),)))
            continue
        m = _GATE.match(stmt)
        if not m:
            raise QasmSyntaxError(f"cannot parse {stmt!r}", line)
        name, ptext, args = m.group(1), m.group(2), m.group(3)
        if name not in GATE_ARITY or name == "measure":
            raise UnknownGate(f"line {line}: unknown gate {name!r}", name=name, line=line)
        params = [] if ptext is None or not ptext.strip() else [
            _eval_expr(p, line) for p in ptext.split(",")
        ]
        qubits = tuple(qarg(a, line) for a in args.split(","))
        nq, npar = GATE_ARITY[name]
        if len(qubits) != nq or len(params) != npar:
            raise QasmSyntaxError(f"{name} expects {nq} qubit(s) and {npar} param(s)", line)
        if len(set(qubits)) != len(qubits):
            raise QasmSyntaxError(f"{name} repeats a qubit", line)
        gates.append(Gate(name, qubits, tuple(params)))
    if reg is None:
        raise QasmSyntaxError("missing qreg declaration", 1)
    return Circuit(n, tuple(gates), phase)


def emit_qasm(circuit: Circuit) -> str:
    """Serialize ``circuit``; ``custom`` gates must be lowered first."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    if any(g.name == "measure" for g in circuit.gates):
        lines.append(f"creg c[{circuit.num_qubits}];")
    if circuit.global_phase:
        lines.append(f"// @global_phase {circuit.global_phase!r}")
    for g in circuit.gates:
        if g.name == "custom":
            raise UnknownGate("custom gates have no QASM form; lower them first", name="custom")
        if g.name == "measure":
            q = g.qubits[0]
            lines.append(f"measure q[{q}] -> c[{q}];")
            continue
        head = g.name
        if g.params:
            head += "(" + ",".join(repr(p) for p in g.params) + ")"
        lines.append(head + " " + ",".join(f"q[{q}]" for q in g.qubits) + ";")
    return "\n".join(lines) + "\n"
