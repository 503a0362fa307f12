"""Exact decomposition of unitaries into CNOT and single-qubit gates.

The pipeline follows the standard circuit model: a ``d x d`` unitary is
factored into two-level unitaries, each two-level factor becomes a
multi-controlled single-qubit gate wrapped in Gray-code flips, the
multi-controlled gate is expanded with the square-root ladder, and every
controlled single-qubit gate is finally written with two CNOTs (the ABC
construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from ..circuit import Circuit, Gate, check_unitary, rz, ry
from ..errors import DimensionMismatch, NotUnitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class TwoLevelFactor:
    """Unitary acting non-trivially only on basis states ``i < j``."""

    dim: int
    i: int
    j: int
    block: np.ndarray

    def expand(self) -> np.ndarray:
        m = np.eye(self.dim, dtype=complex)
        idx = [self.i, self.j]
        m[np.ix_(idx, idx)] = self.block
        return m


# --- single-qubit helpers -------------------------------------------------

def zyz_angles(u) -> tuple[float, float, float, float]:
    """Return ``(alpha, beta, gamma, delta)`` with ``u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)``."""
    u = np.asarray(u, dtype=complex)
    alpha = float(np.angle(np.linalg.det(u))) / 2
    v = u * np.exp(-1j * alpha)
    a, b = v[0, 0], v[1, 0]
    gamma = 2 * float(np.arctan2(abs(b), abs(a)))
    s = -2 * float(np.angle(a)) if abs(a) > _EPS else 0.0
    d = 2 * float(np.angle(b)) if abs(b) > _EPS else 0.0
    return alpha, (s + d) / 2, gamma, (s - d) / 2


def u3_params(u) -> tuple[float, float, float, float]:
    """Return ``(theta, phi, lam, phase)`` with ``u = e^{i phase} u3(theta, phi, lam)``."""
    alpha, beta, gamma, delta = zyz_angles(u)
    return gamma, beta, delta, alpha - (beta + delta) / 2


def single_qubit_gate(u, qubit: int) -> tuple[Gate | None, float]:
    """A ``u3`` gate for ``u`` and the global phase it drops; ``None`` for identity."""
    theta, phi, lam, phase = u3_params(u)
    u = np.asarray(u, dtype=complex)
    if np.max(np.abs(u - u[0, 0] * I2)) < _EPS and abs(abs(u[0, 0]) - 1) < _EPS:
        return None, float(np.angle(u[0, 0]))
    return Gate("u3", (qubit,), (theta, phi, lam)), phase


def unitary_sqrt(u) -> np.ndarray:
    """Principal square root of a unitary via its Schur form."""
    t, q = schur(np.asarray(u, dtype=complex), output="complex")
    return q @ np.diag(np.sqrt(np.diag(t))) @ q.conj().T


def controlled_matrix(u, n_controls: int = 1) -> np.ndarray:
    """Matrix of C^n-U over local qubits ``(c_1, ..., c_n, target)``."""
    k = n_controls
    dim = 2 ** (k + 1)
    m = np.eye(dim, dtype=complex)
    base = 2**k - 1
    idx = [base, base + 2**k]
    m[np.ix_(idx, idx)] = u
    return m


def mcu_gate(u, controls, target: int) -> Gate:
    if not controls:
        return Gate("custom", (target,), (), np.asarray(u, dtype=complex))
    if len(controls) == 1 and np.allclose(u, X, atol=_EPS):
        return Gate("cx", (controls[0], target))
    return Gate("custom", (*controls, target), (), controlled_matrix(u, len(controls)))


def as_controlled(gate: Gate) -> np.ndarray | None:
    """The target block of a 2-qubit controlled custom gate, or ``None``."""
    if gate.name != "custom" or gate.num_qubits != 2:
        return None
    m = gate.matrix
    if np.max(np.abs(m[np.ix_([0, 2], [0, 2])] - I2)) > 1e-12:
        return None
    if np.max(np.abs(m[np.ix_([0, 2], [1, 3])])) > 1e-12 or np.max(np.abs(m[np.ix_([1, 3], [0, 2])])) > 1e-12:
        return None
    return m[np.ix_([1, 3], [1, 3])]


# --- step 1: two-level factors -------------------------------------------

def two_level_decompose(u) -> list[TwoLevelFactor]:
    """Factor ``u`` so that ``F_1 @ F_2 @ ... @ F_k == u``.

    Gaussian elimination column by column; the phase left on each diagonal is
    folded into the column's last rotation, which keeps the factor count at
    most ``d(d-1)/2``.
    """
    u = check_unitary(u)
    d = u.shape[0]
    if d < 2:
        raise DimensionMismatch("need dimension >= 2")
    w = u.copy()
    applied: list[TwoLevelFactor] = []  # G_k ... G_1 u = I

    def apply(f: TwoLevelFactor):
        idx = [f.i, f.j]
        w[idx, :] = f.block @ w[idx, :]

    for j in range(d - 2):
        last = None
        for i in range(j + 1, d):
            b = w[i, j]
            if abs(b) < _EPS:
                continue
            a = w[j, j]
            r = np.hypot(abs(a), abs(b))
            g = np.array([[np.conj(a), np.conj(b)], [-b, a]], dtype=complex) / r
            f = TwoLevelFactor(d, j, i, g)
            apply(f)
            applied.append(f)
            last = len(applied) - 1
        ph = w[j, j]
        if abs(ph - 1) > _EPS:
            fix = np.diag([np.conj(ph), 1]).astype(complex)
            if last is not None:
                old = applied[last]
                applied[last] = TwoLevelFactor(d, old.i, old.j, fix @ old.block)
            else:
                applied.append(TwoLevelFactor(d, j, j + 1, fix))
            w[j, :] = np.conj(ph) * w[j, :]
    block = w[d - 2:, d - 2:]
    if np.max(np.abs(block - I2)) > _EPS:
        applied.append(TwoLevelFactor(d, d - 2, d - 1, block.conj().T))
    return [TwoLevelFactor(d, f.i, f.j, f.block.conj().T) for f in applied]


# --- step 1/2 boundary: Gray code --------------------------------------

def _gray_path(a: int, b: int, n: int) -> list[int]:
    path = [a]
    cur = a
    for bit in range(n):
        if (cur ^ b) >> bit & 1:
            cur ^= 1 << bit
            path.append(cur)
    return path


def _mcx_with_polarity(s: int, bit: int, n: int, u, expand: bool) -> list[Gate]:
    """C-U on ``bit`` conditioned on every other qubit matching basis state ``s``."""
    controls = [q for q in range(n) if q != bit]
    zeros = [Gate("x", (q,)) for q in controls if not (s >> q) & 1]
    if expand:
        core = list(multicontrolled_to_cnot(u, len(controls), controls, bit, n).gates)
    else:
        core = [mcu_gate(u, controls, bit)]
    return zeros + core + zeros


def two_level_to_multicontrolled(factor: TwoLevelFactor, n_qubits: int, expand: bool = False) -> Circuit:
    """Realize a two-level factor as Gray-code flips around one C^{n-1}-U.

    With ``expand=False`` multi-controlled gates stay single custom gates;
    ``expand=True`` lowers them with ``multicontrolled_to_cnot``.
    """
    if factor.dim != 2**n_qubits:
        raise DimensionMismatch(f"factor dim {factor.dim} != 2**{n_qubits}")
    n = n_qubits
    path = _gray_path(factor.i, factor.j, n)
    # each flip block is an involution, so undoing them is reversing block order
    flips = [
        _mcx_with_polarity(s, (s ^ t).bit_length() - 1, n, X, expand)
        for s, t in zip(path[:-2], path[1:-1])
    ]
    s, t = path[-2], path[-1]
    bit = (s ^ t).bit_length() - 1
    block = factor.block
    if (s >> bit) & 1:
        # the controlled block is ordered (target=0, target=1)
        block = X @ block @ X
    core = _mcx_with_polarity(s, bit, n, block, expand)
    gates = [g for blk in flips for g in blk] + core + [g for blk in flips[::-1] for g in blk]
    return Circuit(n, tuple(gates))


# --- step 2: multi-controlled gates ------------------------------------

def multicontrolled_to_cnot(u2, n_controls: int, controls=None, target=None, num_qubits=None) -> Circuit:
    """Expand C^n-U into CNOTs and singly-controlled gates (square-root ladder).

    Controls default to qubits ``0..n-1`` and the target to qubit ``n``.
    """
    u2 = check_unitary(u2)
    if u2.shape != (2, 2):
        raise DimensionMismatch("expected a 2x2 unitary")
    controls = list(range(n_controls)) if controls is None else list(controls)
    target = n_controls if target is None else target
    nq = num_qubits or max([target, *controls]) + 1
    return Circuit(nq, tuple(_mc_gates(u2, controls, target)))


def _mc_gates(u, controls, target) -> list[Gate]:
    if len(controls) <= 1:
        return [mcu_gate(u, controls, target)]
    v = unitary_sqrt(u)
    last, rest = controls[-1], controls[:-1]
    flip = _mc_gates(X, rest, last)
    return (
        [mcu_gate(v, [last], target)]
        + flip
        + [mcu_gate(v.conj().T, [last], target)]
        + flip
        + _mc_gates(v, rest, target)
    )


# --- step 3: controlled-U with two CNOTs --------------------------------

def controlled_u_to_basic(u2, control: int = 0, target: int = 1, num_qubits: int | None = None) -> Circuit:
    """C-U as ``C; CX; B; CX; A`` on the target plus a phase on the control."""
    u2 = check_unitary(u2)
    if u2.shape != (2, 2):
        raise DimensionMismatch("expected a 2x2 unitary")
    nq = num_qubits or max(control, target) + 1
    if np.max(np.abs(u2 - X)) < _EPS:
        return Circuit(nq, (Gate("cx", (control, target)),))
    alpha, beta, gamma, delta = zyz_angles(u2)
    a = rz(beta) @ ry(gamma / 2)
    b = ry(-gamma / 2) @ rz(-(delta + beta) / 2)
    c = rz((delta - beta) / 2)
    gates: list[Gate] = []
    phase = 0.0
    for i, m in enumerate((c, b, a)):
        if i:
            gates.append(Gate("cx", (control, target)))
        g, ph = single_qubit_gate(m, target)
        phase += ph
        if g is not None:
            gates.append(g)
    if abs(np.exp(1j * alpha) - 1) > _EPS:
        gates.append(Gate("u3", (control,), (0.0, 0.0, alpha)))
    return Circuit(nq, tuple(gates), phase)


# --- full lowering --------------------------------------------------------

def lower_to_basic(circuit: Circuit) -> Circuit:
    """Rewrite every ``custom`` gate into ``u3``/``cx``.

    Singly-controlled customs use the ABC construction, 1-qubit customs become
    ``u3`` and anything else goes through the exact unitary synthesizer.
    """
    out: list[Gate] = []
    phase = circuit.global_phase
    for g in circuit.gates:
        if g.name != "custom":
            out.append(g)
            continue
        if g.num_qubits == 1:
            sg, ph = single_qubit_gate(g.matrix, g.qubits[0])
            phase += ph
            if sg is not None:
                out.append(sg)
            continue
        block = as_controlled(g)
        if block is not None:
            sub = controlled_u_to_basic(block, g.qubits[0], g.qubits[1], circuit.num_qubits)
        else:
            s = synthesize_unitary(g.matrix)
            sub = Circuit(circuit.num_qubits, tuple(x.remap(g.qubits) for x in s.gates), s.global_phase)
        out.extend(sub.gates)
        phase += sub.global_phase
    return Circuit(circuit.num_qubits, tuple(out), phase)


def synthesize_unitary(u) -> Circuit:
    """Exact ``u3``/``cx`` circuit for an n-qubit unitary (KAK for two qubits)."""
    u = check_unitary(u)
    d = u.shape[0]
    n = int(round(np.log2(d)))
    if 2**n != d:
        raise DimensionMismatch(f"dimension {d} is not a power of two")
    if n == 1:
        g, ph = single_qubit_gate(u, 0)
        return Circuit(1, (g,) if g is not None else (), ph)
    if n == 2:
        from .kak import kak_decompose

        return kak_decompose(u)
    gates: list[Gate] = []
    phase = 0.0
    for f in two_level_decompose(u)[::-1]:
        c = lower_to_basic(two_level_to_multicontrolled(f, n, expand=True))
        gates.extend(c.gates)
        phase += c.global_phase
    return Circuit(n, tuple(gates), phase)


__all__ = [
    "TwoLevelFactor", "two_level_decompose", "two_level_to_multicontrolled",
    "multicontrolled_to_cnot", "controlled_u_to_basic", "lower_to_basic",
    "synthesize_unitary", "zyz_angles", "u3_params", "controlled_matrix", "NotUnitary",
]
