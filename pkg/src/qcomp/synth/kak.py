"""Two-qubit synthesis through the KAK (magic basis) decomposition.

Any ``U`` in U(4) factors as ``(A1 x B1) exp(i(cx XX + cy YY + cz ZZ)) (A2 x B2)``
up to phase. After folding each interaction coefficient into
``(-pi/4, pi/4]`` the number of non-zero coefficients fixes the CNOT cost:
none needs 0, a lone ``pi/4`` needs 1, at most two need 2, else 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import FIXED_MATRICES, Circuit, Gate, check_unitary, compose_unitary, rx, ry, rz
from ..errors import DimensionMismatch, NumericError
from .decompose import single_qubit_gate

_PAULI = {
    "x": FIXED_MATRICES["x"],
    "y": FIXED_MATRICES["y"],
    "z": FIXED_MATRICES["z"],
}
_H = FIXED_MATRICES["h"]
_S = FIXED_MATRICES["s"]
_SDG = FIXED_MATRICES["sdg"]
_I2 = np.eye(2, dtype=complex)

MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)

_ZERO_TOL = 1e-9


def _clifford_words(depth: int = 3) -> list[np.ndarray]:
    """Products of H and S up to ``depth`` letters; enough to permute X, Y, Z."""
    out = [_I2]
    frontier = [_I2]
    for _ in range(depth):
        frontier = [g @ m for m in frontier for g in (_H, _S)]
        out.extend(frontier)
    return out


# single-qubit Cliffords used to rotate interaction axes; Q P Q^dag = +-P'
_CLIFFORDS = _clifford_words()


@dataclass
class KAK:
    """``u = e^{i phase} kron(a1, b1) Can(coeffs) kron(a2, b2)`` with ``a*`` on qubit 1."""

    a1: np.ndarray
    b1: np.ndarray
    coeffs: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    phase: float

    def matrix(self) -> np.ndarray:
        return np.exp(1j * self.phase) * np.kron(self.a1, self.b1) @ canonical_gate(*self.coeffs) @ np.kron(self.a2, self.b2)


def canonical_gate(cx: float, cy: float, cz: float) -> np.ndarray:
    """``exp(i (cx XX + cy YY + cz ZZ))``, diagonal in the magic basis."""
    xx = np.kron(_PAULI["x"], _PAULI["x"])
    yy = np.kron(_PAULI["y"], _PAULI["y"])
    zz = np.kron(_PAULI["z"], _PAULI["z"])
    diag_xx = np.real(np.diag(MAGIC.conj().T @ xx @ MAGIC))
    diag_yy = np.real(np.diag(MAGIC.conj().T @ yy @ MAGIC))
    diag_zz = np.real(np.diag(MAGIC.conj().T @ zz @ MAGIC))
    d = np.exp(1j * (cx * diag_xx + cy * diag_yy + cz * diag_zz))
    return MAGIC @ np.diag(d) @ MAGIC.conj().T


def _split_local(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``k = kron(a, b)`` with ``det(a) = det(b) = 1`` (up to sign)."""
    r = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0, :].reshape(2, 2)
    da = np.sqrt(np.linalg.det(a))
    return a / da, b * da


def _orthogonal_diagonalizer(m: np.ndarray) -> np.ndarray:
    """Real orthogonal ``P`` (det +1) with ``P.T @ m @ P`` diagonal, ``m`` symmetric unitary."""
    re, im = m.real, m.imag
    for t in (0.5053, 1.2271, 2.9113, 0.1337, 4.0511):
        _, p = np.linalg.eigh(np.cos(t) * re + np.sin(t) * im)
        d = p.T @ m @ p
        if np.max(np.abs(d - np.diag(np.diag(d)))) < 1e-10:
            if np.linalg.det(p) < 0:
                p[:, 0] = -p[:, 0]
            return p
    raise NumericError("failed to diagonalize the magic-basis Gram matrix")


def kak(u) -> KAK:
    u = check_unitary(u)
    if u.shape != (4, 4):
        raise DimensionMismatch("KAK needs a 4x4 unitary")
    phase = float(np.angle(np.linalg.det(u))) / 4
    us = u * np.exp(-1j * phase)
    um = MAGIC.conj().T @ us @ MAGIC
    p = _orthogonal_diagonalizer(um.T @ um)
    theta = np.angle(np.diag(p.T @ um.T @ um @ p)) / 2
    if np.real(np.prod(np.exp(1j * theta))) < 0:
        theta[0] += np.pi
    k1 = um @ p @ np.diag(np.exp(-1j * theta))
    left = MAGIC @ np.real(k1) @ MAGIC.conj().T
    right = MAGIC @ p.T @ MAGIC.conj().T
    gen = MAGIC @ np.diag(1j * theta) @ MAGIC.conj().T
    coeffs = np.array(
        [np.real(np.trace(gen @ np.kron(_PAULI[k], _PAULI[k])) / 4j) for k in "xyz"]
    )
    a1, b1 = _split_local(left)
    a2, b2 = _split_local(right)
    out = KAK(a1, b1, coeffs, a2, b2, 0.0)
    w = out.matrix()
    out.phase = float(np.angle(np.trace(w.conj().T @ u)))
    return out


def _fold(c: float) -> tuple[float, int]:
    """Shift ``c`` by multiples of pi/2 into (-pi/4, pi/4]; returns (folded, shift count)."""
    k = int(np.round(c / (np.pi / 2)))
    f = c - k * np.pi / 2
    if f <= -np.pi / 4 + _ZERO_TOL:
        f += np.pi / 2
        k -= 1
    return f, k


def _find_clifford(sources: list[str], targets: list[str]) -> np.ndarray:
    for q in _CLIFFORDS:
        ok = True
        for s, t in zip(sources, targets):
            m = q @ _PAULI[s] @ q.conj().T
            if not (np.allclose(m, _PAULI[t]) or np.allclose(m, -_PAULI[t])):
                ok = False
                break
        if ok:
            return q
    raise AssertionError(f"no Clifford maps {sources} to {targets}")


class _Builder:
    """Collects single-qubit matrices per qubit and flushes them at each CNOT."""

    def __init__(self):
        self.gates: list[Gate] = []
        self.pending = {0: _I2.copy(), 1: _I2.copy()}

    def local(self, qubit: int, m: np.ndarray):
        self.pending[qubit] = np.asarray(m, dtype=complex) @ self.pending[qubit]

    def both(self, m: np.ndarray):
        self.local(0, m)
        self.local(1, m)

    def _flush(self, qubit: int):
        g, _ = single_qubit_gate(self.pending[qubit], qubit)
        if g is not None:
            self.gates.append(g)
        self.pending[qubit] = _I2.copy()

    def cx(self, control: int, target: int):
        self._flush(0)
        self._flush(1)
        self.gates.append(Gate("cx", (control, target)))

    def finish(self) -> list[Gate]:
        self._flush(0)
        self._flush(1)
        return self.gates


def kak_decompose(u) -> Circuit:
    """Circuit with at most 3 CNOTs and 8 ``u3`` gates equal to ``u`` (global phase kept)."""
    u = check_unitary(u)
    dec = kak(u)
    folded = {}
    shifts = {}
    for name, c in zip("xyz", dec.coeffs):
        folded[name], shifts[name] = _fold(float(c))
    nonzero = [k for k in "xyz" if abs(folded[k]) > _ZERO_TOL]

    # kron(a, b) puts ``a`` on qubit 1 (most significant)
    b = _Builder()
    b.local(1, dec.a2)
    b.local(0, dec.b2)
    if not nonzero:
        pass
    elif len(nonzero) == 1 and abs(folded[nonzero[0]] - np.pi / 4) < 1e-8:
        q = _find_clifford(nonzero, ["z"])
        # exp(i pi/4 ZZ) = e^{i pi/4} CZ (Sdg x Sdg)
        b.both(q)
        b.both(_SDG)
        b.local(1, _H)
        b.cx(0, 1)
        b.local(1, _H)
        b.both(q.conj().T)
    elif len(nonzero) <= 2:
        srcs = nonzero if len(nonzero) == 2 else nonzero + [k for k in "xyz" if k not in nonzero][:1]
        q = _find_clifford(srcs, ["x", "z"])
        ax, az = folded[srcs[0]], folded[srcs[1]]
        # CX (Rx(t1) x Rz(t2)) CX = exp(-i t1/2 XX) exp(-i t2/2 ZZ)
        b.both(q)
        b.cx(0, 1)
        b.local(0, rx(-2 * ax))
        b.local(1, rz(-2 * az))
        b.cx(0, 1)
        b.both(q.conj().T)
    else:
        al, be, ga = folded["x"], folded["y"], folded["z"]
        b.local(0, rz(np.pi / 2))
        b.cx(0, 1)
        b.local(1, rz(-2 * ga + np.pi / 2))
        b.local(0, ry(np.pi / 2 - 2 * al))
        b.cx(1, 0)
        b.local(0, ry(2 * be - np.pi / 2))
        b.cx(0, 1)
        b.local(1, rz(-np.pi / 2))
    for name in "xyz":
        if shifts[name] % 4:
            p = np.linalg.matrix_power(_PAULI[name], shifts[name] % 4)
            b.both(p)
    b.local(1, dec.a1)
    b.local(0, dec.b1)
    circ = Circuit(2, tuple(b.finish()))
    w = compose_unitary(circ)
    phase = float(np.angle(np.trace(w.conj().T @ u)))
    circ = circ.with_gates(circ.gates, phase)
    if np.max(np.abs(compose_unitary(circ) - u)) > 1e-8:
        raise NumericError("KAK reconstruction failed")
    return circ


def cnot_count_lower_bound(u) -> int:
    """CNOTs ``kak_decompose`` needs for ``u`` (the minimum over all circuits)."""
    dec = kak(u)
    folded = [_fold(float(c))[0] for c in dec.coeffs]
    nz = [f for f in folded if abs(f) > _ZERO_TOL]
    if not nz:
        return 0
    if len(nz) == 1 and abs(nz[0] - np.pi / 4) < 1e-8:
        return 1
    return 2 if len(nz) <= 2 else 3
