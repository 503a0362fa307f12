"""Circuit intermediate representation and unitary algebra.

Conventions used everywhere in the package:

* Gate list order is temporal order. ``compose_unitary`` therefore returns
  ``G_k @ ... @ G_2 @ G_1`` for gates ``[G_1, G_2, ..., G_k]``.
* Qubits are little-endian: basis index ``i = sum(b_q << q)``, so qubit 0 is
  the least significant bit.
* A k-qubit gate matrix is indexed the same way over its own qubit list:
  ``gate.qubits[j]`` is local bit ``j``. For ``cx`` the first qubit is the
  control and the second the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    IndexOutOfRange,
    InvalidGate,
    MeasureInUnitary,
    NotUnitary,
    UnknownGate,
)

UNITARY_TOL = 1e-10
MAX_COMPOSE_QUBITS = 12

_SQ2 = 1 / np.sqrt(2)

FIXED_MATRICES: dict[str, np.ndarray] = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * np.pi / 4)]], dtype=complex),
    # local index = control + 2 * target
    "cx": np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

# name -> (qubit count, param count); custom is variable-arity
GATE_ARITY: dict[str, tuple[int, int]] = {
    "h": (1, 0), "x": (1, 0), "y": (1, 0), "z": (1, 0),
    "s": (1, 0), "sdg": (1, 0), "t": (1, 0), "tdg": (1, 0),
    "rx": (1, 1), "ry": (1, 1), "rz": (1, 1), "u3": (1, 3),
    "cx": (2, 0), "cz": (2, 0), "swap": (2, 0),
    "measure": (1, 0),
}
SUPPORTED_GATES = frozenset(GATE_ARITY) | {"custom"}


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.name not in SUPPORTED_GATES:
            raise UnknownGate(f"unsupported gate {self.name!r}", name=self.name)
        if len(set(self.qubits)) != len(self.qubits) or not self.qubits:
            raise InvalidGate(f"{self.name}: qubits must be distinct and non-empty")
        if min(self.qubits) < 0:
            raise IndexOutOfRange(f"{self.name}: negative qubit index")
        if self.name == "custom":
            if self.matrix is None:
                raise InvalidGate("custom gate needs a matrix")
            m = np.array(self.matrix, dtype=complex)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            dim = 2 ** len(self.qubits)
            if m.shape != (dim, dim):
                raise InvalidGate(f"custom gate on {len(self.qubits)} qubits needs {dim}x{dim} matrix")
            if self.params:
                raise InvalidGate("custom gate takes no params")
        else:
            nq, npar = GATE_ARITY[self.name]
            if len(self.qubits) != nq:
                raise InvalidGate(f"{self.name} acts on {nq} qubit(s), got {len(self.qubits)}")
            if len(self.params) != npar:
                raise InvalidGate(f"{self.name} takes {npar} param(s), got {len(self.params)}")
            if self.matrix is not None:
                raise InvalidGate(f"only custom gates carry a matrix")

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.name, self.qubits, self.params) != (other.name, other.qubits, other.params):
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is None and other.matrix is None
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.name, self.qubits, self.params))

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def to_matrix(self) -> np.ndarray:
        if self.name == "measure":
            raise MeasureInUnitary("measure has no unitary")
        if self.name == "custom":
            return self.matrix
        if self.name in FIXED_MATRICES:
            return FIXED_MATRICES[self.name]
        return {"rx": rx, "ry": ry, "rz": rz, "u3": u3}[self.name](*self.params)

    def remap(self, mapping) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.params, self.matrix)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over ``num_qubits`` qubits.

    ``global_phase`` (radians) multiplies the whole unitary; synthesis passes
    use it to stay exact while emitting phase-free ``u3`` gates.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        if self.num_qubits < 1:
            raise InvalidGate("circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise IndexOutOfRange(
                    f"{g.name} on qubit {max(g.qubits)} but circuit has {self.num_qubits}"
                )

    def __len__(self):
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        n = max(self.num_qubits, other.num_qubits)
        return Circuit(n, self.gates + other.gates, self.global_phase + other.global_phase)

    def append(self, *gates: Gate) -> "Circuit":
        return Circuit(self.num_qubits, self.gates + gates, self.global_phase)

    def with_gates(self, gates, global_phase: float | None = None) -> "Circuit":
        gp = self.global_phase if global_phase is None else global_phase
        return Circuit(self.num_qubits, tuple(gates), gp)

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)

    def inverse(self) -> "Circuit":
        return Circuit(
            self.num_qubits,
            tuple(Gate("custom", g.qubits, (), g.to_matrix().conj().T) for g in reversed(self.gates)),
            -self.global_phase,
        )


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) < tol)


def check_unitary(u, tol: float = 1e-9) -> np.ndarray:
    """Return ``u`` as a complex array, raising ``NotUnitary`` if it is not one."""
    arr = np.asarray(u, dtype=complex)
    if not is_unitary(arr, tol):
        raise NotUnitary("matrix is not unitary within tolerance")
    return arr


def apply_gate(tensor: np.ndarray, n: int, mat: np.ndarray, qubits) -> np.ndarray:
    """Apply ``mat`` on ``qubits`` to a ``(2**n, m)`` block of column states."""
    k = len(qubits)
    m = tensor.shape[1]
    psi = tensor.reshape((2,) * n + (m,))
    g = mat.reshape((2,) * (2 * k))
    # msb-first reshape: tensor axis n-1-q is qubit q, gate in-axis k+j is local bit k-1-j
    psi_axes = [n - 1 - qubits[k - 1 - j] for j in range(k)]
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), psi_axes))
    out = np.moveaxis(out, list(range(k)), psi_axes)
    return out.reshape(2**n, m)


def embed_gate(mat: np.ndarray, qubits, n: int) -> np.ndarray:
    return apply_gate(np.eye(2**n, dtype=complex), n, np.asarray(mat, dtype=complex), qubits)


def compose_unitary(circuit: Circuit) -> np.ndarray:
    n = circuit.num_qubits
    if n > MAX_COMPOSE_QUBITS:
        raise DimensionTooLarge(f"{n} qubits exceeds limit {MAX_COMPOSE_QUBITS}")
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        u = apply_gate(u, n, g.to_matrix(), g.qubits)
    if circuit.global_phase:
        u = u * np.exp(1j * circuit.global_phase)
    return u


def _phase_spread(eigvals: np.ndarray) -> float:
    """Width of the smallest arc containing all unit-circle points."""
    ang = np.sort(np.mod(np.angle(eigvals), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    return 2 * np.pi - float(np.max(gaps))


def distance(u, v) -> float:
    """Spectral-norm distance between ``u`` and ``v`` minimized over global phase.

    For unitaries this is exact: the eigenphases of ``v^† u`` fit in an arc of
    width ``w`` and the optimum is ``2 sin(w / 4)``. Non-unitary inputs fall
    back to a phase scan seeded at ``arg tr(v^† u)``.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    w = v.conj().T @ u
    if is_unitary(w, 1e-8):
        return float(2 * np.sin(_phase_spread(np.linalg.eigvals(w)) / 4))
    phi0 = np.angle(np.trace(w))
    grid = phi0 + np.linspace(-np.pi, np.pi, 721)
    return float(min(np.linalg.norm(u - np.exp(1j * p) * v, 2) for p in grid))


def metrics(circuit: Circuit) -> dict:
    level = [0] * circuit.num_qubits
    for g in circuit.gates:
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
    return {
        "depth": max(level, default=0),
        "gate_count": len(circuit.gates),
        "two_qubit_count": sum(1 for g in circuit.gates if g.num_qubits == 2),
    }


class GateBasis:
    """Finite, inverse-closed set of named single-qubit generators."""

    def __init__(self, gates: dict[str, np.ndarray]):
        from .errors import BasisNotInverseClosed

        self.names = list(gates)
        self.matrices = {k: np.asarray(m, dtype=complex) for k, m in gates.items()}
        if not self.names:
            raise BasisNotInverseClosed("basis is empty")
        self.inverse_of: dict[str, str] = {}
        for name, m in self.matrices.items():
            check_unitary(m, UNITARY_TOL)
            if m.shape != (2, 2):
                raise DimensionMismatch("basis generators must be 2x2")
            adj = m.conj().T
            for other, m2 in self.matrices.items():
                if np.max(np.abs(m2 - adj)) < UNITARY_TOL:
                    self.inverse_of[name] = other
                    break
            else:
                raise BasisNotInverseClosed(f"no inverse for {name!r} in basis")

    @classmethod
    def from_names(cls, names) -> "GateBasis":
        mats = {}
        for n in names:
            if n not in FIXED_MATRICES or FIXED_MATRICES[n].shape != (2, 2):
                raise UnknownGate(f"{n!r} is not a fixed single-qubit gate", name=n)
            mats[n] = FIXED_MATRICES[n]
        return cls(mats)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for name in self.names:
            h.update(name.encode())
            h.update(np.round(self.matrices[name], 12).tobytes())
        return h.hexdigest()[:16]

    def compose(self, seq) -> np.ndarray:
        """Unitary of a name sequence applied left to right in time."""
        u = np.eye(2, dtype=complex)
        for name in seq:
            u = self.matrices[name] @ u
        return u


DEFAULT_BASIS_NAMES = ("h", "t", "tdg")
