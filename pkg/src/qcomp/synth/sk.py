"""Solovay-Kitaev approximation of single-qubit unitaries over a finite basis.

A precompiled net holds every distinct product of at most ``l0`` basis gates
(shortest word kept per SU(2) element, identified up to global phase). The
recursion refines an approximation ``U_{n-1}`` by writing the residual
``U U_{n-1}^dag`` as a balanced group commutator ``V W V^dag W^dag`` and
approximating ``V`` and ``W`` one level down.
"""

from __future__ import annotations

import hashlib
import io
import struct
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..circuit import GateBasis, distance
from ..errors import DeltaTooFar, EmptyNet, InputError, NetTooCoarse

I2 = np.eye(2, dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

PRUNE_DECIMALS = 8
LINEAR_SCAN_LIMIT = 5000
# Empirical constant of the recursion eps_n <= C * eps_{n-1}^{3/2} for this
# commutator construction and distance; convergence needs eps0 < 1 / C**2.
COMMUTATOR_CONSTANT = 1.75
CACHE_MAGIC = b"QCSKNET\0"
CACHE_VERSION = 1


def to_su2(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return u / np.sqrt(np.linalg.det(u))


def quaternion(u) -> np.ndarray:
    """Unit 4-vector of ``u`` modulo global phase, sign-canonicalized."""
    s = to_su2(u)
    v = np.array([s[0, 0].real, s[0, 0].imag, s[1, 0].real, s[1, 0].imag])
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def _quaternions(mats: np.ndarray) -> np.ndarray:
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    s = mats / np.sqrt(det)[:, None, None]
    q = np.stack([s[:, 0, 0].real, s[:, 0, 0].imag, s[:, 1, 0].real, s[:, 1, 0].imag], axis=1)
    nz = np.abs(q) > 1e-12
    first = np.argmax(nz, axis=1)
    sign = np.where(q[np.arange(len(q)), first] < 0, -1.0, 1.0)
    return q * sign[:, None]


def rotation(theta: float, axis) -> np.ndarray:
    """``exp(-i theta/2 n.sigma)``."""
    n = np.asarray(axis, dtype=float)
    gen = n[0] * _PAULI[0] + n[1] * _PAULI[1] + n[2] * _PAULI[2]
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * gen


def axis_angle(u) -> tuple[float, np.ndarray]:
    """Rotation angle in [0, pi] and unit axis of ``u`` (global phase ignored)."""
    s = to_su2(u)
    if s[0, 0].real < 0:
        s = -s
    c = float(np.clip(s[0, 0].real, -1.0, 1.0))
    vec = np.array([-s[1, 0].imag, s[1, 0].real, -s[0, 0].imag])
    norm = np.linalg.norm(vec)
    theta = 2 * float(np.arctan2(norm, c))
    if norm < 1e-15:
        return 0.0, np.array([0.0, 0.0, 1.0])
    return theta, vec / norm


def group_commutator_factor(delta) -> tuple[np.ndarray, np.ndarray]:
    """Balanced ``V, W`` with ``V W V^dag W^dag = delta`` up to global phase."""
    if distance(delta, I2) >= 0.5:
        raise DeltaTooFar("residual too far from identity for a balanced commutator")
    theta, n = axis_angle(delta)
    if theta < 1e-15:
        return I2.copy(), I2.copy()
    # sin(theta/2) = 2 x sqrt(1 - x^2) with x = sin^2(phi/2)
    s = np.sin(theta / 2)
    x = np.sqrt((1 - np.sqrt(1 - s * s)) / 2)
    phi = 2 * np.arcsin(np.sqrt(x))
    v0 = rotation(phi, (1.0, 0.0, 0.0))
    w0 = rotation(phi, (0.0, 1.0, 0.0))
    _, m = axis_angle(v0 @ w0 @ v0.conj().T @ w0.conj().T)
    k = np.cross(m, n)
    kn = np.linalg.norm(k)
    ang = float(np.arccos(np.clip(np.dot(m, n), -1.0, 1.0)))
    if kn < 1e-12:
        if np.dot(m, n) > 0:
            sm = I2
        else:
            perp = np.cross(m, (1.0, 0.0, 0.0) if abs(m[0]) < 0.9 else (0.0, 1.0, 0.0))
            sm = rotation(np.pi, perp / np.linalg.norm(perp))
    else:
        sm = rotation(ang, k / kn)
    return sm @ v0 @ sm.conj().T, sm @ w0 @ sm.conj().T


@dataclass
class SKNet:
    basis: GateBasis
    l0: int
    sequences: list[tuple[str, ...]]
    unitaries: np.ndarray
    epsilon0: float = float("nan")
    precompile_seconds: float = 0.0
    _quats: np.ndarray = field(init=False, repr=False)
    _tree: cKDTree | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if not self.sequences:
            raise EmptyNet("net has no entries")
        self._quats = _quaternions(self.unitaries)
        if len(self.sequences) >= LINEAR_SCAN_LIMIT:
            self._tree = cKDTree(np.vstack([self._quats, -self._quats]))

    def __len__(self):
        return len(self.sequences)

    def nearest(self, u) -> int:
        q = quaternion(u)
        if self._tree is None:
            return int(np.argmax(np.abs(self._quats @ q)))
        _, idx = self._tree.query(q)
        return int(idx) % len(self.sequences)

    def probe_radius(self, samples: int = 1000, seed: int = 0) -> float:
        """Largest nearest-entry distance over Haar-random probes."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            g = rng.normal(size=4)
            g /= np.linalg.norm(g)
            u = np.array([[g[0] + 1j * g[1], -g[2] + 1j * g[3]], [g[2] + 1j * g[3], g[0] - 1j * g[1]]])
            worst = max(worst, distance(u, self.unitaries[self.nearest(u)]))
        return worst

    # cache file: magic, version, basis fingerprint, l0, eps0, then entries
    def dumps(self) -> bytes:
        buf = io.BytesIO()
        buf.write(CACHE_MAGIC)
        buf.write(struct.pack("<H16sHdI", CACHE_VERSION, self.basis.fingerprint().encode(),
                              self.l0, self.epsilon0, len(self.sequences)))
        names = self.basis.names
        for seq in self.sequences:
            buf.write(struct.pack("<H", len(seq)))
            buf.write(bytes(names.index(g) for g in seq))
        buf.write(np.ascontiguousarray(self.unitaries, dtype="<c16").tobytes())
        return buf.getvalue()

    @classmethod
    def loads(cls, data: bytes, basis: GateBasis) -> "SKNet":
        if not data.startswith(CACHE_MAGIC):
            raise InputError("not a net cache file")
        off = len(CACHE_MAGIC)
        version, fp, l0, eps0, count = struct.unpack_from("<H16sHdI", data, off)
        off += struct.calcsize("<H16sHdI")
        if version != CACHE_VERSION:
            raise InputError(f"net cache version {version} unsupported")
        if fp.decode() != basis.fingerprint():
            raise InputError("net cache was built for a different basis")
        seqs = []
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", data, off)
            off += 2
            seqs.append(tuple(basis.names[b] for b in data[off:off + ln]))
            off += ln
        mats = np.frombuffer(data, dtype="<c16", count=4 * count, offset=off).reshape(count, 2, 2)
        return cls(basis, l0, seqs, mats.astype(complex), eps0)


def sk_precompile(basis: GateBasis, l0: int, probes: int = 1000, seed: int = 0) -> SKNet:
    """Enumerate all words up to length ``l0``, keeping the shortest per element."""
    if not 0 <= l0 <= 16:
        raise InputError("l0 must be in [0, 16]")
    start = time.perf_counter()
    mats = np.stack([basis.matrices[n] for n in basis.names])
    seen: set[tuple] = set()
    seqs: list[tuple[str, ...]] = [()]
    units = [I2]
    seen.add(tuple(np.round(quaternion(I2), PRUNE_DECIMALS)))
    frontier_seqs: list[tuple[str, ...]] = [()]
    frontier = I2[None]
    for _ in range(l0):
        cand = np.einsum("gij,fjk->fgik", mats, frontier).reshape(-1, 2, 2)
        keys = np.round(_quaternions(cand), PRUNE_DECIMALS)
        new_seqs, new_mats = [], []
        for idx, key in enumerate(map(tuple, keys)):
            if key in seen:
                continue
            seen.add(key)
            f, g = divmod(idx, len(basis.names))
            new_seqs.append(frontier_seqs[f] + (basis.names[g],))
            new_mats.append(cand[idx])
        if not new_seqs:
            break
        seqs += new_seqs
        units += new_mats
        frontier_seqs = new_seqs
        frontier = np.stack(new_mats)
    net = SKNet(basis, l0, seqs, np.stack(units))
    net.epsilon0 = net.probe_radius(probes, seed) if probes else float("nan")
    net.precompile_seconds = time.perf_counter() - start
    return net


def sk_basic_approx(net: SKNet, u) -> tuple[str, ...]:
    if net is None or len(net) == 0:
        raise EmptyNet("net has no entries")
    return net.sequences[net.nearest(u)]


def inverse_sequence(seq, basis: GateBasis) -> tuple[str, ...]:
    return tuple(basis.inverse_of[g] for g in reversed(seq))


def _cancel(seq, basis: GateBasis) -> tuple[str, ...]:
    out: list[str] = []
    for g in seq:
        if out and basis.inverse_of[out[-1]] == g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def su2_distance(u, v) -> float:
    """``distance`` specialised to 2x2 unitaries: ``sqrt(2 - 2 |<q_u, q_v>|)``."""
    return float(np.sqrt(max(0.0, 2 - 2 * abs(quaternion(u) @ quaternion(v)))))


def commutator_frames(delta, frames: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Balanced pairs for ``delta``, rotated about its axis by ``2 pi j / frames``.

    Every pair has the same commutator; they differ only in how well the net
    happens to approximate ``V`` and ``W``.
    """
    v, w = group_commutator_factor(delta)
    _, n = axis_angle(delta)
    out = []
    for j in range(frames):
        r = rotation(2 * np.pi * j / frames, n)
        out.append((r @ v @ r.conj().T, r @ w @ r.conj().T))
    return out


def sk_compile(u, net: SKNet, depth: int, frames: int = 4) -> tuple[str, ...]:
    """Basis word (temporal order) approximating ``u`` after ``depth`` refinements.

    Each refinement tries ``frames`` commutator orientations and keeps the
    best; a refinement that would increase the error is discarded, so the
    achieved distance never grows with depth.
    """
    if depth < 0:
        raise InputError("depth must be >= 0")
    if frames < 1:
        raise InputError("frames must be >= 1")
    if depth > 0 and not net.epsilon0 < 1 / COMMUTATOR_CONSTANT**2:
        raise NetTooCoarse(
            f"net radius {net.epsilon0:.3g} exceeds {1 / COMMUTATOR_CONSTANT**2:.3g}; raise l0",
            epsilon0=net.epsilon0,
        )
    seq, _ = _sk(np.asarray(u, dtype=complex), net, depth, frames)
    return seq


def _sk(u, net: SKNet, n: int, frames: int) -> tuple[tuple[str, ...], np.ndarray]:
    if n == 0:
        i = net.nearest(u)
        return net.sequences[i], net.unitaries[i]
    prev_seq, prev = _sk(u, net, n - 1, frames)
    residual = u @ prev.conj().T
    best = (su2_distance(prev, u), prev_seq, prev)
    if distance(residual, I2) >= 0.5:
        return prev_seq, prev
    basis = net.basis
    for v, w in commutator_frames(residual, frames):
        v_seq, v_mat = _sk(v, net, n - 1, frames)
        w_seq, w_mat = _sk(w, net, n - 1, frames)
        mat = v_mat @ w_mat @ v_mat.conj().T @ w_mat.conj().T @ prev
        d = su2_distance(mat, u)
        if d < best[0]:
            seq = prev_seq + inverse_sequence(w_seq, basis) + inverse_sequence(v_seq, basis) + w_seq + v_seq
            best = (d, seq, mat)
    return _cancel(best[1], basis), best[2]


def sequence_unitary(seq, basis: GateBasis) -> np.ndarray:
    return basis.compose(seq)


def cache_key(basis: GateBasis, l0: int) -> str:
    return hashlib.sha256(f"{basis.fingerprint()}:{l0}:v{CACHE_VERSION}".encode()).hexdigest()[:16]
