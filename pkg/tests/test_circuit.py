import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from gen import random_circuit
from qcomp.circuit import (
    FIXED_MATRICES,
    Circuit,
    Gate,
    GateBasis,
    compose_unitary,
    distance,
    is_unitary,
    metrics,
)
from qcomp.errors import (
    BasisNotInverseClosed,
    DimensionMismatch,
    DimensionTooLarge,
    IndexOutOfRange,
    InvalidGate,
    MeasureInUnitary,
    QasmSyntaxError,
    UnknownGate,
)
from qcomp.qasm import emit_qasm, parse_qasm


def grid_distance(u, v, points=20001):
    """Oracle: brute-force phase scan of the spectral norm."""
    best = np.inf
    for phi in np.linspace(0, 2 * np.pi, points):
        best = min(best, np.linalg.norm(u - np.exp(1j * phi) * v, 2))
    return best


def test_empty_circuit_is_identity():
    assert np.allclose(compose_unitary(Circuit(2)), np.eye(4))


def test_hh_is_identity():
    c = Circuit(1, (Gate("h", (0,)), Gate("h", (0,))))
    assert np.allclose(compose_unitary(c), np.eye(2), atol=1e-12)


def test_cnot_matches_hand_built_matrix():
    # little-endian: basis index = q0 + 2*q1, control q0 flips q1
    want = np.zeros((4, 4))
    for idx in range(4):
        q0, q1 = idx & 1, idx >> 1
        want[q0 + 2 * (q1 ^ q0), idx] = 1
    got = compose_unitary(Circuit(2, (Gate("cx", (0, 1)),)))
    assert np.max(np.abs(got - want)) < 1e-12


def test_temporal_order():
    c = Circuit(1, (Gate("h", (0,)), Gate("t", (0,))))
    assert np.allclose(compose_unitary(c), FIXED_MATRICES["t"] @ FIXED_MATRICES["h"])


def test_global_phase_is_applied():
    c = Circuit(1, (Gate("x", (0,)),), 0.5)
    assert np.allclose(compose_unitary(c), np.exp(0.5j) * FIXED_MATRICES["x"])


def test_compose_rejects_measure_and_large():
    with pytest.raises(MeasureInUnitary):
        compose_unitary(Circuit(1, (Gate("measure", (0,)),)))
    with pytest.raises(DimensionTooLarge):
        compose_unitary(Circuit(13))


def test_gate_validation():
    with pytest.raises(InvalidGate):
        Gate("cx", (0, 0))
    with pytest.raises(InvalidGate):
        Gate("rz", (0,))
    with pytest.raises(UnknownGate):
        Gate("ccx", (0, 1, 2))
    with pytest.raises(InvalidGate):
        Gate("custom", (0,), (), np.eye(4))
    with pytest.raises(IndexOutOfRange):
        Circuit(2, (Gate("cx", (0, 3)),))


def test_distance_examples():
    rng = np.random.default_rng(0)
    u = unitary_group.rvs(4, random_state=rng)
    assert distance(u, u) < 1e-12
    assert distance(u, np.exp(1j * np.pi / 3) * u) < 1e-7
    d = distance(np.eye(2), FIXED_MATRICES["x"])
    assert d == pytest.approx(np.sqrt(2), abs=1e-12)
    assert d == pytest.approx(grid_distance(np.eye(2), FIXED_MATRICES["x"]), abs=1e-6)
    with pytest.raises(DimensionMismatch):
        distance(np.eye(2), np.eye(4))


def test_distance_matches_grid_oracle_on_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(10):
        u = unitary_group.rvs(2, random_state=rng)
        v = unitary_group.rvs(2, random_state=rng)
        assert distance(u, v) == pytest.approx(grid_distance(u, v, 4001), abs=2e-3)
        assert distance(u, v) <= grid_distance(u, v, 4001) + 1e-12


def test_distance_pseudometric():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b, c = (unitary_group.rvs(2, random_state=rng) for _ in range(3))
        assert distance(a, b) == pytest.approx(distance(b, a), abs=1e-12)
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12


def test_metrics_examples():
    assert metrics(Circuit(1)) == {"depth": 0, "gate_count": 0, "two_qubit_count": 0}
    c = Circuit(2, (Gate("h", (0,)), Gate("h", (1,)), Gate("cx", (0, 1))))
    assert metrics(c) == {"depth": 2, "gate_count": 3, "two_qubit_count": 1}
    c = Circuit(1, tuple(Gate("h", (0,)) for _ in range(5)))
    assert metrics(c) == {"depth": 5, "gate_count": 5, "two_qubit_count": 0}


def test_gate_basis_requires_inverse_closure():
    GateBasis.from_names(("h", "t", "tdg"))
    with pytest.raises(BasisNotInverseClosed):
        GateBasis.from_names(("h", "t"))


def test_parse_examples():
    c = parse_qasm("qreg q[1]; h q[0];")
    assert c == Circuit(1, (Gate("h", (0,)),))
    with pytest.raises(IndexOutOfRange):
        parse_qasm("qreg q[2]; cx q[0],q[3];")
    with pytest.raises(UnknownGate):
        parse_qasm("qreg q[2]; foo q[0];")
    with pytest.raises(QasmSyntaxError) as info:
        parse_qasm("qreg q[2];\nh q[0]\n")
    assert info.value.line == 2


def test_parse_expressions_and_phase():
    c = parse_qasm("qreg q[1];\n// @global_phase 0.25\nrz(pi/2) q[0];\nu3(-pi, 2*pi/3, 0.1) q[0];")
    assert c.global_phase == 0.25
    assert c.gates[0].params == (np.pi / 2,)
    assert c.gates[1].params == pytest.approx((-np.pi, 2 * np.pi / 3, 0.1))


def test_emit_normalizes_three_gate_program():
    src = "qreg q[2];\n  h q[0] ;\ncx q[0], q[1];\nrz(0.5) q[1];\n"
    out = emit_qasm(parse_qasm(src))
    assert out == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\nh q[0];\ncx q[0],q[1];\nrz(0.5) q[1];\n'
    assert emit_qasm(parse_qasm(out)) == out


def test_emit_refuses_custom():
    with pytest.raises(UnknownGate):
        emit_qasm(Circuit(1, (Gate("custom", (0,), (), np.eye(2)),)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 30), st.integers(0, 2**32 - 1), st.booleans())
def test_qasm_round_trip(n, length, seed, measure):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, length)
    if measure:
        c = c.append(Gate("measure", (int(rng.integers(n)),)))
    back = parse_qasm(emit_qasm(c))
    assert back == c


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 200), st.integers(0, 2**32 - 1))
def test_compose_stays_unitary(n, length, seed):
    c = random_circuit(np.random.default_rng(seed), n, length)
    u = compose_unitary(c)
    assert is_unitary(u, 1e-9)
    m = metrics(c)
    assert m["depth"] <= m["gate_count"]
