import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_circuit, topologies
from qcomp.circuit import Circuit, Gate, compose_unitary
from qcomp.errors import DisconnectedRegion, EdgeAbsentBothDirections, TooFewPhysicalQubits
from qcomp.route import (
    CouplingGraph,
    Layout,
    choose_layout,
    fix_directions,
    route_cascade,
    route_lookahead,
    swap_count,
    verify_routed,
)

PATH3 = CouplingGraph.line(3)


def cx(a, b):
    return Gate("cx", (a, b))


def test_coupling_graph_json_round_trip():
    g = CouplingGraph.from_json({"nodes": 3, "edges": [[0, 1, "uni"], [1, 2, "sym"]]})
    assert g.allows_cx(0, 1) and not g.allows_cx(1, 0)
    assert g.allows_cx(1, 2) and g.allows_cx(2, 1)
    assert CouplingGraph.from_json(g.to_json()).edges == g.edges


def test_opposite_uni_edges_merge():
    g = CouplingGraph(2, {(0, 1): "uni", (1, 0): "uni"})
    assert g.allows_cx(0, 1) and g.allows_cx(1, 0)


def test_trivial_layout():
    c = Circuit(3, (cx(0, 2),))
    assert choose_layout(c, CouplingGraph.line(5), "trivial").mapping == (0, 1, 2)


def test_layout_too_small():
    with pytest.raises(TooFewPhysicalQubits):
        choose_layout(Circuit(4), PATH3, "trivial")


def test_dense_layout_on_path_picks_adjacent_pair():
    c = Circuit(2, (cx(0, 1),))
    for seed in range(10):
        a, b = choose_layout(c, CouplingGraph.line(5), "dense", seed).mapping
        assert abs(a - b) == 1


def _internal_edges(graph, nodes):
    return sum(1 for a, b in itertools.combinations(nodes, 2) if graph.adjacent(a, b))


def test_dense_layout_on_star_includes_hub():
    star = CouplingGraph.from_edges(5, [(0, i) for i in range(1, 5)])
    c = Circuit(3, (cx(0, 1), cx(1, 2)))
    best = max(_internal_edges(star, s) for s in itertools.combinations(range(5), 3))
    for seed in range(10):
        lay = choose_layout(c, star, "dense", seed)
        assert 0 in lay.mapping
        assert _internal_edges(star, lay.mapping) == best


def test_cascade_lnn_unchanged():
    c = Circuit(3, (cx(0, 1), cx(1, 2), Gate("h", (0,))))
    assert route_cascade(c, PATH3, Layout.trivial(3)) == c


def test_cascade_path_example():
    c = Circuit(3, (cx(0, 2),))
    out = route_cascade(c, PATH3, Layout.trivial(3))
    assert out.gates == (Gate("swap", (0, 1)), cx(1, 2), Gate("swap", (0, 1)))
    assert verify_routed(c, out, Layout.trivial(3))


def test_lookahead_two_cnots_one_swap():
    c = Circuit(3, (cx(0, 2), cx(0, 2)))
    lay = Layout.trivial(3)
    look, final = route_lookahead(c, PATH3, lay, window=4, seed=0)
    assert swap_count(c, look) == 1
    assert swap_count(c, route_cascade(c, PATH3, lay)) == 4
    assert verify_routed(c, look, lay, final)
    assert final.mapping != lay.mapping


def test_lookahead_lnn_zero_swaps():
    c = Circuit(3, (cx(0, 1), cx(2, 1)))
    look, final = route_lookahead(c, PATH3, Layout.trivial(3))
    assert swap_count(c, look) == 0 and final == Layout.trivial(3)


def test_disconnected_region():
    g = CouplingGraph.from_edges(4, [(0, 1), (2, 3)])
    c = Circuit(4, (cx(0, 3),))
    with pytest.raises(DisconnectedRegion):
        route_cascade(c, g, Layout.trivial(4))
    with pytest.raises(DisconnectedRegion):
        route_lookahead(c, g, Layout.trivial(4))


def test_fix_directions_examples():
    g = CouplingGraph(2, {(1, 0): "uni"})
    ok = Circuit(2, (cx(1, 0),))
    assert fix_directions(ok, g) == ok
    bad = Circuit(2, (cx(0, 1),))
    fixed = fix_directions(bad, g)
    assert [x.name for x in fixed.gates].count("h") == 4
    assert fixed.count("cx") == 1 and fixed.gates[2] == cx(1, 0)
    assert np.max(np.abs(compose_unitary(fixed) - compose_unitary(bad))) < 1e-10
    sym = CouplingGraph.line(2)
    for pair in ((0, 1), (1, 0)):
        cz = Circuit(2, (Gate("cz", pair),))
        assert fix_directions(cz, sym) == cz
        assert fix_directions(cz, g) == cz


def test_fix_directions_swap_on_uni_edge():
    g = CouplingGraph(2, {(0, 1): "uni"})
    c = Circuit(2, (Gate("swap", (0, 1)),))
    fixed = fix_directions(c, g)
    assert all(x.name != "swap" for x in fixed.gates)
    assert all(g.allows_cx(*x.qubits) for x in fixed.gates if x.name == "cx")
    assert np.max(np.abs(compose_unitary(fixed) - compose_unitary(c))) < 1e-10


def test_fix_directions_missing_edge():
    with pytest.raises(EdgeAbsentBothDirections):
        fix_directions(Circuit(3, (cx(0, 2),)), PATH3)


def test_verify_identity_and_mutation():
    rng = np.random.default_rng(0)
    c = random_circuit(rng, 3, 10)
    lay = Layout.trivial(3)
    assert verify_routed(c, c, lay)
    src = Circuit(3, (cx(0, 2), Gate("h", (0,))))
    routed = route_cascade(src, PATH3, lay)
    assert verify_routed(src, routed, lay)
    mutated = routed.with_gates(routed.gates[:-2] + routed.gates[-1:])
    assert routed.gates[-2].name == "swap"
    assert not verify_routed(src, mutated, lay)


def test_cascade_verifies_on_random_circuits():
    rng = np.random.default_rng(1)
    for i in range(100):
        n = int(rng.integers(2, 6))
        c = random_circuit(rng, n, 15)
        g = topologies(n)["line"]
        out = route_cascade(c, g, Layout.trivial(n))
        assert verify_routed(c, out, Layout.trivial(n))
        assert all(g.adjacent(*x.qubits) for x in out.gates if x.num_qubits == 2)


def test_measure_is_routing_transparent():
    c = Circuit(3, (cx(0, 2), Gate("measure", (0,))))
    out = route_cascade(c, PATH3, Layout.trivial(3))
    assert out.gates[-1] == Gate("measure", (0,))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 8), st.integers(0, 30), st.integers(0, 4), st.integers(0, 2**32 - 1), st.sampled_from(["trivial", "dense"]))
def test_routing_properties(n, length, topo, seed, strategy):
    rng = np.random.default_rng(seed)
    graph = list(topologies(n).values())[topo]
    c = random_circuit(rng, n, length)
    lay = choose_layout(c, graph, strategy, seed)
    assert len(set(lay.mapping)) == n
    cas = route_cascade(c, graph, lay)
    look, final = route_lookahead(c, graph, lay, window=3, seed=seed)
    assert len(set(final.mapping)) == n
    assert swap_count(c, look) <= swap_count(c, cas)
    for out, fl in ((cas, lay), (look, final)):
        fixed = fix_directions(out, graph)
        assert all(graph.allows_cx(*x.qubits) for x in fixed.gates if x.name == "cx")
        assert all(graph.adjacent(*x.qubits) for x in fixed.gates if x.num_qubits == 2)
        assert verify_routed(c, fixed, lay, fl)
