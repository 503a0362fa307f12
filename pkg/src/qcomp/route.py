"""Qubit layout, SWAP routing and CNOT direction fixing on coupling graphs."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Gate, apply_gate, MAX_COMPOSE_QUBITS
from .errors import (
    DimensionTooLarge,
    DisconnectedRegion,
    EdgeAbsentBothDirections,
    InputError,
    TooFewPhysicalQubits,
)

VERIFY_MAX_QUBITS = 10

UNI = "uni"
SYM = "sym"


@dataclass
class CouplingGraph:
    """Device connectivity; a ``uni`` edge ``(a, b)`` allows CNOT with control ``a`` only."""

    num_nodes: int
    edges: dict[tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (a, b), kind in self.edges.items():
            a, b = int(a), int(b)
            if a == b:
                raise InputError(f"self-loop on node {a}")
            if not (0 <= a < self.num_nodes and 0 <= b < self.num_nodes):
                raise InputError(f"edge ({a}, {b}) references a missing node")
            if kind not in (UNI, SYM):
                raise InputError(f"edge kind must be 'uni' or 'sym', got {kind!r}")
            if (b, a) in clean:
                # opposite uni edges collapse into one symmetric edge
                clean[(b, a)] = SYM
                continue
            clean[(a, b)] = kind
        self.edges = clean
        self._adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for a, b in clean:
            self._adj[a].append(b)
            self._adj[b].append(a)
        for lst in self._adj:
            lst.sort()
        self._dist: list[list[float]] | None = None

    @classmethod
    def from_edges(cls, num_nodes: int, pairs, kind: str = SYM) -> "CouplingGraph":
        return cls(num_nodes, {(a, b): kind for a, b in pairs})

    @classmethod
    def line(cls, n: int, kind: str = SYM) -> "CouplingGraph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)], kind)

    @classmethod
    def from_json(cls, data) -> "CouplingGraph":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        nodes = data["nodes"]
        n = nodes if isinstance(nodes, int) else (max(nodes) + 1 if nodes else 0)
        edges = {}
        for e in data["edges"]:
            kind = e[2] if len(e) > 2 else SYM
            edges[(int(e[0]), int(e[1]))] = kind
        return cls(n, edges)

    def to_json(self) -> dict:
        return {
            "nodes": self.num_nodes,
            "edges": [[a, b, k] for (a, b), k in sorted(self.edges.items())],
        }

    def neighbors(self, v: int) -> list[int]:
        return self._adj[v]

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def allows_cx(self, control: int, target: int) -> bool:
        if (control, target) in self.edges:
            return True
        return self.edges.get((target, control)) == SYM

    def undirected_edges(self) -> list[tuple[int, int]]:
        return sorted((min(a, b), max(a, b)) for a, b in self.edges)

    def _bfs(self, src: int) -> list[int]:
        parent = [-1] * self.num_nodes
        parent[src] = src
        q = deque([src])
        while q:
            v = q.popleft()
            for w in self._adj[v]:
                if parent[w] < 0:
                    parent[w] = v
                    q.append(w)
        return parent

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path from ``a`` to ``b``; neighbours are expanded in index order."""
        parent = self._bfs(a)
        if parent[b] < 0:
            raise DisconnectedRegion(f"no path between physical qubits {a} and {b}")
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])
        return path[::-1]

    def distances(self) -> list[list[float]]:
        if self._dist is None:
            inf = float("inf")
            dist = []
            for s in range(self.num_nodes):
                d = [inf] * self.num_nodes
                d[s] = 0
                q = deque([s])
                while q:
                    v = q.popleft()
                    for w in self._adj[v]:
                        if d[w] == inf:
                            d[w] = d[v] + 1
                            q.append(w)
                dist.append(d)
            self._dist = dist
        return self._dist


@dataclass(frozen=True)
class Layout:
    """Injective virtual -> physical qubit map."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(p) for p in self.mapping))
        if len(set(self.mapping)) != len(self.mapping):
            raise InputError("layout is not injective")

    @classmethod
    def trivial(cls, n: int) -> "Layout":
        return cls(tuple(range(n)))

    def __getitem__(self, v: int) -> int:
        return self.mapping[v]

    def __len__(self):
        return len(self.mapping)

    def physical_to_virtual(self) -> dict[int, int]:
        return {p: v for v, p in enumerate(self.mapping)}

    def check(self, graph: CouplingGraph):
        if any(not 0 <= p < graph.num_nodes for p in self.mapping):
            raise InputError("layout maps onto a node outside the graph")

    def to_json(self) -> list[int]:
        return list(self.mapping)


# --- layout selection -------------------------------------------------

def _interaction_counts(circuit: Circuit) -> list[int]:
    counts = [0] * circuit.num_qubits
    for g in circuit.gates:
        if g.num_qubits >= 2:
            for q in g.qubits:
                counts[q] += 1
    return counts


def choose_layout(circuit: Circuit, graph: CouplingGraph, strategy: str = "trivial", seed: int = 0) -> Layout:
    n = circuit.num_qubits
    if n > graph.num_nodes:
        raise TooFewPhysicalQubits(f"circuit needs {n} qubits, device has {graph.num_nodes}")
    if strategy == "trivial" or n == 0:
        return Layout(tuple(range(n)))
    if strategy != "dense":
        raise InputError(f"unknown layout strategy {strategy!r}")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(graph.num_nodes)]
    rank = {v: i for i, v in enumerate(order)}
    best: tuple[int, list[int]] | None = None
    for start in order:
        chosen = [start]
        members = {start}
        while len(chosen) < n:
            frontier = {w for v in chosen for w in graph.neighbors(v)} - members
            pool = frontier or (set(range(graph.num_nodes)) - members)
            pick = max(pool, key=lambda w: (sum(1 for u in graph.neighbors(w) if u in members), -rank[w]))
            chosen.append(pick)
            members.add(pick)
        score = sum(1 for a, b in graph.undirected_edges() if a in members and b in members)
        if best is None or score > best[0]:
            best = (score, chosen)
    _, nodes = best
    # busiest virtual qubits go to the best-connected chosen nodes
    members = set(nodes)
    inner = {v: sum(1 for u in graph.neighbors(v) if u in members) for v in nodes}
    phys = sorted(nodes, key=lambda v: (-inner[v], rank[v]))
    counts = _interaction_counts(circuit)
    virt = sorted(range(n), key=lambda q: (-counts[q], q))
    mapping = [0] * n
    for q, p in zip(virt, phys):
        mapping[q] = p
    return Layout(tuple(mapping))


# --- routing -----------------------------------------------------------

def _physical_gate(g: Gate, l2p) -> Gate:
    return Gate(g.name, tuple(l2p[q] for q in g.qubits), g.params, g.matrix)


def _check_layout(circuit: Circuit, graph: CouplingGraph, layout: Layout):
    if len(layout) < circuit.num_qubits:
        raise InputError("layout does not cover every circuit qubit")
    layout.check(graph)


def route_cascade(circuit: Circuit, graph: CouplingGraph, layout: Layout) -> Circuit:
    """Insert SWAP chains before each non-adjacent gate and undo them after it."""
    _check_layout(circuit, graph, layout)
    out: list[Gate] = []
    for g in circuit.gates:
        pg = _physical_gate(g, layout.mapping)
        if g.num_qubits == 1 or all(graph.adjacent(a, b) for a, b in zip(pg.qubits, pg.qubits[1:])):
            if g.num_qubits > 2:
                raise InputError("routing supports gates on at most two qubits")
            out.append(pg)
            continue
        if g.num_qubits > 2:
            raise InputError("routing supports gates on at most two qubits")
        pa, pb = pg.qubits
        path = graph.shortest_path(pa, pb)
        swaps = [Gate("swap", (path[i], path[i + 1])) for i in range(len(path) - 2)]
        out.extend(swaps)
        out.append(Gate(g.name, (path[-2], pb), g.params, g.matrix))
        out.extend(reversed(swaps))
    return Circuit(graph.num_nodes, tuple(out), circuit.global_phase)


def route_lookahead(
    circuit: Circuit, graph: CouplingGraph, layout: Layout, window: int = 4, seed: int = 0
) -> tuple[Circuit, Layout]:
    """Greedy SWAP insertion scored on the next ``window`` two-qubit gates.

    The virtual-to-physical map drifts and is returned. If the result uses
    more SWAPs than ``route_cascade`` the cascade routing is returned instead.
    """
    if window < 1:
        raise InputError("window must be >= 1")
    _check_layout(circuit, graph, layout)
    dist = graph.distances()
    rng = np.random.default_rng(seed)
    l2p = list(layout.mapping)
    p2l = {p: v for v, p in enumerate(l2p)}
    twoq = [i for i, g in enumerate(circuit.gates) if g.num_qubits == 2]
    out: list[Gate] = []
    swaps = 0
    for gi, g in enumerate(circuit.gates):
        if g.num_qubits > 2:
            raise InputError("routing supports gates on at most two qubits")
        if g.num_qubits == 2:
            a, b = g.qubits
            if dist[l2p[a]][l2p[b]] == float("inf"):
                raise DisconnectedRegion(f"no path between physical qubits {l2p[a]} and {l2p[b]}")
            upcoming = [circuit.gates[i].qubits for i in twoq if i > gi][:window]
            while dist[l2p[a]][l2p[b]] > 1:
                pa, pb = l2p[a], l2p[b]
                cands = []
                for end, other in ((pa, pb), (pb, pa)):
                    for w in graph.neighbors(end):
                        if dist[w][other] < dist[end][other]:
                            cands.append((min(end, w), max(end, w)))
                best_score, best = None, []
                for s in sorted(set(cands)):
                    trial = _swapped(l2p, p2l, s)
                    score = sum(dist[trial[x]][trial[y]] for x, y in upcoming)
                    if best_score is None or score < best_score:
                        best_score, best = score, [s]
                    elif score == best_score:
                        best.append(s)
                s = best[int(rng.integers(len(best)))] if len(best) > 1 else best[0]
                _apply_swap(l2p, p2l, s)
                out.append(Gate("swap", s))
                swaps += 1
        out.append(_physical_gate(g, l2p))
    routed = Circuit(graph.num_nodes, tuple(out), circuit.global_phase)
    cascade = route_cascade(circuit, graph, layout)
    if swaps > cascade.count("swap") - circuit.count("swap"):
        return cascade, layout
    return routed, Layout(tuple(l2p))


def _swapped(l2p, p2l, s):
    trial = list(l2p)
    x, y = s
    if x in p2l:
        trial[p2l[x]] = y
    if y in p2l:
        trial[p2l[y]] = x
    return trial


def _apply_swap(l2p, p2l, s):
    x, y = s
    vx, vy = p2l.pop(x, None), p2l.pop(y, None)
    if vx is not None:
        l2p[vx] = y
        p2l[y] = vx
    if vy is not None:
        l2p[vy] = x
        p2l[x] = vy


def swap_count(original: Circuit, routed: Circuit) -> int:
    return routed.count("swap") - original.count("swap")


# --- direction fixing --------------------------------------------------

def fix_directions(circuit: Circuit, graph: CouplingGraph) -> Circuit:
    """Reverse unavailable CNOTs with Hadamards; expand SWAPs on one-way edges."""
    out: list[Gate] = []

    def cx(c, t):
        if graph.allows_cx(c, t):
            return [Gate("cx", (c, t))]
        if graph.allows_cx(t, c):
            hs = [Gate("h", (c,)), Gate("h", (t,))]
            return hs + [Gate("cx", (t, c))] + hs
        raise EdgeAbsentBothDirections(f"no coupler between {c} and {t}")

    for g in circuit.gates:
        if g.num_qubits == 1:
            out.append(g)
            continue
        a, b = g.qubits[0], g.qubits[1]
        if g.num_qubits > 2 or not graph.adjacent(a, b):
            raise EdgeAbsentBothDirections(f"{g.name} on non-adjacent qubits {g.qubits}")
        if g.name == "cx":
            out.extend(cx(a, b))
        elif g.name == "swap" and not (graph.allows_cx(a, b) and graph.allows_cx(b, a)):
            out.extend(cx(a, b) + cx(b, a) + cx(a, b))
        else:
            out.append(g)
    return Circuit(circuit.num_qubits, tuple(out), circuit.global_phase)


# --- verification -------------------------------------------------------

def _strip_measure(c: Circuit) -> Circuit:
    return c.with_gates(tuple(g for g in c.gates if g.name != "measure"))


def verify_routed(
    original: Circuit, routed: Circuit, layout: Layout, final_layout: Layout | None = None, tol: float = 1e-8
) -> bool:
    """Check ``routed`` implements ``original`` given initial and final layouts.

    Unused physical qubits start in |0>; the routed circuit applied to a
    laid-out input must equal the original applied to the same input, read
    through ``final_layout``, up to one global phase.
    """
    final_layout = final_layout or layout
    n = original.num_qubits
    active = sorted(
        set(layout.mapping[:n]) | set(final_layout.mapping[:n])
        | {q for g in routed.gates for q in g.qubits}
    )
    m = len(active)
    if n > VERIFY_MAX_QUBITS or m > MAX_COMPOSE_QUBITS:
        raise DimensionTooLarge(f"verification limited to {VERIFY_MAX_QUBITS} qubits")
    idx = {p: i for i, p in enumerate(active)}

    def embedding(lay: Layout) -> np.ndarray:
        e = np.zeros((2**m, 2**n), dtype=complex)
        for s in range(2**n):
            t = 0
            for v in range(n):
                if s >> v & 1:
                    t |= 1 << idx[lay.mapping[v]]
            e[t, s] = 1
        return e

    orig = _strip_measure(original)
    u = np.eye(2**n, dtype=complex)
    for g in orig.gates:
        u = apply_gate(u, n, g.to_matrix(), g.qubits)
    u *= np.exp(1j * orig.global_phase)
    lhs = embedding(layout)
    for g in _strip_measure(routed).gates:
        lhs = apply_gate(lhs, m, g.to_matrix(), tuple(idx[q] for q in g.qubits))
    lhs *= np.exp(1j * routed.global_phase)
    rhs = embedding(final_layout) @ u
    overlap = np.vdot(rhs.ravel(), lhs.ravel())
    if abs(overlap) < 1e-12:
        return False
    phase = overlap / abs(overlap)
    return bool(np.max(np.abs(lhs - phase * rhs)) < tol)
