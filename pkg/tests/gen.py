"""Random instance generators shared by the test modules."""

import numpy as np

from qcomp.circuit import Circuit, Gate
from qcomp.ising import HuboModel, IsingModel
from qcomp.route import CouplingGraph

ONE_Q = ("h", "x", "s", "t", "tdg", "rz", "ry")
TWO_Q = ("cx", "cz", "swap")


def random_circuit(rng, n: int, length: int) -> Circuit:
    gates = []
    for _ in range(length):
        if n > 1 and rng.random() < 0.5:
            a, b = rng.choice(n, 2, replace=False)
            gates.append(Gate(str(rng.choice(TWO_Q)), (int(a), int(b))))
        else:
            name = str(rng.choice(ONE_Q))
            params = (float(rng.uniform(-np.pi, np.pi)),) if name in ("rz", "ry") else ()
            gates.append(Gate(name, (int(rng.integers(n)),), params))
    return Circuit(n, tuple(gates))


def topologies(n: int) -> dict[str, CouplingGraph]:
    """Five connected device shapes on ``n`` nodes (one with one-way edges)."""
    line = [(i, i + 1) for i in range(n - 1)]
    ring = line + ([(n - 1, 0)] if n > 2 else [])
    star = [(0, i) for i in range(1, n)]
    cols = max(1, (n + 1) // 2)
    grid = [(i, i + 1) for i in range(n - 1) if (i + 1) % cols] + [(i, i + cols) for i in range(n - cols)]
    directed = {(i, i + 1) if i % 2 == 0 else (i + 1, i): "uni" for i in range(n - 1)}
    return {
        "line": CouplingGraph.from_edges(n, line),
        "ring": CouplingGraph.from_edges(n, ring),
        "star": CouplingGraph.from_edges(n, star),
        "grid": CouplingGraph.from_edges(n, grid),
        "directed_line": CouplingGraph(n, directed),
    }


def random_hubo(rng, n: int, terms: int, max_degree: int = 4) -> HuboModel:
    names = [f"x{i}" for i in range(n)]
    out: dict = {}
    for _ in range(terms):
        k = int(rng.integers(1, min(max_degree, n) + 1))
        t = frozenset(rng.choice(names, k, replace=False).tolist())
        c = float(rng.choice([-1, 1]) * rng.integers(1, 6))
        out[t] = out.get(t, 0.0) + c
    # make sure every variable appears
    for v in names:
        key = frozenset([v])
        out.setdefault(key, float(rng.integers(-2, 3)) or 1.0)
    return HuboModel(out, 0.0)


def random_ising(rng, n: int, density: float = 0.6, scale: float = 1.0) -> IsingModel:
    h = {i: float(rng.uniform(-scale, scale)) for i in range(n)}
    jj = {}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < density:
                jj[(a, b)] = float(rng.uniform(-scale, scale))
    return IsingModel(h, jj)
