"""Minor embedding onto hardware graphs, chains, QAC encoding and problem cloning."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import (
    EmbeddingNotFound,
    EvenN,
    InputError,
    InsufficientRoom,
    InvalidEmbedding,
    MissingPhysicalVariable,
    NonPositiveGamma,
)
from .ising import IsingModel, SampleSet, _pair, vkey

Embedding = dict  # logical variable -> tuple of hardware nodes


@dataclass
class HardwareGraph:
    """Undirected hardware graph; dead nodes and their edges are dropped."""

    nodes: set
    edges: set
    dead: set = field(default_factory=set)

    def __post_init__(self):
        self.dead = {int(d) for d in self.dead}
        self.nodes = {int(v) for v in self.nodes} - self.dead
        clean = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise InputError(f"self-loop on node {a}")
            if a in self.dead or b in self.dead:
                continue
            if a not in self.nodes or b not in self.nodes:
                raise InputError(f"edge ({a}, {b}) references a missing node")
            clean.add((min(a, b), max(a, b)))
        self.edges = clean
        self._adj = {v: set() for v in self.nodes}
        for a, b in clean:
            self._adj[a].add(b)
            self._adj[b].add(a)

    def neighbors(self, v) -> set:
        return self._adj[v]

    def degree(self, v) -> int:
        return len(self._adj[v])

    def has_edge(self, a, b) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def subgraph(self, keep) -> "HardwareGraph":
        keep = set(keep) & self.nodes
        return HardwareGraph(keep, {e for e in self.edges if e[0] in keep and e[1] in keep})

    @classmethod
    def from_json(cls, data) -> "HardwareGraph":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        nodes = data["nodes"]
        nodes = range(nodes) if isinstance(nodes, int) else nodes
        return cls(set(nodes), {(e[0], e[1]) for e in data["edges"]}, set(data.get("dead", [])))

    def to_json(self) -> dict:
        return {"nodes": sorted(self.nodes), "edges": [list(e) for e in sorted(self.edges)]}


def chimera_graph(m: int, n: int | None = None, t: int = 4) -> HardwareGraph:
    """``m x n`` grid of ``K_{t,t}`` cells.

    Node ``((i*n + j)*2 + side)*t + k``. Side-0 qubits link to the cell
    below, side-1 qubits to the cell on the right.
    """
    n = m if n is None else n
    if min(m, n, t) < 1:
        raise InputError("chimera dimensions must be >= 1")

    def node(i, j, side, k):
        return ((i * n + j) * 2 + side) * t + k

    edges = set()
    for i in range(m):
        for j in range(n):
            for k in range(t):
                for k2 in range(t):
                    edges.add((node(i, j, 0, k), node(i, j, 1, k2)))
                if i + 1 < m:
                    edges.add((node(i, j, 0, k), node(i + 1, j, 0, k)))
                if j + 1 < n:
                    edges.add((node(i, j, 1, k), node(i, j + 1, 1, k)))
    return HardwareGraph(set(range(m * n * 2 * t)), edges)


# --- source graphs -----------------------------------------------------

def source_graph(source) -> tuple[list, list]:
    """``(nodes, edges)`` from a model, ``{"nodes", "edges"}`` dict or edge list."""
    if hasattr(source, "quadratic") and hasattr(source, "variables"):
        return list(source.variables), [tuple(k) for k in source.quadratic]
    if isinstance(source, tuple) and len(source) == 2 and not isinstance(source[0], (int, str)):
        nodes, edges = source
        return sorted(set(nodes), key=vkey), [tuple(e) for e in edges]
    if isinstance(source, dict):
        return sorted(set(source.get("nodes", [])) | {v for e in source["edges"] for v in e}, key=vkey), [
            tuple(e) for e in source["edges"]
        ]
    edges = [tuple(e) for e in source]
    return sorted({v for e in edges for v in e}, key=vkey), edges


# --- validation ----------------------------------------------------------

@dataclass
class EmbeddingReport:
    overlaps: dict = field(default_factory=dict)
    disconnected: list = field(default_factory=list)
    missing_edges: list = field(default_factory=list)
    missing_variables: list = field(default_factory=list)
    invalid_nodes: list = field(default_factory=list)
    chain_length_histogram: dict = field(default_factory=dict)
    max_chain: int = 0
    min_chain: int = 0

    @property
    def valid(self) -> bool:
        return not (self.overlaps or self.disconnected or self.missing_edges or self.missing_variables or self.invalid_nodes)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "overlaps": {str(k): [str(v) for v in vs] for k, vs in sorted(self.overlaps.items())},
            "disconnected": [str(v) for v in self.disconnected],
            "missing_edges": [[str(a), str(b)] for a, b in self.missing_edges],
            "missing_variables": [str(v) for v in self.missing_variables],
            "invalid_nodes": sorted(self.invalid_nodes),
            "chain_length_histogram": {str(k): v for k, v in sorted(self.chain_length_histogram.items())},
            "max_chain": self.max_chain,
            "min_chain": self.min_chain,
        }


def _connected(chain, target: HardwareGraph) -> bool:
    chain = set(chain)
    start = next(iter(chain))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in target.neighbors(v):
            if w in chain and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == chain


def chains_adjacent(a, b, target: HardwareGraph) -> list[tuple[int, int]]:
    """Hardware edges joining chain ``a`` to chain ``b`` (sorted)."""
    sb = set(b)
    return sorted((p, q) for p in a for q in target.neighbors(p) if q in sb)


def validate_embedding(source, target: HardwareGraph, emb: Embedding) -> EmbeddingReport:
    nodes, edges = source_graph(source)
    rep = EmbeddingReport()
    owners: dict = {}
    for v, chain in emb.items():
        for q in chain:
            owners.setdefault(q, []).append(v)
    rep.overlaps = {q: vs for q, vs in owners.items() if len(vs) > 1}
    rep.invalid_nodes = sorted({q for q in owners if q not in target.nodes})
    rep.missing_variables = [v for v in nodes if not emb.get(v)]
    for v, chain in emb.items():
        if chain and not set(chain) - target.nodes and not _connected(chain, target):
            rep.disconnected.append(v)
    for a, b in edges:
        if emb.get(a) and emb.get(b) and not chains_adjacent(emb[a], emb[b], target):
            rep.missing_edges.append((a, b))
    lengths = [len(c) for c in emb.values() if c]
    rep.chain_length_histogram = dict(sorted(Counter(lengths).items()))
    rep.max_chain = max(lengths, default=0)
    rep.min_chain = min(lengths, default=0)
    return rep


# --- heuristic embedding ------------------------------------------------

class _Placer:
    """Vertex-model growth: each chain is re-placed along cheapest paths to its neighbours."""

    def __init__(self, nodes, edges, target: HardwareGraph, rng):
        self.nodes = nodes
        self.nbrs = {v: set() for v in nodes}
        for a, b in edges:
            if a != b:
                self.nbrs[a].add(b)
                self.nbrs[b].add(a)
        self.hw = sorted(target.nodes)
        self.index = {q: i for i, q in enumerate(self.hw)}
        rows, cols = [], []
        for a, b in target.edges:
            rows += [self.index[a], self.index[b]]
            cols += [self.index[b], self.index[a]]
        self.rows = np.array(rows, dtype=np.int64)
        self.cols = np.array(cols, dtype=np.int64)
        self.n = len(self.hw)
        self.usage = np.zeros(self.n, dtype=np.int64)
        self.chains: dict = {}
        self.rng = rng
        self.alpha = 1.5
        self.noise = 0.0

    def weights(self) -> np.ndarray:
        w = self.alpha ** self.usage.astype(float)
        if self.noise:
            w = w * np.exp(self.noise * self.rng.standard_normal(self.n))
        return w

    def remove(self, v):
        for q in self.chains.pop(v, ()):
            self.usage[q] -= 1

    def place(self, v):
        w = self.weights()
        placed = [u for u in sorted(self.nbrs[v], key=vkey) if u in self.chains]
        if not placed:
            cand = np.flatnonzero(w == w.min())
            chain = {int(cand[self.rng.integers(len(cand))])}
        else:
            graph = csr_matrix((w[self.cols], (self.rows, self.cols)), shape=(self.n, self.n))
            total = np.zeros(self.n)
            preds = []
            for u in placed:
                src = sorted(self.chains[u])
                dist, pred, _ = dijkstra(graph, indices=src, min_only=True, return_predecessors=True)
                dist[src] = w[src]
                total += dist
                preds.append((set(src), pred))
            # the root weight is charged once per neighbour, which keeps roots off shared nodes
            total += 1e-9 * self.rng.random(self.n)
            root = int(np.argmin(total))
            if not np.isfinite(total[root]):
                raise EmbeddingNotFound("target graph is disconnected from a neighbour chain")
            chain = {root}
            for src, pred in preds:
                q = root
                while q not in src:
                    chain.add(q)
                    q = int(pred[q])
        self.chains[v] = chain
        for q in chain:
            self.usage[q] += 1

    def overlap(self) -> int:
        return int(np.sum(np.maximum(self.usage - 1, 0)))

    def size(self) -> int:
        return int(sum(len(c) for c in self.chains.values()))


def find_embedding(
    source, target: HardwareGraph, seed: int = 0, tries: int = 10, sweeps: int = 3, max_rounds: int = 100
) -> Embedding:
    """Heuristic minor embedding; raises ``EmbeddingNotFound`` after ``tries`` restarts.

    Each try places vertices in a seeded order, then re-places every chain
    under a slowly rising overlap penalty (with log-normal jitter on the node
    weights) until the chains are disjoint, and finishes with ``sweeps``
    chain-shrinking passes.
    """
    nodes, edges = source_graph(source)
    if not nodes:
        return {}
    if len(nodes) > len(target.nodes):
        raise EmbeddingNotFound(f"{len(nodes)} variables exceed {len(target.nodes)} hardware nodes")
    for attempt in range(tries):
        rng = np.random.default_rng([seed, attempt])
        p = _Placer(nodes, edges, target, rng)
        order = [nodes[i] for i in rng.permutation(len(nodes))]
        for v in order:
            p.place(v)
        for _ in range(max_rounds):
            if p.overlap() == 0:
                break
            p.alpha = min(p.alpha * 1.1, float(p.n))
            p.noise = 0.3
            for i in rng.permutation(len(order)):
                p.remove(order[i])
                p.place(order[i])
        if p.overlap():
            continue
        p.alpha = float(len(nodes) + p.n)
        p.noise = 0.0
        for _ in range(sweeps):
            for v in order:
                old = p.chains[v]
                p.remove(v)
                p.place(v)
                if p.overlap() or len(p.chains[v]) > len(old):
                    p.remove(v)
                    p.chains[v] = old
                    for q in old:
                        p.usage[q] += 1
        emb = {v: tuple(sorted(p.hw[q] for q in p.chains[v])) for v in nodes}
        if validate_embedding((nodes, edges), target, emb).valid:
            return emb
    raise EmbeddingNotFound(f"no embedding found after {tries} tries")


def embedding_to_json(emb: Embedding) -> dict:
    return {str(v): list(c) for v, c in sorted(emb.items(), key=lambda kv: vkey(kv[0]))}


def embedding_from_json(data, variables=None) -> Embedding:
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    lookup = {str(v): v for v in variables} if variables is not None else {}
    try:
        return {lookup.get(k, k): tuple(int(q) for q in chain) for k, chain in data.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise InvalidEmbedding(f"malformed embedding file: {exc}") from exc


# --- physical models ------------------------------------------------------

def default_chain_strength(model: IsingModel, emb: Embedding) -> float:
    big = max([abs(c) for c in model.linear.values()] + [abs(c) for c in model.quadratic.values()] + [0.0])
    longest = max((len(c) for c in emb.values()), default=1)
    return 2.0 * (big or 1.0) * longest


def embed_ising(
    model: IsingModel, emb: Embedding, target: HardwareGraph, chain_strength: float | None = None,
    split_couplings: bool = False,
) -> IsingModel:
    """Physical Ising model for ``model`` under ``emb``.

    Biases are split evenly over each chain, every hardware edge inside a
    chain gets ``-chain_strength``, and each logical coupling sits on the
    first joining edge (or is split over all of them with ``split_couplings``).
    """
    rep = validate_embedding(model, target, emb)
    if not rep.valid:
        raise InvalidEmbedding(f"embedding fails validation: {rep.to_dict()}")
    if chain_strength is None:
        chain_strength = default_chain_strength(model, emb)
    if not chain_strength > 0:
        raise InputError("chain_strength must be positive")
    h: dict = {}
    jj: dict = {}
    for v in model.variables:
        chain = emb[v]
        for q in chain:
            h[q] = h.get(q, 0.0) + model.linear[v] / len(chain)
        cs = set(chain)
        for q in chain:
            for r in target.neighbors(q):
                if r in cs and q < r:
                    jj[(q, r)] = jj.get((q, r), 0.0) - chain_strength
    for (a, b), c in model.quadratic.items():
        joins = chains_adjacent(emb[a], emb[b], target)
        use = joins if split_couplings else joins[:1]
        for p, q in use:
            key = _pair(p, q)
            jj[key] = jj.get(key, 0.0) + c / len(use)
    return IsingModel(h, jj, model.offset)


def _majority(values, rng):
    vals = np.asarray(values)
    hi = vals.max()
    lo = vals.min()
    if hi == lo:
        return int(hi), False
    n_hi = int(np.sum(vals == hi))
    n_lo = len(vals) - n_hi
    if n_hi == n_lo:
        return int(hi if rng.random() < 0.5 else lo), True
    return int(hi if n_hi > n_lo else lo), True


def _unembed_rows(samples: SampleSet, embs: list, variables, rng):
    rows, breaks, counts = [], [], []
    for rec in samples.records:
        for emb in embs:
            row = []
            broken = 0
            for v in variables:
                vals = []
                for q in emb[v]:
                    if q not in rec.assignment:
                        raise MissingPhysicalVariable(f"sample lacks physical node {q}")
                    vals.append(rec.assignment[q])
                x, b = _majority(vals, rng)
                row.append(x)
                broken += b
            rows.append(row)
            breaks.append(broken / len(variables) if variables else 0.0)
            counts.append(rec.occurrences)
    return rows, breaks, counts


def unembed_samples(samples: SampleSet, emb: Embedding, model: IsingModel, tie_seed: int = 0) -> SampleSet:
    """Majority vote per chain; ties on even chains use a coin seeded by ``tie_seed``."""
    return unembed_replicas(samples, [emb], model, tie_seed)


def unembed_replicas(samples: SampleSet, embs: list, model: IsingModel, tie_seed: int = 0) -> SampleSet:
    """Pool the decoded samples of every replica embedding."""
    variables = model.variables
    rng = np.random.default_rng(tie_seed)
    rows, breaks, counts = _unembed_rows(samples, embs, variables, rng)
    return SampleSet.from_rows(model, np.array(rows, dtype=int).reshape(len(rows), len(variables)), variables, breaks, counts)


# --- quantum annealing correction ----------------------------------------

def qac_names(v, n: int) -> tuple[list[str], str]:
    return [f"{v}[{i}]" for i in range(n)], f"{v}[P]"


def qac_encode(model: IsingModel, n: int = 3, gamma: float = 1.0) -> tuple[IsingModel, dict]:
    """``n`` problem copies per spin plus a penalty spin tied by ``-gamma``.

    In the sector where every copy agrees the encoded energy is
    ``n * E(s) - gamma * n * num_variables``.
    """
    if n < 1 or n % 2 == 0:
        raise EvenN(f"QAC needs an odd number of copies, got {n}")
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    h: dict = {}
    jj: dict = {}
    decode: dict = {}
    for v in model.variables:
        copies, pen = qac_names(v, n)
        decode[v] = {"copies": copies, "penalty": pen}
        for c in copies:
            h[c] = model.linear[v]
            jj[(c, pen)] = -gamma
        h[pen] = 0.0
    for (a, b), c in model.quadratic.items():
        for ca, cb in zip(decode[a]["copies"], decode[b]["copies"]):
            jj[(ca, cb)] = c
    return IsingModel(h, jj, n * model.offset), decode


def qac_decode(samples: SampleSet, decode: dict, model: IsingModel) -> SampleSet:
    """Majority over the problem copies; penalty spins do not vote."""
    emb = {v: tuple(d["copies"]) for v, d in decode.items()}
    return unembed_replicas(samples, [emb], model, 0)


# --- cloning -------------------------------------------------------------

def _blocked(target: HardwareGraph, emb: Embedding) -> set:
    used = {q for c in emb.values() for q in c}
    return used | {r for q in used for r in target.neighbors(q)}


def clone_problem(
    model: IsingModel, target: HardwareGraph, emb: Embedding, k: int, seed: int = 0,
    chain_strength: float | None = None,
) -> tuple[IsingModel, list]:
    """Physical model holding ``k`` replicas with pairwise non-adjacent node sets."""
    if k < 1:
        raise InputError("k must be >= 1")
    rep = validate_embedding(model, target, emb)
    if not rep.valid:
        raise InvalidEmbedding(f"embedding fails validation: {rep.to_dict()}")
    embs = [dict(emb)]
    blocked = _blocked(target, emb)
    while len(embs) < k:
        free = target.subgraph(target.nodes - blocked)
        try:
            e = find_embedding(model, free, seed=seed + len(embs))
        except EmbeddingNotFound:
            raise InsufficientRoom(k, len(embs)) from None
        embs.append(e)
        blocked |= _blocked(target, e)
    if chain_strength is None:
        chain_strength = max(default_chain_strength(model, e) for e in embs)
    h: dict = {}
    jj: dict = {}
    for e in embs:
        phys = embed_ising(model, e, target, chain_strength)
        h.update(phys.linear)
        jj.update(phys.quadratic)
    return IsingModel(h, jj, k * model.offset), embs
