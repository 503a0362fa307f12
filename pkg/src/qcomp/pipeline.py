"""End-to-end flows shared by the HTTP service and the command line.

Every function takes and returns plain JSON-compatible data so that the
service layer only validates and forwards. All randomness comes from one
seed; each stage draws its own seed with :func:`derive_seed`, so running a
stage on its own reproduces what the full pipeline would do at that stage.
"""

from __future__ import annotations

import hashlib
import threading
import time
from pathlib import Path

import numpy as np

from .circuit import FIXED_MATRICES, GATE_ARITY, Circuit, Gate, GateBasis, check_unitary, compose_unitary, distance, metrics
from .embed import (
    HardwareGraph,
    chimera_graph,
    clone_problem,
    embed_ising,
    embedding_from_json,
    embedding_to_json,
    find_embedding,
    unembed_replicas,
    validate_embedding,
)
from .errors import DimensionMismatch, InputError, NetTooCoarse, TooManyVariables
from .ising import (
    BINARY,
    HuboModel,
    IsingModel,
    QuboModel,
    SampleSet,
    brute_force_solve,
    ising_to_qubo,
    model_from_json,
    qubo_to_ising,
    reduce_hubo,
    vkey,
)
from .qasm import emit_qasm, parse_qasm
from .route import VERIFY_MAX_QUBITS, CouplingGraph, choose_layout, fix_directions, route_cascade, route_lookahead, swap_count, verify_routed
from .sampler import AnnealSchedule, BetaSchedule, adiabatic_evolve, estimate_teff, simulated_anneal
from .synth import kak_decompose, lower_to_basic, sk_compile, sk_precompile, synthesize_unitary
from .synth.kak import cnot_count_lower_bound
from .synth.sk import SKNet, cache_key


def derive_seed(seed: int, stage: str) -> int:
    """Stage seed: first 63 bits of ``sha256("<seed>/<stage>")``."""
    digest = hashlib.sha256(f"{int(seed)}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# --- gate model ----------------------------------------------------------

def load_coupling(spec) -> CouplingGraph:
    if isinstance(spec, CouplingGraph):
        return spec
    if isinstance(spec, dict) and "line" in spec:
        return CouplingGraph.line(int(spec["line"]))
    try:
        return CouplingGraph.from_json(spec)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed coupling graph: {exc!r}") from exc


def transpile(qasm: str, coupling, layout: str = "trivial", routing: str = "cascade", window: int = 4, seed: int = 0) -> dict:
    """Parse, lower, lay out, route and direction-fix a QASM program."""
    circ = lower_to_basic(parse_qasm(qasm))
    graph = load_coupling(coupling)
    lay = choose_layout(circ, graph, layout, derive_seed(seed, "layout"))
    if routing == "cascade":
        routed, final = route_cascade(circ, graph, lay), lay
    elif routing == "lookahead":
        routed, final = route_lookahead(circ, graph, lay, window, derive_seed(seed, "route"))
    else:
        raise InputError(f"unknown routing {routing!r}")
    fixed = fix_directions(routed, graph)
    counts: dict = {}
    for g in fixed.gates:
        counts[g.name] = counts.get(g.name, 0) + 1
    if circ.num_qubits <= VERIFY_MAX_QUBITS:
        try:
            verdict = "pass" if verify_routed(circ, fixed, lay, final) else "fail"
        except TooManyVariables:
            verdict = "skipped"
    else:
        verdict = "skipped"
    report = {
        **metrics(fixed),
        "gate_counts": dict(sorted(counts.items())),
        "swaps_added": swap_count(circ, routed),
        "layout": list(lay.mapping),
        "final_layout": list(final.mapping),
        "verification": verdict,
    }
    return {"qasm": emit_qasm(fixed), "metrics": report}


def parse_unitary(data) -> np.ndarray:
    """Matrix from ``{"real", "imag"}``, ``{"matrix": rows}`` or bare rows.

    Entries may be numbers, ``[re, im]`` pairs or strings such as ``"0.5-0.5j"``.
    """
    if isinstance(data, dict) and "real" in data:
        m = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data.get("imag", 0.0), dtype=float)
    else:
        rows = data["matrix"] if isinstance(data, dict) else data

        def entry(x):
            if isinstance(x, str):
                return complex(x.replace(" ", ""))
            if isinstance(x, (list, tuple)):
                return complex(x[0], x[1])
            return complex(x)

        try:
            m = np.array([[entry(x) for x in row] for row in rows], dtype=complex)
        except (TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed unitary: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
        raise DimensionMismatch(f"unitary must be square with power-of-two size, got {m.shape}")
    return check_unitary(m)


def gate_unitary(spec: str) -> np.ndarray:
    """Matrix for ``name`` or ``name:p1,p2,...`` (e.g. ``rz:0.37``)."""
    name, _, params = spec.partition(":")
    name = name.strip().lower()
    if name in ("id", "i"):
        return np.eye(2, dtype=complex)
    if name not in GATE_ARITY or name == "measure":
        raise InputError(f"unknown gate {name!r}")
    nq, _ = GATE_ARITY[name]
    vals = tuple(float(p) for p in params.split(",")) if params.strip() else ()
    return Gate(name, tuple(range(nq)), vals).to_matrix()


class NetCache:
    """In-memory (and optionally on-disk) store of precompiled SK nets."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory else None
        self._nets: dict[str, SKNet] = {}
        self._lock = threading.Lock()

    def get(self, basis: GateBasis, l0: int) -> tuple[SKNet, float]:
        """``(net, seconds spent building or loading it)``."""
        key = cache_key(basis, l0)
        with self._lock:
            if key in self._nets:
                return self._nets[key], 0.0
            start = time.perf_counter()
            net = None
            path = self.directory / f"sknet-{key}.bin" if self.directory else None
            if path is not None and path.exists():
                net = SKNet.loads(path.read_bytes(), basis)
            if net is None:
                net = sk_precompile(basis, l0)
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_bytes(net.dumps())
            self._nets[key] = net
            return net, time.perf_counter() - start


_DEFAULT_NETS = NetCache()


def synth(
    target: np.ndarray,
    mode: str = "exact",
    basis=("h", "t", "tdg"),
    depth: int | None = None,
    l0: int = 12,
    epsilon: float | None = None,
    max_depth: int = 6,
    nets: NetCache | None = None,
) -> dict:
    """Synthesize ``target``; ``sk`` mode picks the smallest depth meeting ``epsilon``."""
    target = check_unitary(np.asarray(target, dtype=complex))
    if mode == "exact":
        t0 = time.perf_counter()
        n = int(np.log2(target.shape[0]))
        circ = kak_decompose(target) if n == 2 else synthesize_unitary(target)
        circ = lower_to_basic(circ)
        elapsed = time.perf_counter() - t0
        report = {"mode": "exact", "distance": distance(compose_unitary(circ), target), "length": len(circ.gates),
                  "cnot_count": circ.count("cx"), "precompile_ms": 0.0, "execute_ms": 1e3 * elapsed}
        if n == 2:
            report["cnot_lower_bound"] = cnot_count_lower_bound(target)
        return {"qasm": emit_qasm(circ), "report": report}
    if mode != "sk":
        raise InputError(f"unknown synthesis mode {mode!r}")
    if target.shape != (2, 2):
        raise DimensionMismatch("sk mode approximates single-qubit unitaries only")
    gb = GateBasis.from_names(basis)
    net, pre = (nets or _DEFAULT_NETS).get(gb, l0)
    t0 = time.perf_counter()
    depths = [depth] if depth is not None else range(max_depth + 1)
    try:
        for d in depths:
            seq = sk_compile(target, net, d)
            circ = Circuit(1, tuple(Gate(g, (0,)) for g in seq))
            dist = distance(compose_unitary(circ), target) if seq else distance(np.eye(2), target)
            if epsilon is None or dist <= epsilon:
                break
    except NetTooCoarse as exc:
        exc.message += " (pass a larger --l0)"
        raise
    w = gb.compose(seq)
    phase = float(np.angle(np.trace(w.conj().T @ target))) if seq else float(np.angle(np.trace(target)))
    circ = circ.with_gates(circ.gates, phase if abs(phase) > 1e-15 else 0.0)
    elapsed = time.perf_counter() - t0
    report = {"mode": "sk", "depth": d, "distance": dist, "length": len(seq), "l0": l0, "net_size": len(net),
              "epsilon0": net.epsilon0, "precompile_ms": 1e3 * pre, "execute_ms": 1e3 * elapsed}
    if epsilon is not None:
        report["epsilon_met"] = bool(dist <= epsilon)
    return {"qasm": emit_qasm(circ), "report": report}


# --- annealing -------------------------------------------------------------

def load_model(data, negate: bool = False):
    return model_from_json(data, negate_sign=negate)


def load_hardware(spec) -> HardwareGraph:
    if isinstance(spec, HardwareGraph):
        return spec
    if isinstance(spec, dict) and "chimera" in spec:
        return chimera_graph(*[int(x) for x in spec["chimera"]])
    try:
        return HardwareGraph.from_json(spec)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed hardware graph: {exc!r}") from exc


def reduce(model_data, M: float | None = None, negate: bool = False) -> dict:
    model = load_model(model_data, negate)
    hubo = model if isinstance(model, HuboModel) else None
    if hubo is None:
        raise InputError("reduce expects a model with higher-order 'terms'")
    qubo, log = reduce_hubo(hubo, M)
    return {"model": qubo.to_json(), "log": [{"variable": r["variable"], "pair": [str(p) for p in r["pair"]], "M": r["M"]} for r in log]}


def _logical_ising(model, M=None):
    """``(ising, reduction log, binary)`` for any loaded model."""
    log = []
    if isinstance(model, HuboModel):
        if model.degree > 2:
            model, log = reduce_hubo(model, M)
        else:
            lin = {next(iter(t)): c for t, c in model.terms.items() if len(t) == 1}
            quad = {tuple(sorted(t, key=vkey)): c for t, c in model.terms.items() if len(t) == 2}
            model = QuboModel(lin, quad, model.offset)
    if isinstance(model, QuboModel):
        return qubo_to_ising(model), log, True
    return model, log, False


def embed(model_data, target, seed: int = 0, tries: int = 10, negate: bool = False) -> dict:
    model = load_model(model_data, negate)
    ising, _, _ = _logical_ising(model)
    hw = load_hardware(target)
    emb = find_embedding(ising, hw, seed=derive_seed(seed, "embed"), tries=tries)
    return {"embedding": embedding_to_json(emb), "report": validate_embedding(ising, hw, emb).to_dict()}


def run_sampler(model: IsingModel, sampler: str, opts: dict, seed: int) -> tuple[SampleSet, dict]:
    info: dict = {}
    if sampler == "sa":
        sched = BetaSchedule(opts.get("beta_min", 0.1), opts.get("beta_max", 10.0), opts.get("beta_steps", 64))
        s = simulated_anneal(model, opts.get("sweeps", 1000), sched, opts.get("reads", 100),
                             derive_seed(seed, "sample"), threads=opts.get("threads", 1))
    elif sampler == "adiabatic":
        total = opts.get("total_time", 100.0)
        if opts.get("schedule_csv"):
            sched = AnnealSchedule.from_csv(opts["schedule_csv"], total)
        else:
            sched = AnnealSchedule.linear(total)
        _, s, evo = adiabatic_evolve(model, sched, opts.get("dt"), derive_seed(seed, "sample"), opts.get("reads", 100))
        info["ground_population"] = evo["ground_population"]
        info["norm_drift"] = evo["norm_drift"]
    elif sampler == "brute":
        _, ground = brute_force_solve(model)
        order = model.variables
        s = SampleSet.from_rows(model, np.array([[g[v] for v in order] for g in ground]).reshape(len(ground), len(order)), order)
    else:
        raise InputError(f"unknown sampler {sampler!r}")
    return s, info


def _to_original(samples: SampleSet, ising: IsingModel, original, binary: bool) -> SampleSet:
    """Map logical spin samples back onto the variables and domain of ``original``."""
    order = original.variables
    rows, cb, counts = [], [], []
    for r in samples.records:
        vals = [r.assignment.get(v, -1) for v in order]
        rows.append([(x + 1) // 2 for x in vals] if binary else vals)
        cb.append(r.chain_break_fraction)
        counts.append(r.occurrences)
    arr = np.array(rows, dtype=int).reshape(len(rows), len(order))
    return SampleSet.from_rows(original, arr, order, cb, counts)


def summarize(samples: SampleSet, teff_model=None) -> dict:
    best = samples.best
    total = samples.total
    out = {
        "num_samples": total,
        "distinct": len(samples),
        "best_energy": best.energy if best else None,
        "best_sample": {str(k): v for k, v in best.assignment.items()} if best else None,
        "energy_histogram": [[e, c] for e, c in samples.energy_histogram().items()],
        "mean_chain_break_fraction": (sum(r.chain_break_fraction * r.occurrences for r in samples) / total) if total else 0.0,
    }
    if teff_model is not None:
        out["teff"] = estimate_teff(teff_model, samples)
    return out


def solve(
    model_data,
    sampler: str = "sa",
    do_embed: bool = False,
    target=None,
    embedding=None,
    clone: int = 1,
    chain_strength: float | None = None,
    M: float | None = None,
    seed: int = 0,
    opts: dict | None = None,
    teff: bool = False,
    negate: bool = False,
    tries: int = 10,
) -> dict:
    """Load, reduce, embed, sample, unembed and summarize."""
    opts = dict(opts or {})
    original = load_model(model_data, negate)
    ising, log, binary = _logical_ising(original, M)
    summary: dict = {"sampler": sampler, "reduction_log": [
        {"variable": r["variable"], "pair": [str(p) for p in r["pair"]], "M": r["M"]} for r in log]}
    if do_embed or embedding is not None or clone > 1:
        if target is None:
            raise InputError("embedding needs a target hardware graph")
        hw = load_hardware(target)
        if embedding is not None:
            emb = embedding_from_json(embedding, ising.variables)
        else:
            emb = find_embedding(ising, hw, seed=derive_seed(seed, "embed"), tries=tries)
        if clone > 1:
            physical, embs = clone_problem(ising, hw, emb, clone, seed=derive_seed(seed, "clone"), chain_strength=chain_strength)
        else:
            physical, embs = embed_ising(ising, emb, hw, chain_strength), [emb]
        raw, info = run_sampler(physical, sampler, opts, seed)
        logical = unembed_replicas(raw, embs, ising, derive_seed(seed, "unembed"))
        reps = [validate_embedding(ising, hw, e) for e in embs]
        hist: dict = {}
        for rep in reps:
            for k, v in rep.chain_length_histogram.items():
                hist[k] = hist.get(k, 0) + v
        summary["embedding"] = {
            "replicas": len(embs),
            "physical_qubits": physical.num_variables,
            "chain_length_histogram": {str(k): v for k, v in sorted(hist.items())},
            "max_chain": max(r.max_chain for r in reps),
            "chains": [embedding_to_json(e) for e in embs],
        }
    else:
        logical, info = run_sampler(ising, sampler, opts, seed)
    summary.update(info)
    final = _to_original(logical, ising, original, binary)
    summary.update(summarize(final, original if teff else None))
    return {"samples": final.to_jsonl(), "summary": summary}


def sample(model_data, sampler: str = "sa", seed: int = 0, opts: dict | None = None, negate: bool = False) -> dict:
    """Sample a model directly (no reduction or embedding)."""
    model = load_model(model_data, negate)
    if isinstance(model, HuboModel):
        raise InputError("sample takes an Ising or QUBO model; use solve for HUBO input")
    ising = qubo_to_ising(model) if isinstance(model, QuboModel) else model
    s, info = run_sampler(ising, sampler, dict(opts or {}), seed)
    final = _to_original(s, ising, model, isinstance(model, QuboModel))
    return {"samples": final.to_jsonl(), "summary": {**info, **summarize(final)}}


def stats(model_data, samples_jsonl: str, teff: bool = True, negate: bool = False) -> dict:
    model = load_model(model_data, negate)
    s = SampleSet.from_jsonl(samples_jsonl, model)
    if not s.verify(model):
        raise InputError("sample energies do not match the model")
    return summarize(s, model if teff else None)


__all__ = [
    "derive_seed", "transpile", "synth", "reduce", "embed", "solve", "sample", "stats",
    "parse_unitary", "gate_unitary", "NetCache", "load_coupling", "load_hardware",
    "FIXED_MATRICES", "BINARY", "ising_to_qubo",
]
