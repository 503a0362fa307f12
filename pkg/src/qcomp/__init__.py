"""Quantum compilation and annealing toolkit.

Gate-model side: circuit IR, QASM, exact and Solovay-Kitaev synthesis,
layout and routing. Annealing side: Ising/QUBO/HUBO models, minor
embedding, QAC, samplers and exact evolution.
"""

__version__ = "0.1.0"

# file-format schema versions reported by ``--version``
SCHEMA_VERSIONS = {
    "qasm": "openqasm-2.0+global_phase-pragma/1",
    "coupling_graph": "1",
    "hardware_graph": "1",
    "model": "1",
    "embedding": "1",
    "sampleset_jsonl": "1",
    "schedule_csv": "1",
    "sk_net_cache": "1",
    "error": "1",
}
