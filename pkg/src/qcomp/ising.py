"""Ising, QUBO and HUBO models, exact small-instance oracles and sample sets.

Energy convention: ``E(s) = sum_ij J_ij s_i s_j + sum_i h_i s_i + offset``.
Spins take values in {-1, +1}, binary variables in {0, 1}. Files written
with the opposite sign can be read with ``negate_sign=True``.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DomainViolation,
    InputError,
    InvalidModel,
    MissingVariable,
    NonPositiveAlpha,
    NonPositiveM,
    NonPositiveT,
    TooManyVariables,
)

SPIN = "SPIN"
BINARY = "BINARY"
BRUTE_FORCE_MAX = 24
BOLTZMANN_MAX = 20
_CHUNK = 1 << 16


def vkey(v):
    """Sort key putting ints before other labels, each in natural order."""
    return (0, v, "") if isinstance(v, (int, np.integer)) else (1, 0, str(v))


def _pair(a, b):
    if a == b:
        raise InvalidModel(f"quadratic term on a single variable {a!r}")
    return (a, b) if vkey(a) <= vkey(b) else (b, a)


@dataclass
class _QuadraticModel:
    linear: dict = field(default_factory=dict)
    quadratic: dict = field(default_factory=dict)
    offset: float = 0.0

    vartype = SPIN
    domain = (-1, 1)

    def __post_init__(self):
        lin = {v: float(c) for v, c in self.linear.items()}
        quad: dict = {}
        for key, c in self.quadratic.items():
            a, b = key
            p = _pair(a, b)
            quad[p] = quad.get(p, 0.0) + float(c)
            lin.setdefault(a, 0.0)
            lin.setdefault(b, 0.0)
        self.linear = lin
        self.quadratic = quad
        self.offset = float(self.offset)

    @property
    def variables(self) -> list:
        return sorted(self.linear, key=vkey)

    @property
    def num_variables(self) -> int:
        return len(self.linear)

    def copy(self, **kw):
        args = dict(linear=dict(self.linear), quadratic=dict(self.quadratic), offset=self.offset)
        args.update(kw)
        return type(self)(**args)

    def arrays(self, order=None):
        """``(h, J, offset)`` with ``J`` strictly upper triangular in ``order``."""
        order = self.variables if order is None else list(order)
        idx = {v: i for i, v in enumerate(order)}
        h = np.array([self.linear.get(v, 0.0) for v in order])
        jm = np.zeros((len(order), len(order)))
        for (a, b), c in self.quadratic.items():
            i, j = sorted((idx[a], idx[b]))
            jm[i, j] += c
        return h, jm, self.offset

    def energies(self, values: np.ndarray, order=None) -> np.ndarray:
        """Energies of the rows of ``values`` (columns follow ``order``)."""
        h, jm, off = self.arrays(order)
        values = np.asarray(values, dtype=float)
        return off + values @ h + np.einsum("ri,ri->r", values @ jm, values)

    def energy(self, assignment) -> float:
        return energy(self, assignment)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.linear == other.linear
            and self.quadratic == other.quadratic
            and self.offset == other.offset
        )

    def to_json(self) -> dict:
        return {
            "vartype": self.vartype,
            "linear": {str(v): self.linear[v] for v in self.variables},
            "quadratic": {
                f"{a},{b}": c for (a, b), c in sorted(self.quadratic.items(), key=lambda kv: (vkey(kv[0][0]), vkey(kv[0][1])))
            },
            "offset": self.offset,
        }


class IsingModel(_QuadraticModel):
    """Spin model over {-1, +1}."""

    vartype = SPIN
    domain = (-1, 1)


class QuboModel(_QuadraticModel):
    """Binary quadratic model over {0, 1}."""

    vartype = BINARY
    domain = (0, 1)


@dataclass
class HuboModel:
    """Binary polynomial; ``terms`` maps a frozenset of variables to its coefficient."""

    terms: dict = field(default_factory=dict)
    offset: float = 0.0

    vartype = BINARY
    domain = (0, 1)

    def __post_init__(self):
        clean: dict = {}
        for key, c in self.terms.items():
            s = frozenset(key)
            if not s:
                raise InvalidModel("empty HUBO term; use the offset")
            clean[s] = clean.get(s, 0.0) + float(c)
        self.terms = clean
        self.offset = float(self.offset)

    @property
    def variables(self) -> list:
        return sorted({v for t in self.terms for v in t}, key=vkey)

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def degree(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    def energies(self, values: np.ndarray, order=None) -> np.ndarray:
        order = self.variables if order is None else list(order)
        idx = {v: i for i, v in enumerate(order)}
        values = np.asarray(values, dtype=float)
        out = np.full(values.shape[0], self.offset)
        for t, c in self.terms.items():
            out += c * np.prod(values[:, [idx[v] for v in t]], axis=1)
        return out

    def energy(self, assignment) -> float:
        return energy(self, assignment)

    def to_json(self) -> dict:
        terms = sorted(self.terms.items(), key=lambda kv: [vkey(v) for v in sorted(kv[0], key=vkey)])
        return {
            "vartype": BINARY,
            "terms": [{"vars": [str(v) for v in sorted(t, key=vkey)], "coeff": c} for t, c in terms],
            "offset": self.offset,
        }


Model = IsingModel | QuboModel | HuboModel


def _row(model, assignment) -> np.ndarray:
    order = model.variables
    row = []
    for v in order:
        if v not in assignment:
            raise MissingVariable(f"assignment has no value for {v!r}")
        x = assignment[v]
        if x not in model.domain:
            raise DomainViolation(f"{v!r}={x!r} outside {model.domain}")
        row.append(x)
    return np.array([row], dtype=float)


def energy(model: Model, assignment) -> float:
    """Energy of one assignment (a mapping variable -> value)."""
    return float(model.energies(_row(model, assignment))[0])


# --- conversions --------------------------------------------------------

def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute ``x = (s + 1) / 2``."""
    h = {v: c / 2 for v, c in q.linear.items()}
    off = q.offset + sum(q.linear.values()) / 2
    jj = {}
    for (a, b), c in q.quadratic.items():
        jj[(a, b)] = c / 4
        h[a] += c / 4
        h[b] += c / 4
        off += c / 4
    return IsingModel(h, jj, off)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Substitute ``s = 2x - 1``."""
    lin = {v: 2 * c for v, c in m.linear.items()}
    off = m.offset - sum(m.linear.values())
    quad = {}
    for (a, b), c in m.quadratic.items():
        quad[(a, b)] = 4 * c
        lin[a] -= 2 * c
        lin[b] -= 2 * c
        off += c
    return QuboModel(lin, quad, off)


def rescale(model, alpha: float):
    """Multiply every coefficient, offset included, by ``alpha > 0``."""
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
    if isinstance(model, HuboModel):
        return HuboModel({t: alpha * c for t, c in model.terms.items()}, alpha * model.offset)
    return model.copy(
        linear={v: alpha * c for v, c in model.linear.items()},
        quadratic={k: alpha * c for k, c in model.quadratic.items()},
        offset=alpha * model.offset,
    )


def negate(model):
    if isinstance(model, HuboModel):
        return HuboModel({t: -c for t, c in model.terms.items()}, -model.offset)
    return model.copy(
        linear={v: -c for v, c in model.linear.items()},
        quadratic={k: -c for k, c in model.quadratic.items()},
        offset=-model.offset,
    )


def spin_hubo_to_binary(terms: dict, offset: float = 0.0) -> HuboModel:
    """Expand each spin product with ``s = 2x - 1``."""
    out: dict = {}
    off = float(offset)
    for t, c in terms.items():
        t = tuple(sorted(set(t), key=vkey))
        for r in range(len(t) + 1):
            for sub in itertools.combinations(t, r):
                coef = c * (2 ** r) * (-1) ** (len(t) - r)
                if not sub:
                    off += coef
                else:
                    out[frozenset(sub)] = out.get(frozenset(sub), 0.0) + coef
    return HuboModel(out, off)


def as_hubo(model) -> HuboModel:
    if isinstance(model, HuboModel):
        return model
    if isinstance(model, IsingModel):
        model = ising_to_qubo(model)
    terms = {frozenset([v]): c for v, c in model.linear.items()}
    terms.update({frozenset(k): c for k, c in model.quadratic.items()})
    return HuboModel(terms, model.offset)


# --- HUBO quadratization -----------------------------------------------

def substitution_penalty(x, y, z):
    """Zero iff ``z = x*y`` on binary inputs, at least 1 otherwise."""
    return x * y - 2 * x * z - 2 * y * z + 3 * z


def default_penalty(h: HuboModel) -> float:
    return 1.0 + 2.0 * sum(abs(c) for c in h.terms.values())


def _fresh_name(a, b, taken):
    name = f"{a}_{b}"
    while name in taken:
        name += "'"
    return name


def reduce_hubo(h: HuboModel, M: float | None = None, strategy: str = "most_frequent_pair"):
    """Quadratize ``h`` by repeated pair substitution ``z = x*y``.

    Each substitution adds ``M * (xy - 2xz - 2yz + 3z)``. Returns the QUBO
    and a log of ``{"variable", "pair", "M"}`` records in substitution order.
    """
    if strategy != "most_frequent_pair":
        raise InputError(f"unknown reduction strategy {strategy!r}")
    if M is None:
        M = default_penalty(h)
    if not M > 0:
        raise NonPositiveM(f"penalty weight must be positive, got {M}")
    terms = dict(h.terms)
    taken = {str(v) for v in h.variables} | set(h.variables)
    log = []
    penalties: list[tuple] = []
    while True:
        high = [t for t in terms if len(t) > 2]
        if not high:
            break
        counts: Counter = Counter()
        for t in high:
            for p in itertools.combinations(sorted(t, key=vkey), 2):
                counts[p] += 1
        a, b = min(counts, key=lambda p: (-counts[p], vkey(p[0]), vkey(p[1])))
        z = _fresh_name(a, b, taken)
        taken.add(z)
        new: dict = {}
        for t, c in terms.items():
            if len(t) > 2 and a in t and b in t:
                t = (t - {a, b}) | {z}
            new[t] = new.get(t, 0.0) + c
        terms = new
        penalties.append((a, b, z))
        log.append({"variable": z, "pair": [a, b], "M": M})
    lin: dict = {}
    quad: dict = {}
    for t, c in terms.items():
        vs = sorted(t, key=vkey)
        if len(vs) == 1:
            lin[vs[0]] = lin.get(vs[0], 0.0) + c
        else:
            p = _pair(*vs)
            quad[p] = quad.get(p, 0.0) + c
    for a, b, z in penalties:
        for key, c in (((a, b), M), ((a, z), -2 * M), ((b, z), -2 * M)):
            p = _pair(*key)
            quad[p] = quad.get(p, 0.0) + c
        lin[z] = lin.get(z, 0.0) + 3 * M
    for v in h.variables:
        lin.setdefault(v, 0.0)
    return QuboModel(lin, quad, h.offset), log


def extend_assignment(assignment: dict, log) -> dict:
    """Fill substituted variables consistently (``z = x*y``)."""
    out = dict(assignment)
    for rec in log:
        a, b = rec["pair"]
        out[rec["variable"]] = out[a] * out[b]
    return out


# --- exact oracles -----------------------------------------------------

def _states(n: int, start: int, stop: int, domain) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.int64)) & 1
    lo, hi = domain
    return np.where(bits == 1, hi, lo).astype(float)


def brute_force_solve(model: Model, tol: float = 1e-9):
    """Exhaustive minimum; returns ``(energy, [assignments])`` in enumeration order."""
    order = model.variables
    n = len(order)
    if n > BRUTE_FORCE_MAX:
        raise TooManyVariables(f"{n} variables exceeds brute-force limit {BRUTE_FORCE_MAX}")
    total = 1 << n
    best = np.inf
    hits: list[np.ndarray] = []
    for start in range(0, total, _CHUNK):
        vals = _states(n, start, min(total, start + _CHUNK), model.domain)
        e = model.energies(vals, order)
        m = float(e.min())
        if m < best - tol * max(1.0, abs(m)):
            best = m
            hits = []
        sel = vals[e <= best + tol * max(1.0, abs(best))]
        if len(sel):
            hits.append(sel)
    rows = np.concatenate(hits) if hits else np.zeros((1, 0))
    e = model.energies(rows, order)
    best = float(e.min())
    rows = rows[e <= best + tol * max(1.0, abs(best))]
    return best, [{v: int(x) for v, x in zip(order, r)} for r in rows]


def boltzmann_distribution(model: Model, T: float) -> dict:
    """Exact ``P(s) = exp(-E(s)/T) / Z`` keyed by value tuples in ``model.variables`` order."""
    if not T > 0:
        raise NonPositiveT(f"temperature must be positive, got {T}")
    n = model.num_variables
    if n > BOLTZMANN_MAX:
        raise TooManyVariables(f"{n} variables exceeds Boltzmann limit {BOLTZMANN_MAX}")
    vals = _states(n, 0, 1 << n, model.domain)
    logits = -model.energies(vals) / T
    p = np.exp(logits - logsumexp(logits))
    return {tuple(int(x) for x in r): float(pi) for r, pi in zip(vals, p)}


# --- model files -------------------------------------------------------

def model_from_json(data, negate_sign: bool = False) -> Model:
    """Load a model file; ``negate_sign`` flips every coefficient."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    try:
        vartype = str(data.get("vartype", SPIN)).upper()
        if vartype not in (SPIN, BINARY):
            raise InvalidModel(f"unknown vartype {vartype!r}")
        offset = float(data.get("offset", 0.0))
        linear = {k: float(v) for k, v in data.get("linear", {}).items()}
        quad = {}
        for k, v in data.get("quadratic", {}).items():
            parts = k.split(",") if isinstance(k, str) else list(k)
            if len(parts) != 2:
                raise InvalidModel(f"bad quadratic key {k!r}")
            a, b = (p.strip() for p in parts)
            quad[_pair(a, b)] = quad.get(_pair(a, b), 0.0) + float(v)
        if "terms" in data:
            terms: dict = {}
            for v, c in linear.items():
                terms[frozenset([v])] = terms.get(frozenset([v]), 0.0) + c
            for k, c in quad.items():
                terms[frozenset(k)] = terms.get(frozenset(k), 0.0) + c
            for t in data["terms"]:
                key = tuple(str(x) for x in t["vars"])
                if len(set(key)) != len(key):
                    raise InvalidModel(f"repeated variable in term {key}")
                terms[frozenset(key)] = terms.get(frozenset(key), 0.0) + float(t["coeff"])
            model = spin_hubo_to_binary(terms, offset) if vartype == SPIN else HuboModel(terms, offset)
        elif vartype == SPIN:
            model = IsingModel(linear, quad, offset)
        else:
            model = QuboModel(linear, quad, offset)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InvalidModel(f"malformed model file: {exc}") from exc
    return negate(model) if negate_sign else model


# --- samples -----------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    assignment: dict
    energy: float
    occurrences: int = 1
    chain_break_fraction: float = 0.0


class SampleSet:
    """Distinct assignments with energies, counts and chain-break fractions."""

    def __init__(self, records, variables=None):
        self.records: list[Sample] = list(records)
        for r in self.records:
            if r.occurrences < 1:
                raise InputError("occurrences must be >= 1")
        if variables is None:
            vs = {v for r in self.records for v in r.assignment}
            variables = sorted(vs, key=vkey)
        self.variables = list(variables)

    @classmethod
    def from_rows(cls, model: Model, rows, order=None, chain_break=None, counts=None) -> "SampleSet":
        """Aggregate sample rows (values in ``order``) into a sorted set."""
        order = model.variables if order is None else list(order)
        rows = np.asarray(rows)
        if rows.ndim != 2:
            rows = rows.reshape(len(rows), len(order))
        counts = np.ones(len(rows), dtype=np.int64) if counts is None else np.asarray(counts)
        cb = np.zeros(len(rows)) if chain_break is None else np.asarray(chain_break, dtype=float)
        occ: dict = {}
        brk: dict = {}
        for r, c, b in zip(map(tuple, rows.astype(int).tolist()), counts.tolist(), cb.tolist()):
            occ[r] = occ.get(r, 0) + c
            brk[r] = brk.get(r, 0.0) + b * c
        keys = list(occ)
        if not keys:
            return cls([], order)
        e = model.energies(np.array(keys, dtype=float), order) if order else np.full(len(keys), model.offset)
        recs = [
            Sample(dict(zip(order, k)), float(ei), occ[k], brk[k] / occ[k])
            for k, ei in zip(keys, e)
        ]
        recs.sort(key=lambda s: (s.energy, [s.assignment[v] for v in order]))
        return cls(recs, order)

    def verify(self, model: Model, tol: float = 1e-9) -> bool:
        return all(abs(energy(model, r.assignment) - r.energy) <= tol for r in self.records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def total(self) -> int:
        return sum(r.occurrences for r in self.records)

    @property
    def best(self) -> Sample | None:
        return min(self.records, key=lambda r: r.energy, default=None)

    def counts(self) -> dict:
        return {tuple(r.assignment[v] for v in self.variables): r.occurrences for r in self.records}

    def distribution(self) -> dict:
        t = self.total
        return {k: c / t for k, c in self.counts().items()}

    def energy_histogram(self) -> dict:
        hist: dict = {}
        for r in self.records:
            key = round(r.energy, 9)
            hist[key] = hist.get(key, 0) + r.occurrences
        return dict(sorted(hist.items()))

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            rec = {
                "sample": {str(v): r.assignment[v] for v in self.variables},
                "energy": r.energy,
                "num_occurrences": r.occurrences,
                "chain_break_fraction": r.chain_break_fraction,
            }
            lines.append(json.dumps(rec, sort_keys=False))
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str, model: Model | None = None) -> "SampleSet":
        lookup = {str(v): v for v in model.variables} if model is not None else {}
        recs = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            a = {lookup.get(k, k): int(x) for k, x in d["sample"].items()}
            recs.append(Sample(a, float(d["energy"]), int(d.get("num_occurrences", 1)), float(d.get("chain_break_fraction", 0.0))))
        return cls(recs, model.variables if model is not None else None)


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
