"""Samplers and physics oracles for Ising problems.

``simulated_anneal`` runs single-spin Metropolis sweeps, ``adiabatic_evolve``
integrates the Schrodinger equation for ``H(s) = F(s) H_P + G(s) H_T`` with
``H_T = -sum_i X_i``, ``perturb_ice`` injects Gaussian control errors and
``estimate_teff`` fits a Boltzmann temperature to observed counts.
"""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumObserved,
    EmptyModel,
    InputError,
    InvalidSchedule,
    NormDrift,
    TooManyVariables,
)
from .ising import IsingModel, SampleSet

ADIABATIC_MAX = 10
NORM_TOL = 1e-6
_FLAT = 1e-12
_LOG_HALF = float(np.log(0.5))


def read_seeds(seed: int, reads: int) -> list[np.random.SeedSequence]:
    """One independent stream per read; the same read always gets the same stream."""
    return [np.random.SeedSequence([seed, i]) for i in range(reads)]


# --- simulated annealing ------------------------------------------------

@dataclass(frozen=True)
class BetaSchedule:
    beta_min: float = 0.1
    beta_max: float = 10.0
    steps: int = 64

    def betas(self, sweeps: int) -> np.ndarray:
        """Inverse temperature for each sweep (geometric ladder held in ``steps`` plateaus)."""
        if not (self.beta_min > 0 and self.beta_max > 0):
            raise InputError("inverse temperatures must be positive")
        ladder = np.geomspace(self.beta_min, self.beta_max, max(1, self.steps))
        idx = np.minimum(np.arange(sweeps) * len(ladder) // max(sweeps, 1), len(ladder) - 1)
        return ladder[idx]

    @classmethod
    def fixed(cls, temperature: float) -> "BetaSchedule":
        return cls(1.0 / temperature, 1.0 / temperature, 1)


def _sa_block(h, nbr_idx, nbr_w, betas, seeds, chunk: int) -> np.ndarray:
    """Metropolis on a block of reads; each read draws only from its own generator."""
    n = len(h)
    r = len(seeds)
    gens = [np.random.Generator(np.random.PCG64(s)) for s in seeds]
    spins = np.empty((r, n))
    for k, g in enumerate(gens):
        spins[k] = np.where(g.random(n) < 0.5, -1.0, 1.0)
    sweeps = len(betas)
    for start in range(0, sweeps, chunk):
        stop = min(sweeps, start + chunk)
        u = np.stack([g.random((stop - start, n)) for g in gens], axis=1)
        logu = np.log(u, out=np.full_like(u, -np.inf), where=u > 0)
        for t in range(start, stop):
            beta = betas[t]
            lu = logu[t - start]
            for i in range(n):
                field = h[i] + spins[:, nbr_idx[i]] @ nbr_w[i] if len(nbr_idx[i]) else np.full(r, h[i])
                delta = -2.0 * spins[:, i] * field
                # zero-cost flips take a fair coin; always accepting them lets
                # domain walls ride along with the sweep and never annihilate
                thresh = np.where(np.abs(delta) < _FLAT, _LOG_HALF, -beta * delta)
                flip = lu[:, i] < thresh
                spins[flip, i] *= -1.0
    return spins


def simulated_anneal(
    model: IsingModel,
    sweeps: int = 1000,
    beta_schedule: BetaSchedule | tuple = BetaSchedule(),
    reads: int = 100,
    seed: int = 0,
    threads: int = 1,
    block: int = 256,
) -> SampleSet:
    """``reads`` independent Metropolis runs of ``sweeps`` sequential sweeps.

    Read ``i`` consumes only the stream ``SeedSequence([seed, i])``, so the
    result does not depend on ``threads`` or ``block``.
    """
    if reads < 1 or sweeps < 1:
        raise InputError("reads and sweeps must be >= 1")
    order = model.variables
    if not order:
        raise EmptyModel("model has no variables")
    if isinstance(beta_schedule, tuple):
        beta_schedule = BetaSchedule(*beta_schedule)
    betas = beta_schedule.betas(sweeps)
    idx = {v: i for i, v in enumerate(order)}
    h = np.array([model.linear[v] for v in order])
    nbrs: list[dict] = [dict() for _ in order]
    for (a, b), c in model.quadratic.items():
        i, j = idx[a], idx[b]
        nbrs[i][j] = nbrs[i].get(j, 0.0) + c
        nbrs[j][i] = nbrs[j].get(i, 0.0) + c
    nbr_idx = [np.array(sorted(d), dtype=np.int64) for d in nbrs]
    nbr_w = [np.array([d[j] for j in sorted(d)]) for d in nbrs]
    seeds = read_seeds(seed, reads)
    # keep each block's uniform buffer near 32 MB
    chunk = max(1, min(sweeps, (1 << 22) // max(1, len(order) * min(block, reads))))
    blocks = [seeds[i : i + block] for i in range(0, reads, block)]

    def run(b):
        return _sa_block(h, nbr_idx, nbr_w, betas, b, chunk)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    rows = np.concatenate(parts).astype(int)
    return SampleSet.from_rows(model, rows, order)


# --- annealing schedules --------------------------------------------------

@dataclass(frozen=True)
class AnnealSchedule:
    """Piecewise-linear ``F(s)``, ``G(s)`` on ``s`` in [0, 1] stretched over ``total_time``."""

    points: tuple
    total_time: float = 1.0

    def __post_init__(self):
        pts = tuple((float(s), float(f), float(g)) for s, f, g in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise InvalidSchedule("schedule needs at least two points")
        ss = [p[0] for p in pts]
        if ss[0] != 0.0 or ss[-1] != 1.0 or any(b <= a for a, b in zip(ss, ss[1:])):
            raise InvalidSchedule("s must increase strictly from 0 to 1")
        if any(p[1] < 0 or p[2] < 0 for p in pts):
            raise InvalidSchedule("F and G must be non-negative")
        if not self.total_time > 0:
            raise InvalidSchedule("total_time must be positive")
        if pts[0][1] > 0.1 * pts[0][2]:
            warnings.warn("F(0) is not much smaller than G(0); the start state is not the ground state", stacklevel=2)
        if pts[-1][2] > 1e-3 * max(1.0, pts[-1][1]):
            warnings.warn("G(1) is not close to zero", stacklevel=2)

    @classmethod
    def linear(cls, total_time: float = 1.0) -> "AnnealSchedule":
        return cls(((0.0, 0.0, 1.0), (1.0, 1.0, 0.0)), total_time)

    @classmethod
    def from_csv(cls, text: str, total_time: float = 1.0) -> "AnnealSchedule":
        rows = []
        for rec in csv.reader(io.StringIO(text)):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append(tuple(float(x) for x in rec[:3]))
            except ValueError:
                if rows:
                    raise InvalidSchedule(f"bad schedule row {rec!r}") from None
                continue  # header
            if len(rows[-1]) != 3:
                raise InvalidSchedule(f"bad schedule row {rec!r}")
        return cls(tuple(rows), total_time)

    def at(self, s: float) -> tuple[float, float]:
        ss, ff, gg = zip(*self.points)
        return float(np.interp(s, ss, ff)), float(np.interp(s, ss, gg))


# --- exact evolution ------------------------------------------------------

def problem_diagonal(model: IsingModel) -> np.ndarray:
    """``H_P`` on the computational basis: bit ``q`` of the index set means ``s_q = -1``."""
    order = model.variables
    n = len(order)
    idx = np.arange(1 << n)[:, None]
    spins = 1.0 - 2.0 * ((idx >> np.arange(n)) & 1)
    return model.energies(spins, order)


def _apply_transverse(psi: np.ndarray, n: int, theta: float) -> np.ndarray:
    """Apply ``exp(i theta X)`` to every qubit."""
    c, s = np.cos(theta), 1j * np.sin(theta)
    t = psi.reshape((2,) * n)
    for ax in range(n):
        a = np.take(t, 0, axis=ax)
        b = np.take(t, 1, axis=ax)
        t = np.stack((c * a + s * b, s * a + c * b), axis=ax)
    return t.reshape(-1)


def ground_population(model: IsingModel, psi: np.ndarray, tol: float = 1e-9) -> float:
    diag = problem_diagonal(model)
    ground = diag <= diag.min() + tol * max(1.0, abs(diag.min()))
    return float(np.sum(np.abs(psi[ground]) ** 2))


def adiabatic_evolve(
    model: IsingModel, schedule: AnnealSchedule, dt: float | None = None, seed: int = 0, reads: int = 100
) -> tuple[np.ndarray, SampleSet, dict]:
    """Strang-split evolution from ``|+>^N``; returns ``(psi, samples, info)``.

    Each step applies ``exp(-i F H_P dt/2) exp(-i G H_T dt) exp(-i F H_P dt/2)``
    with ``F, G`` at the step midpoint. Amplitude index bit ``q`` set means
    spin ``q`` is ``-1``.
    """
    order = model.variables
    n = len(order)
    if n > ADIABATIC_MAX:
        raise TooManyVariables(f"{n} variables exceeds dense-evolution limit {ADIABATIC_MAX}")
    if n == 0:
        raise EmptyModel("model has no variables")
    T = schedule.total_time
    dt = T / 1000 if dt is None else float(dt)
    if not dt > 0:
        raise InputError("dt must be positive")
    steps = max(1, int(np.ceil(T / dt - 1e-12)))
    dt = T / steps
    diag = problem_diagonal(model)
    psi = np.full(1 << n, 2 ** (-n / 2), dtype=complex)
    for k in range(steps):
        f, g = schedule.at((k + 0.5) / steps)
        half = np.exp(-0.5j * f * dt * diag)
        psi = half * psi
        psi = _apply_transverse(psi, n, g * dt)
        psi = half * psi
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    if drift > NORM_TOL:
        raise NormDrift(f"norm drifted by {drift:.3e}")
    probs = np.abs(psi) ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    outcomes = rng.choice(len(probs), size=reads, p=probs)
    spins = 1 - 2 * ((outcomes[:, None] >> np.arange(n)) & 1)
    samples = SampleSet.from_rows(model, spins, order)
    info = {"norm_drift": drift, "steps": steps, "ground_population": ground_population(model, psi)}
    return psi, samples, info


# --- noise and temperature ------------------------------------------------

@dataclass(frozen=True)
class IceNoise:
    mu_h: float = 0.0
    sigma_h: float = 0.0
    mu_J: float = 0.0
    sigma_J: float = 0.0

    def __post_init__(self):
        if self.sigma_h < 0 or self.sigma_J < 0:
            raise InputError("noise widths must be non-negative")


def perturb_ice(model: IsingModel, noise: IceNoise, seed: int = 0) -> IsingModel:
    """Add ``mu + N(0, sigma)`` to every bias and coupling."""
    rng = np.random.default_rng(seed)
    order = model.variables
    dh = noise.mu_h + noise.sigma_h * rng.standard_normal(len(order))
    keys = sorted(model.quadratic, key=lambda k: (order.index(k[0]), order.index(k[1])))
    dj = noise.mu_J + noise.sigma_J * rng.standard_normal(len(keys))
    lin = {v: model.linear[v] + d for v, d in zip(order, dh)}
    quad = {k: model.quadratic[k] + d for k, d in zip(keys, dj)}
    return IsingModel(lin, quad, model.offset)


def estimate_teff(model: IsingModel, samples: SampleSet) -> float:
    """Weighted least squares of ``log n(s)`` against ``E(s)``; slope is ``-1/T``.

    Fitting log counts with a free intercept is the same as regressing every
    pairwise log count ratio on its energy difference.
    """
    e = np.array([r.energy for r in samples.records])
    n = np.array([r.occurrences for r in samples.records], dtype=float)
    if len(np.unique(np.round(e, 9))) < 2:
        raise DegenerateSpectrumObserved("samples cover fewer than two energy levels")
    w = n
    y = np.log(n)
    em = np.sum(w * e) / w.sum()
    ym = np.sum(w * y) / w.sum()
    slope = np.sum(w * (e - em) * (y - ym)) / np.sum(w * (e - em) ** 2)
    if not slope < 0:
        raise DegenerateSpectrumObserved("counts do not fall with energy; no positive temperature fits")
    return float(-1.0 / slope)
