"""Evolutionary PSO over preset positions, plus an exhaustive oracle.

Fitness callables are batched: they receive an ``(B, M)`` integer array of
preset indices (element ``m`` in subarea ``m``) and return ``B`` values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleError, SearchSpaceTooLarge
from .geometry import DISTANCE_RTOL, PresetGrid, Selection, SurfaceConfig
from .joint import AltOptParams, alternating_gain_batch


@dataclass(frozen=True)
class EpsoParams:
    swarm_size: int = 150
    max_iter: int = 20
    inertia: float = 0.6
    c1: float = 1.8
    c2: float = 1.8
    mutation_std_m: float | None = None  # None means one lattice pitch
    rng_seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 1 or self.max_iter < 1:
            raise ValueError("swarm_size and max_iter must be positive")
        if not 0 < self.inertia <= 1:
            raise ValueError(f"inertia must lie in (0, 1], got {self.inertia}")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("acceleration coefficients must be nonnegative")
        if self.mutation_std_m is not None and self.mutation_std_m < 0:
            raise ValueError("mutation_std_m must be nonnegative")


@dataclass
class Swarm:
    """Vectorized particle state: ``position``/``velocity`` are ``(S, M, 2)``."""

    position: np.ndarray
    velocity: np.ndarray
    indices: np.ndarray
    fitness: np.ndarray
    best_position: np.ndarray
    best_indices: np.ndarray
    best_fitness: np.ndarray


@dataclass
class EpsoResult:
    selection: Selection
    fitness: float
    trace: list = field(default_factory=list)
    history: list = field(default_factory=list, repr=False)


def velocity_update(velocity, position, personal_best, global_best, params: EpsoParams, rng):
    """Inertia plus cognitive and social pulls; one ``(r1, r2)`` pair per particle.

    Arrays may be ``(M, 2)`` for a single particle or ``(S, M, 2)`` for a swarm.
    """
    velocity = np.asarray(velocity, dtype=float)
    lead = velocity.shape[:-2]
    r1 = rng.uniform(size=lead)[..., None, None]
    r2 = rng.uniform(size=lead)[..., None, None]
    return (
        params.inertia * velocity
        + params.c1 * r1 * (personal_best - position)
        + params.c2 * r2 * (global_best - position)
    )


def _snap(raw, grid: PresetGrid):
    """Nearest preset of each element's own subarea as in-subarea slots ``(..., M)``.

    Subareas are rectangular lattice blocks, so the Euclidean nearest preset is
    found per axis; rounding halves down reproduces the lowest-index tie-break.
    """
    n_h = grid.lattice_shape[0]
    sub_h, sub_v = grid.subarea_shape
    first = grid.subarea_members[:, 0]
    col0, row0 = first % n_h, first // n_h
    col = np.clip(np.ceil(raw[..., 0] / grid.spacing[0] - 0.5), col0, col0 + sub_h - 1)
    row = np.clip(np.ceil(raw[..., 1] / grid.spacing[1] - 0.5), row0, row0 + sub_v - 1)
    return ((row - row0) * sub_h + (col - col0)).astype(np.intp)


def _repair(raw_one, slots, grid: PresetGrid, dmin):
    """Greedy by element index: move each element to its nearest preset that clears ``dmin``."""
    members = grid.subarea_members
    placed = []
    out = slots.copy()
    for m in range(members.shape[0]):
        cand = grid.coords[members[m]]
        d2 = np.sum((cand - raw_one[m]) ** 2, axis=1)
        order = np.lexsort((np.arange(len(d2)), d2))
        for k in order:
            if all(np.hypot(*(cand[k] - p)) >= dmin * (1 - DISTANCE_RTOL) for p in placed):
                out[m] = k
                placed.append(cand[k])
                break
        else:
            raise InfeasibleError(m)
    return out


def _violates(indices, grid: PresetGrid, dmin):
    pos = grid.coords[indices]  # (B, M, 2)
    diff = pos[:, :, None, :] - pos[:, None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    m = indices.shape[1]
    d2[:, np.arange(m), np.arange(m)] = np.inf
    return np.any(d2 < (dmin * (1 - DISTANCE_RTOL)) ** 2, axis=(1, 2))


def spacing_binds(grid: PresetGrid, config: SurfaceConfig):
    """False when any two distinct presets already satisfy the minimum spacing."""
    return config.min_distance_m > min(grid.spacing) * (1 + DISTANCE_RTOL) and grid.num_subareas > 1


def project_batch(raw, grid: PresetGrid, config: SurfaceConfig):
    """Vectorized projection of ``(B, M, 2)`` raw coordinates to preset indices ``(B, M)``."""
    raw = np.asarray(raw, dtype=float)
    slots = _snap(raw, grid)
    m = grid.num_subareas
    dmin = config.min_distance_m
    if spacing_binds(grid, config):
        indices = grid.subarea_members[np.arange(m), slots]
        for b in np.flatnonzero(_violates(indices, grid, dmin)):
            slots[b] = _repair(raw[b], slots[b], grid, dmin)
    return grid.subarea_members[np.arange(m), slots]


def project_feasible(raw, grid: PresetGrid, config: SurfaceConfig) -> Selection:
    raw = np.asarray(raw, dtype=float).reshape(1, grid.num_subareas, 2)
    return Selection.from_indices(grid, project_batch(raw, grid, config)[0])


def mutation_std(params: EpsoParams, grid: PresetGrid):
    return grid.spacing[0] if params.mutation_std_m is None else params.mutation_std_m


def position_update(position, velocity, grid: PresetGrid, config: SurfaceConfig, params: EpsoParams, rng):
    """Move, mutate with Gaussian noise, then project back onto feasible presets.

    Returns ``(indices, coordinates)`` with the same leading shape as ``position``.
    """
    raw = np.asarray(position, dtype=float) + velocity
    sigma = mutation_std(params, grid)
    if sigma > 0:
        raw = raw + rng.normal(0.0, sigma, size=raw.shape)
    batch = raw.reshape((-1,) + raw.shape[-2:])
    idx = project_batch(batch, grid, config).reshape(raw.shape[:-1])
    return idx, grid.coords[idx]


class _Memo:
    """Evaluate each distinct selection once; fitness must be deterministic."""

    def __init__(self, fitness):
        self.fitness = fitness
        self.cache = {}

    def __call__(self, indices):
        uniq, inverse = np.unique(indices, axis=0, return_inverse=True)
        keys = [row.tobytes() for row in uniq]
        missing = [k for k, key in enumerate(keys) if key not in self.cache]
        if missing:
            values = np.asarray(self.fitness(uniq[missing]), dtype=float)
            for k, v in zip(missing, values):
                self.cache[keys[k]] = float(v)
        return np.array([self.cache[key] for key in keys])[inverse.ravel()]


def _initial_swarm(grid, config, params, rng):
    s, m = params.swarm_size, grid.num_subareas
    lo = grid.subarea_bounds[:, 0:2]
    hi = grid.subarea_bounds[:, 2:4]
    raw = lo + (hi - lo) * rng.uniform(size=(s, m, 2))
    pitch = np.asarray(grid.spacing)
    velocity = rng.uniform(-1.0, 1.0, size=(s, m, 2)) * pitch
    idx = project_batch(raw, grid, config)
    return idx, grid.coords[idx], velocity


def epso_optimize(grid: PresetGrid, config: SurfaceConfig, params: EpsoParams, fitness, rng=None,
                  keep_history=False) -> EpsoResult:
    """Swarm search over whole configurations; each particle holds all ``M`` positions."""
    if rng is None:
        rng = np.random.default_rng(params.rng_seed)
    fitness = _Memo(fitness)
    idx, pos, vel = _initial_swarm(grid, config, params, rng)
    fit = np.asarray(fitness(idx), dtype=float)
    swarm = Swarm(pos, vel, idx, fit, pos.copy(), idx.copy(), fit.copy())
    g = int(np.argmax(fit))
    g_pos, g_idx, g_fit = pos[g].copy(), idx[g].copy(), float(fit[g])
    trace = [g_fit]
    history = [idx.copy()] if keep_history else []

    for _ in range(params.max_iter):
        swarm.velocity = velocity_update(
            swarm.velocity, swarm.position, swarm.best_position, g_pos, params, rng
        )
        swarm.indices, swarm.position = position_update(
            swarm.position, swarm.velocity, grid, config, params, rng
        )
        swarm.fitness = np.asarray(fitness(swarm.indices), dtype=float)
        improved = swarm.fitness > swarm.best_fitness
        swarm.best_fitness[improved] = swarm.fitness[improved]
        swarm.best_position[improved] = swarm.position[improved]
        swarm.best_indices[improved] = swarm.indices[improved]
        b = int(np.argmax(swarm.best_fitness))
        if swarm.best_fitness[b] > g_fit:
            g_fit = float(swarm.best_fitness[b])
            g_pos = swarm.best_position[b].copy()
            g_idx = swarm.best_indices[b].copy()
        trace.append(g_fit)
        if keep_history:
            history.append(swarm.indices.copy())
    return EpsoResult(Selection.from_indices(grid, g_idx), g_fit, trace, history)


def exhaustive_select(grid: PresetGrid, config: SurfaceConfig, fitness, cap=1_000_000, chunk=8192):
    """Enumerate one preset per subarea; best spacing-feasible combination, lexicographic ties."""
    members = grid.subarea_members
    per, m = members.shape[1], members.shape[0]
    count = per**m
    if count > cap:
        raise SearchSpaceTooLarge(count, cap)
    dmin = config.min_distance_m
    best_val, best_idx = -np.inf, None
    combos = itertools.product(*[range(per)] * m)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp).reshape(-1, m)
        if not len(block):
            break
        idx = members[np.arange(m), block]
        if spacing_binds(grid, config):
            idx = idx[~_violates(idx, grid, dmin)]
            if not len(idx):
                continue
        vals = np.asarray(fitness(idx), dtype=float)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_idx = float(vals[k]), idx[k]
    if best_idx is None:
        raise InfeasibleError(None, "no combination satisfies the minimum spacing")
    return Selection.from_indices(grid, best_idx), best_val


def spo_fitness(channels, phases, w):
    """``|h^H Psi G w|^2`` for fixed phases (one per subarea element) and beamformer."""
    gw = channels.g_matrix @ w
    hc = np.conj(channels.h_vector)
    rot = np.exp(1j * np.asarray(phases))

    def fitness(indices):
        return np.abs(np.sum(hc[indices] * rot * gw[indices], axis=-1)) ** 2

    return fitness


def bf_ps_fitness(channels, params: AltOptParams = AltOptParams()):
    """Converged ``|gain|^2`` of the alternating optimizer on each candidate selection."""

    def fitness(indices):
        return alternating_gain_batch(channels.h_vector[indices], channels.g_matrix[indices], params) ** 2

    return fitness
