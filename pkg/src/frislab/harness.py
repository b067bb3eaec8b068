"""Monte Carlo outage scenarios for the FRIS and RIS architectures."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    DEFAULT_ARG_SCALE,
    PathLoss,
    correlation_matrix,
    covariance_factor,
    restrict_channels,
    sample_channels,
)
from .epso import EpsoParams, bf_ps_fitness, epso_optimize, spo_fitness
from .geometry import SurfaceConfig, build_preset_grid, compact_ris_layout, conventional_ris_layout
from .joint import AltOptParams, alternating_gain_batch
from .link import effective_gain, random_phases, uniform_beamformer
from .mixture import TrainingSet, analytic_op, as_mixture, em_fit, ks_fit, mom_fit

log = logging.getLogger(__name__)

ARCHITECTURES = (
    "fris_spo",
    "fris_spo_bf_ps",
    "conventional_random",
    "conventional_bf_ps",
    "compact_bf_ps",
)
FIT_METHODS = ("em", "mom", "ks")


@dataclass(frozen=True)
class FitSpec:
    n_components: int = 2
    t_sp: int = 10_000
    tol: float = 1e-3
    methods: tuple = FIT_METHODS

    def __post_init__(self):
        unknown = set(self.methods) - set(FIT_METHODS)
        if unknown:
            raise ValueError(f"unknown fit methods {sorted(unknown)}; choose from {FIT_METHODS}")


@dataclass(frozen=True)
class ScenarioSpec:
    surface: SurfaceConfig
    architecture: str
    num_bs_antennas: int = 3
    gamma_bar_grid_db: tuple = tuple(range(90, 151, 2))
    trials: int = 10_000
    rate: float = 1.0
    beta1_db: float = -40.0
    beta2_db: float = -40.0
    epso: EpsoParams = EpsoParams()
    altopt: AltOptParams = AltOptParams()
    fit: FitSpec = FitSpec()
    master_seed: int = 0
    arg_scale: float = DEFAULT_ARG_SCALE
    jitter: float = 1e-10
    compact_spacing_m: float | None = None  # None means half a wavelength

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}; choose from {ARCHITECTURES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        grid = np.asarray(self.gamma_bar_grid_db, dtype=float)
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("gamma_bar_grid_db must be non-empty and strictly increasing")
        if self.num_bs_antennas < 1:
            raise ValueError("num_bs_antennas must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        object.__setattr__(self, "gamma_bar_grid_db", tuple(float(g) for g in grid))

    @property
    def pathloss(self):
        return PathLoss.from_db(self.beta1_db, self.beta2_db, self.surface.element_area_m2)

    @property
    def is_fris(self):
        return self.architecture.startswith("fris")


class ScenarioContext:
    """Everything a trial needs that does not depend on the trial index."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        cfg = spec.surface
        self.grid = build_preset_grid(cfg)
        if spec.is_fris:
            positions = self.grid.coords
        elif spec.architecture.startswith("conventional"):
            self.layout = conventional_ris_layout(self.grid)
            positions = self.layout.positions
        else:
            spacing = spec.compact_spacing_m or cfg.wavelength_m / 2.0
            positions = compact_ris_layout(cfg, spacing)
        self.positions = positions
        self.correlation = correlation_matrix(positions, cfg.wavelength_m, spec.arg_scale)
        self.factor = covariance_factor(self.correlation, jitter=spec.jitter)
        self.pathloss = spec.pathloss


def trial_streams(master_seed, trial_index):
    """Independent generators for channels, phases and the swarm of one trial."""
    seq = np.random.SeedSequence([int(master_seed), int(trial_index)])
    return [np.random.default_rng(s) for s in seq.spawn(3)]


def run_trial(spec: ScenarioSpec, trial_index: int, ctx: ScenarioContext | None = None) -> float:
    """Magnitude ``z`` of the final end-to-end gain for one trial."""
    ctx = ctx or ScenarioContext(spec)
    chan_rng, phase_rng, swarm_rng = trial_streams(spec.master_seed, trial_index)
    channels = sample_channels(ctx.factor, ctx.pathloss, spec.num_bs_antennas, chan_rng)
    m = spec.surface.num_active
    arch = spec.architecture

    if arch == "fris_spo":
        phases = random_phases(m, phase_rng)
        w = uniform_beamformer(spec.num_bs_antennas)
        fitness = spo_fitness(channels, phases, w)
        result = epso_optimize(ctx.grid, spec.surface, spec.epso, fitness, rng=swarm_rng)
        sub = restrict_channels(channels, result.selection)
        return abs(effective_gain(sub.h_vector, phases, sub.g_matrix, w))
    if arch == "fris_spo_bf_ps":
        fitness = bf_ps_fitness(channels, spec.altopt)
        result = epso_optimize(ctx.grid, spec.surface, spec.epso, fitness, rng=swarm_rng)
        sub = restrict_channels(channels, result.selection)
        return float(alternating_gain_batch(sub.h_vector[None], sub.g_matrix[None], spec.altopt)[0])
    if arch == "conventional_random":
        phases = random_phases(m, phase_rng)
        w = uniform_beamformer(spec.num_bs_antennas)
        return abs(effective_gain(channels.h_vector, phases, channels.g_matrix, w))
    # conventional_bf_ps, compact_bf_ps
    return float(alternating_gain_batch(channels.h_vector[None], channels.g_matrix[None], spec.altopt)[0])


def mc_outage(z_samples, gamma_bar, rate) -> float:
    """Fraction of samples with ``gamma_bar * z^2 < 2^rate - 1``."""
    z = np.asarray(z_samples, dtype=float)
    if z.size == 0:
        raise ValueError("need at least one sample")
    return float(np.mean(gamma_bar * z * z < 2.0**rate - 1.0))


@dataclass(frozen=True)
class CurvePoint:
    gamma_bar_db: float
    op_monte_carlo: float
    op_em: float
    op_mom: float
    op_ks: float
    trials_used: int


CURVE_COLUMNS = ("gamma_bar_db", "op_monte_carlo", "op_em", "op_mom", "op_ks", "trials_used")


@dataclass
class OpCurve:
    points: list
    spec: ScenarioSpec
    models: dict = field(default_factory=dict)
    samples: np.ndarray | None = field(default=None, repr=False)
    wall_time_s: float = 0.0
    truncated: bool = False

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points])


_worker_ctx = None


def _init_worker(spec):
    global _worker_ctx
    _worker_ctx = ScenarioContext(spec)


def _run_chunk(indices):
    return [run_trial(_worker_ctx.spec, t, _worker_ctx) for t in indices]


def run_trials(spec: ScenarioSpec, indices, threads=1, ctx=None):
    """``z`` for each trial index, in index order, however the work is split."""
    indices = list(indices)
    out = np.empty(len(indices))
    done = 0
    try:
        if threads <= 1 or len(indices) < 2:
            ctx = ctx or ScenarioContext(spec)
            for k, t in enumerate(indices):
                out[k] = run_trial(spec, t, ctx)
                done = k + 1
        else:
            chunks = np.array_split(np.arange(len(indices)), min(threads * 4, len(indices)))
            with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(spec,)) as pool:
                for chunk, values in zip(chunks, pool.map(_run_chunk, [[indices[i] for i in c] for c in chunks])):
                    out[chunk] = values
                    done = chunk[-1] + 1
    except KeyboardInterrupt:
        log.warning("interrupted after %d of %d trials", done, len(indices))
        return out[:done], True
    return out, False


def fit_models(samples, spec: ScenarioSpec):
    data = TrainingSet(samples, provenance=f"{spec.architecture} seed={spec.master_seed}")
    models = {}
    fs = spec.fit
    if "em" in fs.methods:
        rng = np.random.default_rng(np.random.SeedSequence([spec.master_seed, 2**31 - 1]))
        models["em"] = em_fit(data, fs.n_components, fs.tol, rng)
    if "mom" in fs.methods:
        models["mom"] = as_mixture(mom_fit(data), label="mom")
    if "ks" in fs.methods:
        models["ks"] = as_mixture(ks_fit(data), label="ks")
    return models


def run_scenario(spec: ScenarioSpec, threads=1, fit=True) -> OpCurve:
    start = time.perf_counter()
    ctx = ScenarioContext(spec) if threads <= 1 else None
    z, truncated = run_trials(spec, range(spec.trials), threads, ctx)
    models = {}
    if fit and spec.fit.methods and not truncated:
        t_sp = spec.fit.t_sp
        train = z[:t_sp]
        if len(train) < t_sp:
            extra, truncated = run_trials(spec, range(len(z), t_sp), threads, ctx)
            train = np.concatenate([train, extra])
        if not truncated:
            models = fit_models(train, spec)

    points = []
    for g_db in spec.gamma_bar_grid_db:
        g = 10.0 ** (g_db / 10.0)
        op = {k: float(analytic_op(models[k], g, spec.rate)) if k in models else float("nan") for k in FIT_METHODS}
        points.append(CurvePoint(g_db, mc_outage(z, g, spec.rate) if len(z) else float("nan"),
                                 op["em"], op["mom"], op["ks"], len(z)))
    return OpCurve(points, spec, models, z, time.perf_counter() - start, truncated)


def binomial_se(p, n):
    return np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / n)


