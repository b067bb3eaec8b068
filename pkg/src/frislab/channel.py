"""Jakes spatial correlation and correlated Rayleigh channel sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .exceptions import ConfigurationError, NumericalError

DEFAULT_ARG_SCALE = 2.0
JAKES_ARG_SCALE = 2.0 * np.pi


@dataclass(frozen=True)
class PathLoss:
    beta1: float
    beta2: float
    element_area_m2: float

    def __post_init__(self):
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {value}")
        if not self.element_area_m2 > 0:
            raise ConfigurationError(f"element_area_m2 must be positive, got {self.element_area_m2}")

    @classmethod
    def from_db(cls, beta1_db, beta2_db, element_area_m2):
        return cls(10.0 ** (beta1_db / 10.0), 10.0 ** (beta2_db / 10.0), element_area_m2)


@dataclass(frozen=True)
class CorrelationMatrix:
    entries: np.ndarray
    positions: np.ndarray
    arg_scale: float

    @property
    def size(self):
        return self.entries.shape[0]


def pairwise_distances(positions):
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def correlation_matrix(positions, wavelength, arg_scale=DEFAULT_ARG_SCALE) -> CorrelationMatrix:
    """Entry ``(a, b)`` is ``J0(arg_scale * |pos_a - pos_b| / wavelength)``."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] < 1:
        raise ValueError("need at least one position")
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    entries = j0(arg_scale * pairwise_distances(positions) / wavelength)
    entries.setflags(write=False)
    return CorrelationMatrix(entries, positions, float(arg_scale))


@dataclass(frozen=True)
class CovarianceFactor:
    """Lower-triangular ``F`` with ``F @ F.T == R + jitter * I``."""

    lower: np.ndarray
    jitter: float

    @property
    def size(self):
        return self.lower.shape[0]


def covariance_factor(R, jitter=1e-10, max_jitter=1e-6, growth=10.0) -> CovarianceFactor:
    """Cholesky factor of ``R + jitter*I``, escalating ``jitter`` geometrically up to ``max_jitter``."""
    entries = R.entries if isinstance(R, CorrelationMatrix) else np.asarray(R, dtype=float)
    eye = np.eye(entries.shape[0])
    current = float(jitter)
    while True:
        try:
            lower = np.linalg.cholesky(entries + current * eye)
        except np.linalg.LinAlgError:
            if current >= max_jitter:
                smallest = float(np.linalg.eigvalsh(entries)[0])
                raise NumericalError(
                    f"Cholesky failed with jitter {current:g}; smallest eigenvalue is about {smallest:.3e}"
                ) from None
            current = min(max(current * growth, 1e-16), max_jitter)
            continue
        lower.setflags(write=False)
        return CovarianceFactor(lower, current)


@dataclass(frozen=True)
class ChannelSet:
    """``g_matrix`` has one row per surface element and one column per BS antenna."""

    g_matrix: np.ndarray
    h_vector: np.ndarray
    realization_seed: int | None = None

    @property
    def num_elements(self):
        return self.h_vector.shape[0]

    @property
    def num_antennas(self):
        return self.g_matrix.shape[1]


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(factor: CovarianceFactor, pl: PathLoss, num_antennas: int, rng=None) -> ChannelSet:
    """Draw ``h ~ CN(0, A*beta2*R)`` and ``L`` independent columns ``g_l ~ CN(0, A*beta1*R)``.

    ``rng`` may be a seed or anything exposing ``standard_normal``.
    """
    seed = None
    if rng is None or isinstance(rng, (int, np.integer)):
        seed = None if rng is None else int(rng)
        rng = np.random.default_rng(rng)
    lower = factor.lower if isinstance(factor, CovarianceFactor) else np.asarray(factor)
    k = lower.shape[0]
    e = _complex_normal(rng, (k, num_antennas + 1))
    mixed = lower @ e
    h = np.sqrt(pl.element_area_m2 * pl.beta2) * mixed[:, 0]
    g = np.sqrt(pl.element_area_m2 * pl.beta1) * mixed[:, 1:]
    return ChannelSet(g, h, seed)


def restrict_channels(full: ChannelSet, sel) -> ChannelSet:
    idx = np.asarray(getattr(sel, "preset_indices", sel), dtype=np.intp)
    n = full.num_elements
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"selection indices must lie in [0, {n}), got {idx.tolist()}")
    return ChannelSet(full.g_matrix[idx], full.h_vector[idx], full.realization_seed)
