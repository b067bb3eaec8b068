"""End-to-end gain and SNR of the reflected link.

Phase configurations are real arrays of angles in ``[0, 2*pi)`` and
beamformers are unit-norm complex arrays of length ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SnrContext:
    gamma_bar: float
    rate_threshold_bpshz: float = 1.0

    def __post_init__(self):
        if not self.gamma_bar > 0:
            raise ValueError(f"gamma_bar must be positive, got {self.gamma_bar}")

    @classmethod
    def from_db(cls, gamma_bar_db, rate_threshold_bpshz=1.0):
        return cls(10.0 ** (gamma_bar_db / 10.0), rate_threshold_bpshz)


def wrap_phases(phases):
    return np.mod(np.asarray(phases, dtype=float), TWO_PI)


def _check_dims(h, phases, G, w):
    m, l = G.shape
    if h.shape != (m,) or (phases is not None and np.shape(phases) != (m,)) or w.shape != (l,):
        raise ValueError(
            f"dimension mismatch: h {h.shape}, phases {np.shape(phases)}, G {G.shape}, w {w.shape}"
        )


def effective_gain(h, phases, G, w) -> complex:
    """``h^H diag(exp(j*phases)) G w``."""
    h, G, w = np.asarray(h), np.atleast_2d(np.asarray(G)), np.asarray(w)
    _check_dims(h, phases, G, w)
    return complex(np.sum(np.conj(h) * np.exp(1j * np.asarray(phases)) * (G @ w)))


def snr(gain, ctx: SnrContext) -> float:
    return ctx.gamma_bar * abs(gain) ** 2


def aligned_phases(h, G, w):
    """Co-phase every reflected path so the gain becomes ``sum_m |h_m| |g_m w|``."""
    h, G, w = np.asarray(h), np.atleast_2d(np.asarray(G)), np.asarray(w)
    _check_dims(h, None, G, w)
    gw = G @ w
    phases = np.angle(h) - np.angle(gw)
    phases[(h == 0) | (gw == 0)] = 0.0
    return wrap_phases(phases)


def random_phases(m, rng):
    return rng.uniform(0.0, TWO_PI, size=m)


def uniform_beamformer(num_antennas):
    if num_antennas < 1:
        raise ValueError("need at least one antenna")
    return np.full(num_antennas, 1.0 / np.sqrt(num_antennas), dtype=complex)


def gain_upper_bound(h, G):
    """``sum_m |h_m| ||g_m||``; no phase/beamformer pair exceeds it in magnitude."""
    return float(np.sum(np.abs(h) * np.linalg.norm(np.atleast_2d(G), axis=1)))
