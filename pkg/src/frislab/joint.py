"""Alternating phase-shift alignment and MRT beamforming for a fixed element set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateChannelError
from .link import SnrContext, aligned_phases, effective_gain, random_phases, snr, uniform_beamformer


@dataclass(frozen=True)
class AltOptParams:
    tolerance: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class LinkDesign:
    beamformer: np.ndarray
    phases: np.ndarray
    snr_trace: list = field(default_factory=list)
    converged: bool = False

    @property
    def snr(self):
        return self.snr_trace[-1]


def mrt_beamformer(h, phases, G):
    row = (np.conj(h) * np.exp(1j * np.asarray(phases))) @ np.atleast_2d(G)
    norm = np.linalg.norm(row)
    if norm == 0:
        raise DegenerateChannelError("effective row vector h^H Psi G is zero")
    return np.conj(row) / norm


def alternating_optimize(h, G, ctx: SnrContext, params: AltOptParams = AltOptParams()) -> LinkDesign:
    h = np.asarray(h)
    G = np.atleast_2d(np.asarray(G))
    w = uniform_beamformer(G.shape[1])
    trace = []
    converged = False
    for _ in range(params.max_iter):
        phases = aligned_phases(h, G, w)
        w = mrt_beamformer(h, phases, G)
        value = snr(effective_gain(h, phases, G, w), ctx)
        if trace and value - trace[-1] < params.tolerance * trace[-1]:
            # never let round-off register as a decrease
            trace.append(max(value, trace[-1]))
            converged = True
            break
        trace.append(value)
    return LinkDesign(beamformer=w, phases=phases, snr_trace=trace, converged=converged)


def alternating_gain_batch(h, G, params: AltOptParams = AltOptParams()):
    """Converged ``|gain|`` for a batch of links.

    ``h`` is ``(B, M)`` and ``G`` is ``(B, M, L)``; every link follows the same
    iteration and stopping rule as :func:`alternating_optimize`.
    """
    hc = np.conj(np.asarray(h))
    G = np.asarray(G)
    batch, _, n_ant = G.shape
    w = np.tile(uniform_beamformer(n_ant), (batch, 1))[:, :, None]
    best = np.full(batch, -1.0)
    active = np.ones(batch, dtype=bool)
    for _ in range(params.max_iter):
        p = hc * (G @ w)[:, :, 0]
        mag = np.abs(p)
        # aligned phases turn every term of h^H Psi (G w) into |p_m|
        rot = np.divide(np.conj(p), mag, out=np.ones_like(p), where=mag > 0)
        row = ((hc * rot)[:, None, :] @ G)[:, 0, :]
        norm = np.sqrt(np.sum(row.real**2 + row.imag**2, axis=1))
        if np.any(norm[active] == 0):
            raise DegenerateChannelError("effective row vector h^H Psi G is zero")
        w_new = np.conj(row) / np.where(norm > 0, norm, 1.0)[:, None]
        value = norm**2
        done = active & (best >= 0) & (value - best < params.tolerance * best)
        upd = active & ~done
        w[upd, :, 0] = w_new[upd]
        best = np.where(upd, value, np.where(done, np.maximum(value, best), best))
        active &= ~done
        if not active.any():
            break
    return np.sqrt(best)


def evaluate_architecture(h, G, mode, ctx: SnrContext, params: AltOptParams = AltOptParams(), rng=None):
    """SNR of a fixed layout under random phases/uniform beam or under joint optimization."""
    if mode == "random_ps_uniform_w":
        phases = random_phases(len(h), rng)
        return snr(effective_gain(h, phases, G, uniform_beamformer(np.shape(G)[1])), ctx)
    if mode == "optimized_bf_ps":
        return alternating_optimize(h, G, ctx, params).snr
    raise ValueError(f"unknown mode {mode!r}")
