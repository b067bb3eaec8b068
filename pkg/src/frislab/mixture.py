"""Nakagami-m mixtures: EM fitting, moment/KS benchmarks and closed-form outage.

The estimator classes at the bottom follow the scikit-learn conventions
(``fit`` returns ``self``, learned state ends in ``_``, hyperparameters via
``get_params``) and wrap the plain functions above them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma, gammainc, gammaincc, gammaln, logsumexp
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ComponentCollapseError, DegenerateChannelError

SHAPE_CLAMP = 100.0


@dataclass(frozen=True)
class NakagamiComponent:
    weight: float
    shape: float
    mean_power: float


@dataclass
class MixtureModel:
    components: list
    fit_log: list = field(default_factory=list, repr=False)
    label: str = "em"
    converged: bool = True

    def __post_init__(self):
        if not self.components:
            raise ValueError("a mixture needs at least one component")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {total!r}, not 1")

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])

    @property
    def shapes(self):
        return np.array([c.shape for c in self.components])

    @property
    def mean_powers(self):
        return np.array([c.mean_power for c in self.components])

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c.weight * nakagami_pdf(r, c.shape, c.mean_power) for c in self.components)

    def cdf(self, r):
        r = np.asarray(r, dtype=float)
        return sum(c.weight * nakagami_cdf(r, c.shape, c.mean_power) for c in self.components)


@dataclass(frozen=True)
class TrainingSet:
    samples: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if s.size == 0:
            raise ValueError("training set is empty")
        if not np.all(s > 0) or not np.all(np.isfinite(s)):
            raise ValueError("training samples must be finite and strictly positive")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    def save(self, path):
        lines = [f"# {self.provenance}"] if self.provenance else []
        lines += [repr(float(x)) for x in self.samples]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        provenance, values = "", []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                provenance = provenance or line[1:].strip()
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
        return cls(np.array(values), provenance)


def _check_domain(r, m, omega):
    if np.any(np.asarray(m) <= 0) or np.any(np.asarray(omega) <= 0):
        raise ValueError("Nakagami shape and mean power must be positive")
    if np.any(np.asarray(r) < 0):
        raise ValueError("Nakagami support is r >= 0")


def nakagami_logpdf(r, m, omega):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return (
            math.log(2.0) + m * np.log(m) - gammaln(m) - m * np.log(omega)
            + (2.0 * m - 1.0) * np.log(r) - m * r * r / omega
        )


def nakagami_pdf(r, m, omega):
    _check_domain(r, m, omega)
    return np.exp(nakagami_logpdf(r, m, omega))


def nakagami_cdf(r, m, omega):
    _check_domain(r, m, omega)
    r = np.asarray(r, dtype=float)
    return gammainc(m, m * r * r / omega)


def sample_nakagami(m, omega, size, rng):
    """Draw Nakagami magnitudes as square roots of Gamma(m, omega/m) powers."""
    return np.sqrt(rng.gamma(m, omega / m, size=size))


def _gamma_shape_mle(delta):
    """Solve ``log m - digamma(m) = delta`` for the Gamma shape."""
    if delta <= 0:
        return SHAPE_CLAMP
    lo, hi = 1e-8, 1e8
    return brentq(lambda m: np.log(m) - digamma(m) - delta, lo, hi, xtol=1e-12)


def nakagami_mle(samples):
    """Single-population maximum-likelihood ``(m, omega)``."""
    power = np.asarray(samples, dtype=float) ** 2
    omega = float(power.mean())
    delta = math.log(omega) - float(np.mean(np.log(power)))
    return _gamma_shape_mle(delta), omega


def _shape_update(delta):
    return (1.0 + math.sqrt(1.0 + 4.0 * delta / 3.0)) / (4.0 * delta)


def _as_samples(data):
    if isinstance(data, TrainingSet):
        return data.samples
    return TrainingSet(data).samples


def mixture_loglik(samples, weights, shapes, omegas):
    logp = np.stack([np.log(a) + nakagami_logpdf(samples, m, o) for a, m, o in zip(weights, shapes, omegas)])
    return float(np.sum(logsumexp(logp, axis=0)))


def em_fit(data, n_components=2, tol=1e-3, rng=None, max_iter=1000, min_samples_per_component=100):
    """EM fit of a Nakagami-m mixture with the closed-form shape update.

    Stops once every shape and mean power moves by less than ``tol``
    (relative) between iterations.
    """
    r = _as_samples(data)
    n, q = r.size, int(n_components)
    if q < 1:
        raise ValueError("n_components must be >= 1")
    if n < min_samples_per_component * q:
        raise ValueError(f"need at least {min_samples_per_component * q} samples for {q} components, got {n}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    power = r * r
    log_power = np.log(power)
    m0, omega0 = nakagami_mle(r)
    spread = np.linspace(0.8, 1.2, q) if q > 1 else np.ones(1)
    alpha = rng.uniform(size=q)
    alpha = alpha / alpha.sum()
    shapes = m0 * spread[::-1]
    omegas = omega0 * spread
    clamped = np.zeros(q, dtype=bool)

    log = [dict(iteration=0, weights=alpha.copy(), shapes=shapes.copy(), mean_powers=omegas.copy(),
                loglik=mixture_loglik(r, alpha, shapes, omegas), clamped=clamped.copy())]
    converged = False
    for it in range(1, max_iter + 1):
        logp = np.stack([np.log(alpha[i]) + nakagami_logpdf(r, shapes[i], omegas[i]) for i in range(q)])
        tau = np.exp(logp - logsumexp(logp, axis=0))
        mass = tau.sum(axis=1)
        if np.any(mass < 1e-8 * n):
            bad = int(np.argmin(mass))
            raise ComponentCollapseError(
                f"component {bad} collapsed (responsibility mass {mass[bad]:.3g}); reduce the number of components"
            )
        new_omegas = tau @ power / mass
        new_alpha = mass / n
        # log of a weighted mean minus the weighted mean of logs: >= 0 by Jensen
        delta = (np.log(new_omegas) * mass - tau @ log_power) / mass
        new_shapes = np.empty(q)
        clamped = delta <= 0
        for i in range(q):
            new_shapes[i] = SHAPE_CLAMP if clamped[i] else _shape_update(delta[i])
        if clamped.any():
            warnings.warn("non-positive shape statistic; shape clamped to 100", RuntimeWarning, stacklevel=2)
        rel = np.max(np.abs(np.r_[new_shapes - shapes, new_omegas - omegas]) / np.r_[shapes, omegas])
        alpha, shapes, omegas = new_alpha, new_shapes, new_omegas
        log.append(dict(iteration=it, weights=alpha.copy(), shapes=shapes.copy(), mean_powers=omegas.copy(),
                        loglik=mixture_loglik(r, alpha, shapes, omegas), clamped=clamped.copy()))
        if rel < tol:
            converged = True
            break
    alpha = alpha / alpha.sum()
    comps = [NakagamiComponent(float(a), float(m), float(o)) for a, m, o in zip(alpha, shapes, omegas)]
    return MixtureModel(comps, log, label="em", converged=converged)


def mom_fit(data) -> NakagamiComponent:
    """Moment matching: ``omega = E[r^2]``, ``m = omega^2 / Var[r^2]``."""
    power = _as_samples(data) ** 2
    omega = float(power.mean())
    var = float(power.var())
    if var <= 1e-14 * omega * omega:
        raise DegenerateChannelError("samples have zero power variance; Nakagami shape is undefined")
    return NakagamiComponent(1.0, omega * omega / var, omega)


def ks_statistic(data, model) -> float:
    x = np.sort(_as_samples(data))
    n = x.size
    if isinstance(model, NakagamiComponent):
        F = nakagami_cdf(x, model.shape, model.mean_power)
    else:
        F = model.cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_fit(data, step=0.5, min_step=1e-6, max_evals=5000) -> NakagamiComponent:
    """Single Nakagami minimizing the KS distance; coordinate search in log-parameters from the MoM fit."""
    r = _as_samples(data)
    start = mom_fit(r)
    x = np.log([start.shape, start.mean_power])

    def objective(p):
        return ks_statistic(r, NakagamiComponent(1.0, math.exp(p[0]), math.exp(p[1])))

    best = objective(x)
    evals = 1
    while step > min_step and evals < max_evals:
        moved = False
        for axis in range(2):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[axis] += sign * step
                value = objective(trial)
                evals += 1
                if value < best:
                    x, best, moved = trial, value, True
                    break
        if not moved:
            step *= 0.5
    return NakagamiComponent(1.0, float(math.exp(x[0])), float(math.exp(x[1])))


def as_mixture(component: NakagamiComponent, label="single") -> MixtureModel:
    return MixtureModel([NakagamiComponent(1.0, component.shape, component.mean_power)], label=label)


def outage_threshold(gamma_bar, rate):
    """Magnitude below which ``log2(1 + gamma_bar * z^2) < rate``."""
    return np.sqrt((2.0**rate - 1.0) / np.asarray(gamma_bar, dtype=float))


def analytic_op(model: MixtureModel, gamma_bar, rate):
    """``1 - sum_i alpha_i Gamma(m_i, m_i (2^R - 1) / (gamma_bar Omega_i)) / Gamma(m_i)``."""
    gamma_bar = np.asarray(gamma_bar, dtype=float)
    thr = 2.0**rate - 1.0
    survive = sum(
        c.weight * gammaincc(c.shape, c.shape * thr / (gamma_bar * c.mean_power)) for c in model.components
    )
    return np.clip(1.0 - survive, 0.0, 1.0)


# --------------------------------------------------------------------------
# scikit-learn style estimators


def _validate_magnitudes(X):
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    X = X.ravel() if X.ndim == 1 or X.shape[1] == 1 else None
    if X is None:
        raise ValueError("expected a single column of channel magnitudes")
    if np.any(X <= 0):
        raise ValueError("channel magnitudes must be strictly positive")
    return X


class _NakagamiDensity(DensityMixin, BaseEstimator):
    def _set_model(self, model):
        self.model_ = model
        self.weights_ = model.weights
        self.shapes_ = model.shapes
        self.mean_powers_ = model.mean_powers
        return self

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        X = _validate_magnitudes(X)
        logp = np.stack(
            [np.log(c.weight) + nakagami_logpdf(X, c.shape, c.mean_power) for c in self.model_.components]
        )
        return logsumexp(logp, axis=0)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def cdf(self, X):
        check_is_fitted(self, "model_")
        return self.model_.cdf(_validate_magnitudes(X))

    def ks_statistic(self, X):
        check_is_fitted(self, "model_")
        return ks_statistic(_validate_magnitudes(X), self.model_)

    def outage_probability(self, gamma_bar, rate=1.0):
        check_is_fitted(self, "model_")
        return analytic_op(self.model_, gamma_bar, rate)


class NakagamiMixture(_NakagamiDensity):
    """EM-fitted mixture of Nakagami-m densities.

    Parameters
    ----------
    n_components : int
        Number of mixture components.
    tol : float
        Relative change of every shape and mean power that ends the iteration.
    max_iter : int
        Upper bound on EM iterations.
    random_state : int, Generator or None
        Seeds the random initial weights.
    """

    def __init__(self, n_components=2, tol=1e-3, max_iter=1000, random_state=None):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _validate_magnitudes(X)
        model = em_fit(X, self.n_components, self.tol, self.random_state, max_iter=self.max_iter)
        self.n_iter_ = len(model.fit_log) - 1
        self.converged_ = model.converged
        self.loglik_trace_ = np.array([e["loglik"] for e in model.fit_log])
        return self._set_model(model)

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = _validate_magnitudes(X)
        logp = np.stack(
            [np.log(c.weight) + nakagami_logpdf(X, c.shape, c.mean_power) for c in self.model_.components]
        )
        return np.exp(logp - logsumexp(logp, axis=0)).T

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)


class MomentMatchingNakagami(_NakagamiDensity):
    def fit(self, X, y=None):
        return self._set_model(as_mixture(mom_fit(_validate_magnitudes(X)), label="mom"))


class KSNakagami(_NakagamiDensity):
    """Single Nakagami-m minimizing the Kolmogorov-Smirnov distance to the data."""

    def __init__(self, step=0.5, min_step=1e-6):
        self.step = step
        self.min_step = min_step

    def fit(self, X, y=None):
        comp = ks_fit(_validate_magnitudes(X), step=self.step, min_step=self.min_step)
        return self._set_model(as_mixture(comp, label="ks"))
