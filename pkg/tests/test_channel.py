import numpy as np
import pytest
from conftest import LAMBDA, PITCH, surface
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import j0_first_zero, j0_series

from frislab.channel import (
    JAKES_ARG_SCALE,
    ChannelSet,
    CovarianceFactor,
    PathLoss,
    correlation_matrix,
    covariance_factor,
    restrict_channels,
    sample_channels,
)
from frislab.exceptions import ConfigurationError, NumericalError
from frislab.geometry import Selection, build_preset_grid

# frozen from tests/oracles.py (power series and bisection)
J0_TWO_THIRDS = 0.891937468132727
J0_FIRST_ZERO = 2.404825557695773


def test_frozen_oracles_reproduce():
    assert j0_series(2 / 3) == pytest.approx(J0_TWO_THIRDS, abs=1e-15)
    assert j0_first_zero() == pytest.approx(J0_FIRST_ZERO, abs=1e-13)


def test_single_position_is_one():
    R = correlation_matrix([[0.3, -1.0]], LAMBDA)
    assert R.entries.tolist() == [[1.0]]


def test_third_wavelength_pair():
    R = correlation_matrix([[0, 0], [LAMBDA / 3, 0]], LAMBDA)
    assert R.entries[0, 1] == pytest.approx(J0_TWO_THIRDS, abs=1e-12)
    assert R.entries[1, 0] == R.entries[0, 1]


def test_pair_at_bessel_zero_is_uncorrelated():
    d = LAMBDA * J0_FIRST_ZERO / 2
    R = correlation_matrix([[0, 0], [0, d]], LAMBDA)
    assert abs(R.entries[0, 1]) < 1e-9


def test_jakes_scale_selectable():
    R = correlation_matrix([[0, 0], [LAMBDA / 3, 0]], LAMBDA, arg_scale=JAKES_ARG_SCALE)
    assert R.entries[0, 1] == pytest.approx(j0_series(2 * np.pi / 3), abs=1e-12)
    assert R.arg_scale == JAKES_ARG_SCALE


def test_duplicate_positions_are_legal():
    R = correlation_matrix([[0, 0], [0, 0]], LAMBDA)
    np.testing.assert_array_equal(R.entries, np.ones((2, 2)))


def test_rejects_bad_wavelength():
    with pytest.raises(ValueError):
        correlation_matrix([[0, 0]], 0.0)


coords = arrays(np.float64, st.tuples(st.integers(1, 6), st.just(2)), elements=st.floats(-1, 1))


@settings(max_examples=50, deadline=None)
@given(coords, st.floats(0, 2 * np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_correlation_properties_and_rigid_motion(pos, angle, dx, dy):
    R = correlation_matrix(pos, LAMBDA).entries
    np.testing.assert_allclose(np.diag(R), 1.0)
    np.testing.assert_array_equal(R, R.T)
    assert np.all(np.abs(R) <= 1.0 + 1e-15)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = pos @ rot.T + [dx, dy]
    np.testing.assert_allclose(correlation_matrix(moved, LAMBDA).entries, R, atol=1e-9)


def test_grid_entries_match_index_form():
    cfg = surface(6, 6, 4)
    grid = build_preset_grid(cfg)
    R = correlation_matrix(grid.coords, LAMBDA).entries
    # index form: distance = pitch * sqrt(di^2 + dj^2)
    a, b = 7, 29
    ia, ja = divmod(a, 6)
    ib, jb = divmod(b, 6)
    dist = PITCH * np.hypot(ia - ib, ja - jb)
    assert R[a, b] == pytest.approx(j0_series(2 * dist / LAMBDA), abs=1e-12)


def test_factor_of_identity():
    F = covariance_factor(np.eye(3), jitter=0.0)
    np.testing.assert_allclose(F.lower, np.eye(3))


def test_factor_two_by_two_closed_form():
    F = covariance_factor(np.array([[1, 0.5], [0.5, 1]]), jitter=0.0)
    np.testing.assert_allclose(F.lower, [[1, 0], [0.5, np.sqrt(0.75)]], atol=1e-15)


def test_factor_dense_grid_reproduces_matrix():
    cfg = surface(48, 1, 1)
    R = correlation_matrix(build_preset_grid(cfg).coords, LAMBDA)
    F = covariance_factor(R)
    target = R.entries + F.jitter * np.eye(48)
    err = np.linalg.norm(F.lower @ F.lower.T - target) / np.linalg.norm(target)
    assert err < 1e-10
    assert 1e-10 <= F.jitter <= 1e-6
    np.testing.assert_array_equal(F.lower, np.tril(F.lower))


def test_factor_escalates_then_fails_with_eigenvalue():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # smallest eigenvalue -1
    with pytest.raises(NumericalError, match="-1.000e"):
        covariance_factor(bad)


def test_pathloss_bounds():
    with pytest.raises(ConfigurationError):
        PathLoss(1.5, 0.1, 1.0)
    with pytest.raises(ConfigurationError):
        PathLoss(0.1, 0.0, 1.0)
    pl = PathLoss.from_db(-40, -40, 1.0)
    assert pl.beta1 == pytest.approx(1e-4)


def test_identity_factor_unit_variance():
    F = CovarianceFactor(np.eye(4), 0.0)
    pl = PathLoss(1.0, 1.0, 1.0)
    rng = np.random.default_rng(1)
    h = np.stack([sample_channels(F, pl, 1, rng).h_vector for _ in range(25_000)])
    var = np.mean(np.abs(h) ** 2, axis=0)
    np.testing.assert_allclose(var, 1.0, rtol=0.02)


class _ZeroStream:
    def standard_normal(self, shape):
        return np.zeros(shape)


def test_zero_stream_gives_zero_channels():
    ch = sample_channels(CovarianceFactor(np.eye(3), 0.0), PathLoss(1, 1, 1), 2, _ZeroStream())
    assert not ch.h_vector.any() and not ch.g_matrix.any()
    assert ch.g_matrix.shape == (3, 2)


def test_sampling_is_deterministic_per_seed():
    F = CovarianceFactor(np.eye(3), 0.0)
    a = sample_channels(F, PathLoss(1, 1, 1), 2, 7)
    b = sample_channels(F, PathLoss(1, 1, 1), 2, 7)
    np.testing.assert_array_equal(a.g_matrix, b.g_matrix)
    assert a.realization_seed == 7


def test_minus_40_db_pathloss_mean_power():
    A = PITCH**2
    pl = PathLoss.from_db(-40, -40, A)
    F = covariance_factor(correlation_matrix([[0, 0], [PITCH, 0]], LAMBDA))
    rng = np.random.default_rng(3)
    draws = [sample_channels(F, pl, 3, rng) for _ in range(20_000)]
    h = np.array([d.h_vector for d in draws])
    g = np.array([d.g_matrix for d in draws])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(A * 1e-4, rel=0.03)
    assert np.mean(np.abs(g) ** 2) == pytest.approx(A * 1e-4, rel=0.03)


def test_empirical_covariance_matches():
    cfg = surface(4, 4, 4)
    R = correlation_matrix(build_preset_grid(cfg).coords, LAMBDA)
    F = covariance_factor(R)
    pl = PathLoss(0.5, 0.25, 2.0)
    rng = np.random.default_rng(11)
    h = np.array([sample_channels(F, pl, 1, rng).h_vector for _ in range(100_000)])
    C = h.T @ h.conj() / len(h)
    target = pl.element_area_m2 * pl.beta2 * (R.entries + F.jitter * np.eye(16))
    assert np.linalg.norm(C - target) / np.linalg.norm(target) < 0.05


def test_g_columns_independent_of_h():
    F = CovarianceFactor(np.eye(1), 0.0)
    rng = np.random.default_rng(5)
    d = [sample_channels(F, PathLoss(1, 1, 1), 2, rng) for _ in range(40_000)]
    h = np.array([x.h_vector[0] for x in d])
    g = np.array([x.g_matrix[0] for x in d])
    for col in range(2):
        assert abs(np.mean(h * np.conj(g[:, col]))) < 0.03
    assert abs(np.mean(g[:, 0] * np.conj(g[:, 1]))) < 0.03


def _full(n, rng):
    return ChannelSet(rng.standard_normal((n, 2)) + 0j, rng.standard_normal(n) + 0j)


def test_restrict_all_is_identity(rng):
    full = _full(6, rng)
    out = restrict_channels(full, list(range(6)))
    np.testing.assert_array_equal(out.g_matrix, full.g_matrix)
    np.testing.assert_array_equal(out.h_vector, full.h_vector)


def test_restrict_single_element(rng):
    full = _full(6, rng)
    out = restrict_channels(full, Selection((4,), np.zeros((1, 2))))
    assert out.g_matrix.shape == (1, 2)
    np.testing.assert_array_equal(out.g_matrix[0], full.g_matrix[4])
    assert out.h_vector[0] == full.h_vector[4]


def test_restrict_out_of_range(rng):
    with pytest.raises(IndexError):
        restrict_channels(_full(3, rng), [0, 3])


def test_restricted_correlation_is_submatrix():
    grid = build_preset_grid(surface(6, 6, 4))
    idx = [3, 8, 20, 35]
    full = correlation_matrix(grid.coords, LAMBDA).entries
    sub = correlation_matrix(grid.coords[idx], LAMBDA).entries
    np.testing.assert_allclose(sub, full[np.ix_(idx, idx)], atol=1e-15)


def test_restrict_commutes_with_sampling():
    grid = build_preset_grid(surface(4, 4, 4))
    F = covariance_factor(correlation_matrix(grid.coords, LAMBDA))
    idx = [0, 5, 10, 15]
    rng = np.random.default_rng(8)
    h = np.array([restrict_channels(sample_channels(F, PathLoss(1, 1, 1), 1, rng), idx).h_vector
                  for _ in range(50_000)])
    C = (h.T @ h.conj() / len(h)).real
    target = correlation_matrix(grid.coords[idx], LAMBDA).entries
    np.testing.assert_allclose(C, target, atol=0.03)
