import numpy as np
import pytest
from conftest import LAMBDA, PITCH, surface
from hypothesis import given, settings
from hypothesis import strategies as st

from frislab.exceptions import ConfigurationError, ConstraintError
from frislab.geometry import (
    Selection,
    SurfaceConfig,
    build_preset_grid,
    compact_ris_layout,
    conventional_ris_layout,
    near_square_factors,
    validate_selection,
)


def test_two_metre_aperture_has_48_by_48_presets():
    n = round(2.0 / PITCH)
    cfg = surface(n, n, 16)
    assert n == 48
    assert cfg.num_presets == 2304
    assert build_preset_grid(cfg).num_presets == 2304
    assert cfg.total_area_m2 == pytest.approx(4.0)


def test_single_preset_grid():
    grid = build_preset_grid(surface(1, 1, 1))
    assert grid.coords.tolist() == [[0.0, 0.0]]
    assert grid.subarea_members.tolist() == [[0]]


def test_four_by_four_grid_has_four_two_by_two_subareas():
    grid = build_preset_grid(surface(4, 4, 4))
    assert grid.num_presets == 16
    assert grid.subarea_members.tolist() == [[0, 1, 4, 5], [2, 3, 6, 7], [8, 9, 12, 13], [10, 11, 14, 15]]


def test_lattice_pitch():
    cfg = SurfaceConfig(LAMBDA, 0.05, 0.03, 6, 4, 4)
    grid = build_preset_grid(cfg)
    c = grid.coords.reshape(4, 6, 2)
    np.testing.assert_allclose(np.diff(c[..., 0], axis=1), 0.05)
    np.testing.assert_allclose(np.diff(c[..., 1], axis=0), 0.03)


@pytest.mark.parametrize(
    "n_h, n_v, m, word",
    [(3, 3, 2, "divisible by num_active"), (6, 4, 3, "n_v = 4"), (3, 8, 4, "n_h = 3")],
)
def test_untileable_configuration_names_dimension(n_h, n_v, m, word):
    with pytest.raises(ConfigurationError, match=word):
        build_preset_grid(surface(n_h, n_v, m))


def test_near_square_factorization():
    assert near_square_factors(16) == (4, 4)
    assert near_square_factors(36) == (6, 6)
    assert near_square_factors(2) == (1, 2)
    assert near_square_factors(12) == (3, 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
def test_subareas_tile_aperture(mh_mult, mv_mult, per_h, per_v):
    m_h, m_v = near_square_factors(mh_mult * mv_mult)
    cfg = surface(m_h * per_h, m_v * per_v, m_h * m_v, min_distance_m=0.0)
    grid = build_preset_grid(cfg)
    assert grid.num_presets == cfg.num_presets
    counts = np.bincount(grid.subarea_of, minlength=cfg.num_active)
    assert np.all(counts == cfg.num_presets // cfg.num_active)
    for n, point in enumerate(grid.coords):
        hits = [s for s in range(grid.num_subareas) if grid.contains(s, point)]
        assert hits == [grid.subarea_of[n]]
    area = np.prod(grid.subarea_bounds[:, 2:] - grid.subarea_bounds[:, :2], axis=1).sum()
    assert area == pytest.approx(cfg.total_area_m2)


def test_conventional_layout_tie_breaks_to_lowest_index():
    grid = build_preset_grid(surface(4, 4, 4))
    sel = conventional_ris_layout(grid)
    # every 2x2 subarea has four equidistant presets; the lowest index wins
    assert sel.preset_indices == (0, 2, 8, 10)


def test_conventional_layout_odd_subareas_use_middle_preset():
    grid = build_preset_grid(surface(12, 12, 16))
    sel = conventional_ris_layout(grid)
    cols = np.array(sel.preset_indices) % 12
    rows = np.array(sel.preset_indices) // 12
    assert set(cols) == {1, 4, 7, 10} and set(rows) == {1, 4, 7, 10}


def test_conventional_layout_full_grid():
    cfg = surface(48, 48, 16)
    grid = build_preset_grid(cfg)
    sel = conventional_ris_layout(grid)
    assert len(sel) == 16
    assert [grid.subarea_of[i] for i in sel.preset_indices] == list(range(16))
    assert validate_selection(sel, grid, cfg).ok


def test_conventional_layout_single_element_is_nearest_to_aperture_center():
    cfg = surface(5, 5, 1)
    grid = build_preset_grid(cfg)
    assert conventional_ris_layout(grid).preset_indices == (12,)


@pytest.mark.parametrize("n_h, n_v, m", [(4, 4, 4), (12, 12, 16), (12, 12, 36), (12, 12, 4), (2, 6, 3)])
def test_conventional_layout_is_feasible(n_h, n_v, m):
    cfg = surface(n_h, n_v, m)
    grid = build_preset_grid(cfg)
    assert validate_selection(conventional_ris_layout(grid), grid, cfg).ok


def test_compact_layout_sixteen_elements():
    cfg = surface(48, 48, 16)
    pos = compact_ris_layout(cfg, LAMBDA / 2)
    span = pos.max(axis=0) - pos.min(axis=0)
    np.testing.assert_allclose(span, [0.1875, 0.1875])
    np.testing.assert_allclose(pos.mean(axis=0), cfg.aperture_center)


def test_compact_layout_single_element_at_center():
    cfg = surface(48, 48, 1)
    np.testing.assert_allclose(compact_ris_layout(cfg, LAMBDA / 2), [cfg.aperture_center])


def test_compact_layout_perfect_square_is_square():
    cfg = surface(12, 12, 36)
    pos = compact_ris_layout(cfg, LAMBDA / 2)
    root = int(np.sqrt(36))
    assert len(np.unique(pos[:, 0].round(12))) == root
    assert len(np.unique(pos[:, 1].round(12))) == root


def test_compact_layout_rejects_wide_spacing():
    with pytest.raises(ConstraintError):
        compact_ris_layout(surface(12, 12, 16), 0.51 * LAMBDA)


@pytest.mark.parametrize("n", [12, 48])
@pytest.mark.parametrize("m", [4, 16, 36])
def test_compact_span_fits_inside_aperture(n, m):
    cfg = surface(n, n, m)
    pos = compact_ris_layout(cfg, LAMBDA / 2)
    lo = -cfg.spacing_h_m / 2
    hi = (n - 0.5) * cfg.spacing_h_m
    assert pos.min() > lo and pos.max() < hi


def test_validate_reports_shared_subarea():
    cfg = surface(4, 4, 4)
    grid = build_preset_grid(cfg)
    sel = Selection.from_indices(grid, [0, 1, 8, 10])
    report = validate_selection(sel, grid, cfg)
    kinds = [v.kind for v in report.violations]
    assert "membership" in kinds
    shared = [v for v in report.violations if v.kind == "membership" and len(v.elements) == 2]
    assert shared and shared[0].elements == (0, 1)


def test_validate_reports_distance_with_measured_value():
    cfg = surface(4, 4, 4, min_distance_m=0.0)
    grid = build_preset_grid(cfg)
    strict = SurfaceConfig(LAMBDA, PITCH, PITCH, 4, 4, 4, min_distance_m=10 * PITCH)
    # presets 1 and 2 are horizontal neighbours in different subareas
    sel = Selection.from_indices(grid, [1, 2, 8, 10])
    report = validate_selection(sel, grid, strict)
    dist = [v for v in report.violations if v.kind == "distance" and v.elements == (0, 1)]
    assert dist and dist[0].distance == pytest.approx(np.hypot(*(grid.coords[1] - grid.coords[2])))
    assert dist[0].distance == pytest.approx(PITCH)


def test_validate_reports_duplicates_and_bad_indices():
    cfg = surface(4, 4, 4)
    grid = build_preset_grid(cfg)
    report = validate_selection(Selection((0, 0, 99, 10), np.zeros((4, 2))), grid, cfg)
    kinds = {v.kind for v in report.violations}
    assert {"duplicate", "index"} <= kinds
    assert not report.ok
