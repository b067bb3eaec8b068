"""Preset grid, subarea tiling and the fixed-element RIS layouts.

Presets sit on a regular lattice whose first point is the origin; preset
``n`` lives at column ``n % n_h`` and row ``n // n_h`` (row-major). Each
subarea is a contiguous block of the lattice, and its bounding rectangle
extends half a pitch beyond its outermost presets so that the rectangles
tile the aperture without overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, ConstraintError

# relative slack when comparing distances against the spacing constraint
DISTANCE_RTOL = 1e-9


def near_square_factors(m):
    """Return ``(m_h, m_v)`` with ``m_h`` the largest divisor of ``m`` not above sqrt(m)."""
    if m < 1:
        raise ConfigurationError(f"num_active must be >= 1, got {m}")
    m_h = 1
    for d in range(1, math.isqrt(m) + 1):
        if m % d == 0:
            m_h = d
    return m_h, m // m_h


@dataclass(frozen=True)
class SurfaceConfig:
    wavelength_m: float
    spacing_h_m: float
    spacing_v_m: float
    n_h: int
    n_v: int
    num_active: int
    min_distance_m: float | None = None

    def __post_init__(self):
        for name in ("wavelength_m", "spacing_h_m", "spacing_v_m"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be strictly positive, got {getattr(self, name)}")
        for name in ("n_h", "n_v", "num_active"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value}")
        if self.min_distance_m is None:
            object.__setattr__(self, "min_distance_m", max(self.spacing_h_m, self.spacing_v_m))
        elif self.min_distance_m < 0:
            raise ConfigurationError(f"min_distance_m must be nonnegative, got {self.min_distance_m}")

    @property
    def num_presets(self):
        return self.n_h * self.n_v

    @property
    def element_area_m2(self):
        return self.spacing_h_m * self.spacing_v_m

    @property
    def total_area_m2(self):
        return self.num_presets * self.element_area_m2

    @property
    def active_shape(self):
        """``(M_h, M_v)``: selected elements per row and per column."""
        return near_square_factors(self.num_active)

    @property
    def subarea_shape(self):
        """Presets per subarea along ``(horizontal, vertical)``."""
        m_h, m_v = self.active_shape
        return self.n_h // m_h, self.n_v // m_v

    @property
    def aperture_center(self):
        return np.array([(self.n_h - 1) * self.spacing_h_m / 2.0, (self.n_v - 1) * self.spacing_v_m / 2.0])

    def validate(self):
        """Raise :class:`ConfigurationError` unless the lattice tiles into ``M`` subareas."""
        n, m = self.num_presets, self.num_active
        if n % m:
            raise ConfigurationError(f"N = n_h*n_v = {n} is not divisible by num_active M = {m}")
        m_h, m_v = self.active_shape
        if self.n_h % m_h:
            raise ConfigurationError(f"n_h = {self.n_h} is not divisible by M_h = {m_h} (M = {m} = {m_h}x{m_v})")
        if self.n_v % m_v:
            raise ConfigurationError(f"n_v = {self.n_v} is not divisible by M_v = {m_v} (M = {m} = {m_h}x{m_v})")
        if m > 1:
            sub_h, sub_v = self.subarea_shape
            limit = min(sub_h * self.spacing_h_m, sub_v * self.spacing_v_m)
            if self.min_distance_m > limit * (1 + DISTANCE_RTOL):
                raise ConfigurationError(
                    f"min_distance_m = {self.min_distance_m} exceeds the subarea extent {limit}"
                )
        return self


@dataclass(frozen=True)
class PresetGrid:
    coords: np.ndarray
    subarea_of: np.ndarray
    subarea_bounds: np.ndarray
    subarea_members: np.ndarray
    spacing: tuple
    lattice_shape: tuple  # (n_h, n_v)
    subarea_shape: tuple  # presets per subarea along (horizontal, vertical)

    @property
    def num_presets(self):
        return len(self.coords)

    @property
    def num_subareas(self):
        return len(self.subarea_bounds)

    def subarea_centers(self):
        return 0.5 * (self.subarea_bounds[:, 0:2] + self.subarea_bounds[:, 2:4])

    def contains(self, subarea, point):
        x0, y0, x1, y1 = self.subarea_bounds[subarea]
        return x0 <= point[0] < x1 and y0 <= point[1] < y1


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def build_preset_grid(config: SurfaceConfig) -> PresetGrid:
    config.validate()
    d_h, d_v = config.spacing_h_m, config.spacing_v_m
    n_h, n_v = config.n_h, config.n_v
    m_h, m_v = config.active_shape
    sub_h, sub_v = config.subarea_shape

    cols = np.tile(np.arange(n_h), n_v)
    rows = np.repeat(np.arange(n_v), n_h)
    coords = np.column_stack([cols * d_h, rows * d_v])
    # subareas are numbered row-major over the M_v x M_h tiling
    subarea_of = (rows // sub_v) * m_h + cols // sub_h

    members = np.empty((config.num_active, sub_h * sub_v), dtype=np.intp)
    bounds = np.empty((config.num_active, 4))
    for s in range(config.num_active):
        members[s] = np.flatnonzero(subarea_of == s)
        sr, sc = divmod(s, m_h)
        bounds[s] = (
            (sc * sub_h - 0.5) * d_h,
            (sr * sub_v - 0.5) * d_v,
            ((sc + 1) * sub_h - 0.5) * d_h,
            ((sr + 1) * sub_v - 0.5) * d_v,
        )
    return PresetGrid(
        coords=_frozen(coords),
        subarea_of=_frozen(subarea_of),
        subarea_bounds=_frozen(bounds),
        subarea_members=_frozen(members),
        spacing=(d_h, d_v),
        lattice_shape=(n_h, n_v),
        subarea_shape=(sub_h, sub_v),
    )


@dataclass(frozen=True)
class Selection:
    """One active preset per subarea, listed in subarea order."""

    preset_indices: tuple
    positions: np.ndarray = field(repr=False)

    @classmethod
    def from_indices(cls, grid: PresetGrid, indices):
        indices = tuple(int(i) for i in indices)
        return cls(indices, _frozen(grid.coords[list(indices)].copy()))

    def __len__(self):
        return len(self.preset_indices)


def _nearest_with_tiebreak(points, target):
    d2 = np.sum((points - target) ** 2, axis=1)
    # squared distances on the lattice can differ by rounding only; treat those as ties
    best = d2.min()
    return int(np.flatnonzero(d2 <= best + 1e-12 * max(best, 1e-300) + 1e-30)[0])


def conventional_ris_layout(grid: PresetGrid) -> Selection:
    """Fixed RIS: the preset nearest each subarea's centre, lowest index on ties."""
    centers = grid.subarea_centers()
    picks = []
    for s, members in enumerate(grid.subarea_members):
        picks.append(members[_nearest_with_tiebreak(grid.coords[members], centers[s])])
    return Selection.from_indices(grid, picks)


def compact_ris_layout(config: SurfaceConfig, spacing_m: float) -> np.ndarray:
    """Contiguous ``M_h x M_v`` array at pitch ``spacing_m`` centred on the aperture."""
    if not spacing_m > 0:
        raise ConstraintError(f"compact spacing must be positive, got {spacing_m}")
    if spacing_m > config.wavelength_m / 2 * (1 + 1e-12):
        raise ConstraintError(
            f"compact spacing {spacing_m} m exceeds half a wavelength ({config.wavelength_m / 2} m)"
        )
    m_h, m_v = config.active_shape
    cols = np.tile(np.arange(m_h), m_v) - (m_h - 1) / 2.0
    rows = np.repeat(np.arange(m_v), m_h) - (m_v - 1) / 2.0
    return np.column_stack([cols, rows]) * spacing_m + config.aperture_center


@dataclass(frozen=True)
class Violation:
    kind: str  # "count", "index", "duplicate", "membership" or "distance"
    elements: tuple
    message: str
    distance: float | None = None


@dataclass(frozen=True)
class SelectionReport:
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_selection(sel: Selection, grid: PresetGrid, config: SurfaceConfig) -> SelectionReport:
    """Collect every constraint the selection breaks; never raises."""
    out = []
    idx = list(sel.preset_indices)
    m = grid.num_subareas
    if len(idx) != m:
        out.append(Violation("count", (), f"expected {m} selected elements, got {len(idx)}"))
    valid = []
    for e, i in enumerate(idx):
        if not 0 <= i < grid.num_presets:
            out.append(Violation("index", (e,), f"element {e}: preset index {i} out of range"))
        else:
            valid.append(e)

    seen = {}
    for e in valid:
        seen.setdefault(idx[e], []).append(e)
    for i, elems in seen.items():
        if len(elems) > 1:
            out.append(Violation("duplicate", tuple(elems), f"preset {i} selected by elements {elems}"))

    by_subarea = {}
    for e in valid:
        by_subarea.setdefault(int(grid.subarea_of[idx[e]]), []).append(e)
    for s, elems in sorted(by_subarea.items()):
        if len(elems) > 1:
            presets = [idx[e] for e in elems]
            out.append(Violation("membership", tuple(elems), f"subarea {s} holds presets {presets}"))
    for e in valid:
        s = int(grid.subarea_of[idx[e]])
        if e < m and s != e and len(by_subarea.get(s, ())) == 1:
            out.append(Violation("membership", (e,), f"element {e} uses preset {idx[e]} outside subarea {e}"))

    dmin = config.min_distance_m
    if dmin > 0:
        pos = grid.coords[[idx[e] for e in valid]]
        for a in range(len(valid)):
            for b in range(a + 1, len(valid)):
                dist = float(np.hypot(*(pos[a] - pos[b])))
                if dist < dmin * (1 - DISTANCE_RTOL):
                    ea, eb = valid[a], valid[b]
                    out.append(
                        Violation(
                            "distance",
                            (ea, eb),
                            f"elements {ea} and {eb} are {dist:.6g} m apart (< {dmin:.6g} m)",
                            distance=dist,
                        )
                    )
    return SelectionReport(tuple(out))
