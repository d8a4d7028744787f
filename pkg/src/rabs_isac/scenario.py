"""Grid geometry, candidate grasping locations, traffic demands and radio constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class RadioConfig:
    """Radio constants; gains are linear, defaults follow the reference setup."""
    f0_hz: float = 3e9
    delta_f_hz: float = 0.25e6
    num_subcarriers: int = 64
    ts_s: float = 5e-6
    ns_symbols: int = 16
    tx_power_w: float = 1.0
    gt_s: float = 1e3
    gr_s: float = 1e3
    gt_c: float = 1.0
    gr_c: float = 1e3
    eta_m2: float = 1.0
    noise_psd_dbm_hz: float = -174.0
    mu: float = 0.5

    def __post_init__(self):
        positive = ("f0_hz", "delta_f_hz", "ts_s", "ns_symbols", "tx_power_w",
                    "gt_s", "gr_s", "gt_c", "gr_c")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"radio.{name} must be positive")
        if self.eta_m2 < 0:
            raise ValueError("radio.eta_m2 must be non-negative")
        if self.num_subcarriers < 0:
            raise ValueError("radio.num_subcarriers must be non-negative")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("radio.mu must lie in [0, 1]")

    @property
    def noise_power_w(self) -> float:
        """Noise power over one subcarrier (W)."""
        return 10.0 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0) * self.delta_f_hz


@dataclass(frozen=True)
class Grid:
    index: int
    center_xy: Tuple[float, float]
    half_width: float


@dataclass(frozen=True)
class CandidateLocation:
    index: int
    xyz: Tuple[float, float, float]

    def __post_init__(self):
        if not self.xyz[2] > 0:
            raise ValueError(f"location {self.index} must be above ground (z > 0)")


@dataclass(frozen=True)
class DemandProfile:
    m_sen: np.ndarray  # bits
    r_com: np.ndarray  # bit/s

    def __post_init__(self):
        if np.any(np.asarray(self.m_sen) <= 0) or np.any(np.asarray(self.r_com) <= 0):
            raise ValueError("demands must be strictly positive")


@dataclass(frozen=True)
class ProtectionLevels:
    gamma: np.ndarray   # sensing, per grid
    lam: np.ndarray     # communication, per grid
    delta: float

    @classmethod
    def from_delta(cls, delta: float, num_grids: int, num_locations: int,
                   num_subcarriers: int) -> "ProtectionLevels":
        if delta < 0:
            raise ValueError("delta must be non-negative")
        level = min(delta, 1.0) * num_locations * num_subcarriers
        return cls(np.full(num_grids, level), np.full(num_grids, level), delta)


@dataclass(frozen=True)
class Scenario:
    radio: RadioConfig
    grids: Tuple[Grid, ...]
    locations: Tuple[CandidateLocation, ...]
    demands: DemandProfile
    protection: ProtectionLevels
    rng_seed: int = 0
    area: Optional[Tuple[float, float]] = field(default=None)

    def __post_init__(self):
        I = len(self.grids)
        if len(self.demands.m_sen) != I or len(self.demands.r_com) != I:
            raise ValueError("demand vectors must have one entry per grid")
        if len(self.protection.gamma) != I or len(self.protection.lam) != I:
            raise ValueError("protection levels must have one entry per grid")
        jk = len(self.locations) * self.radio.num_subcarriers
        for name, arr in (("gamma", self.protection.gamma), ("lambda", self.protection.lam)):
            if np.any(arr < 0) or np.any(arr > jk + 1e-9):
                raise ValueError(f"protection {name} must lie in [0, J*K]")

    @property
    def num_grids(self) -> int:
        return len(self.grids)

    @property
    def num_locations(self) -> int:
        return len(self.locations)

    @property
    def num_subcarriers(self) -> int:
        return self.radio.num_subcarriers

    def with_delta(self, delta: float) -> "Scenario":
        prot = ProtectionLevels.from_delta(delta, self.num_grids, self.num_locations,
                                           self.num_subcarriers)
        return replace(self, protection=prot)


def build_grid_set(area_w: float, area_h: float, cell: float) -> List[Grid]:
    """Tile an ``area_w x area_h`` rectangle with square cells, row-major from the origin."""
    if cell <= 0 or area_w <= 0 or area_h <= 0:
        raise ValueError("area and cell dimensions must be positive")
    nx, ny = area_w / cell, area_h / cell
    if not (math.isclose(nx, round(nx), abs_tol=1e-9) and math.isclose(ny, round(ny), abs_tol=1e-9)):
        raise ValueError(f"area {area_w} x {area_h} m is not an exact multiple of cell size {cell} m")
    nx, ny = int(round(nx)), int(round(ny))
    half = cell / 2.0
    return [Grid(r * nx + c, ((c + 0.5) * cell, (r + 0.5) * cell), half)
            for r in range(ny) for c in range(nx)]


def distance_bounds(grid: Grid, loc: CandidateLocation) -> Tuple[float, float]:
    """(longest, shortest) 3-D distance from ``loc`` to the ground square of ``grid``.

    The longest distance produces the channel-gain lower bound, hence the
    ``(d_lb, d_ub)`` ordering with ``d_lb >= d_ub``.
    """
    cx, cy = grid.center_xy
    x, y, z = loc.xyz
    dx, dy = abs(x - cx), abs(y - cy)
    h = grid.half_width
    far = math.sqrt((dx + h) ** 2 + (dy + h) ** 2 + z * z)
    near = math.sqrt(max(dx - h, 0.0) ** 2 + max(dy - h, 0.0) ** 2 + z * z)
    return far, near


def distance_bound_tables(grids: Sequence[Grid], locs: Sequence[CandidateLocation]):
    """Vectorised :func:`distance_bounds` over all pairs, shapes ``(I, J)``."""
    c = np.array([g.center_xy for g in grids], dtype=float).reshape(-1, 2)
    h = np.array([g.half_width for g in grids], dtype=float)[:, None]
    p = np.array([l.xyz for l in locs], dtype=float).reshape(-1, 3)
    dx = np.abs(p[None, :, 0] - c[:, None, 0])
    dy = np.abs(p[None, :, 1] - c[:, None, 1])
    z2 = p[None, :, 2] ** 2
    far = np.sqrt((dx + h) ** 2 + (dy + h) ** 2 + z2)
    near = np.sqrt(np.maximum(dx - h, 0) ** 2 + np.maximum(dy - h, 0) ** 2 + z2)
    return far, near


def sample_demands(seed: int, m_sen: float, m_com: float, sd_sen: float,
                   sd_com: float, num_grids: int) -> DemandProfile:
    """Log-normal demands whose arithmetic means are ``m_sen`` and ``m_com``.

    ``sd_*`` is the standard deviation of the underlying normal, so the
    location parameter is ``ln(m) - sd**2 / 2``.
    """
    if m_sen <= 0 or m_com <= 0:
        raise ValueError("mean demands must be positive")
    if sd_sen < 0 or sd_com < 0:
        raise ValueError("demand standard deviations must be non-negative")
    rng = np.random.default_rng(seed)

    def draw(mean, sd):
        if sd == 0:
            return np.full(num_grids, float(mean))
        return rng.lognormal(math.log(mean) - sd * sd / 2.0, sd, num_grids)

    sen = draw(m_sen, sd_sen)
    com = draw(m_com, sd_com)
    return DemandProfile(sen, com)


def random_locations(seed: int, num: int, area_w: float, area_h: float,
                     height: float) -> List[CandidateLocation]:
    """Uniform candidate positions at lamppost height.

    Uses a stream independent of the demand sampler so changing demand
    parameters leaves placements untouched.
    """
    rng = np.random.default_rng([seed, 0x5CA1E])
    xy = rng.uniform(0.0, 1.0, (num, 2)) * [area_w, area_h]
    return [CandidateLocation(j, (float(x), float(y), float(height))) for j, (x, y) in enumerate(xy)]


def build_scenario(*, area_w: float = 100.0, area_h: float = 100.0, cell: float = 20.0,
                   lamppost_height: float = 10.0, num_locations: int = 10, seed: int = 0,
                   m_sen: float = 15.0, m_com: float = 20e6, sd_sen: float = 1.0,
                   sd_com: float = 1.0, delta: float = 1e-4,
                   radio: Optional[RadioConfig] = None,
                   locations: Optional[Sequence[Sequence[float]]] = None) -> Scenario:
    radio = radio or RadioConfig()
    grids = build_grid_set(area_w, area_h, cell)
    if locations is not None:
        locs = [CandidateLocation(j, tuple(float(v) for v in p)) for j, p in enumerate(locations)]
    else:
        locs = random_locations(seed, num_locations, area_w, area_h, lamppost_height)
    if not locs:
        raise ValueError("at least one candidate location is required")
    demands = sample_demands(seed, m_sen, m_com, sd_sen, sd_com, len(grids))
    prot = ProtectionLevels.from_delta(delta, len(grids), len(locs), radio.num_subcarriers)
    return Scenario(radio, tuple(grids), tuple(locs), demands, prot, seed, (area_w, area_h))
