"""Seeded generation of hexagonal HetNet/HomoNet layouts and channel draws.

Conventions
-----------
* Macro cells are pointy-top hexagons on a lattice whose neighbouring
  centres are `inter_site_distance` apart. Cells are taken in spiral order:
  the centre cell, then ring 1, ring 2, ..., each ring sorted by angle.
* The network area is the union of the cells; no user is placed outside it.
* Base stations are ordered macros first (cell order), then the picos of
  cell 0, cell 1, ...
* Distances below `min_distance` are raised to it before path loss.

Random streams
--------------
Every draw comes from a PCG64 generator seeded with
``SeedSequence(seed, spawn_key=(purpose,))`` with one purpose per kind of
randomness, so changing one part of the pipeline leaves the others intact.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .model import NetworkInstance

PICO_PLACEMENT, USER_PLACEMENT, SHADOWING, FADING = 0, 1, 2, 3

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class LayoutConfig:
    macro_cells: int = 25
    inter_site_distance: float = 1000.0
    picos_per_cell: int = 3
    users: int = 160
    placement: str = "uniform"  # "uniform" | "congested"
    snr_db: float = 15.0
    antennas_per_bs: int = 1
    pathloss_ref_distance: float = 200.0
    pathloss_exponent: float = 3.7
    shadow_std_db: float = 8.0
    min_distance: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.macro_cells < 1 or self.users < 1 or self.antennas_per_bs < 1:
            raise ValueError("macro_cells, users and antennas_per_bs must be >= 1")
        if self.picos_per_cell < 0:
            raise ValueError("picos_per_cell must be >= 0")
        if min(self.inter_site_distance, self.pathloss_ref_distance, self.min_distance) <= 0:
            raise ValueError("distances must be positive")
        if self.pathloss_exponent <= 2:
            raise ValueError("pathloss_exponent must exceed 2")
        if self.shadow_std_db < 0:
            raise ValueError("shadow_std_db must be >= 0")
        if self.placement not in ("uniform", "congested"):
            raise ValueError(f"unknown placement {self.placement!r}")

    @property
    def n_bs(self) -> int:
        return self.macro_cells * (1 + self.picos_per_cell)

    @property
    def budget(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def replace(self, **changes) -> "LayoutConfig":
        return LayoutConfig(**{**asdict(self), **changes})

    @classmethod
    def from_dict(cls, d: dict) -> "LayoutConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown layout fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "LayoutConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Geometry:
    """Positions in metres. `bs_types` holds ``"macro"`` or ``"pico"``."""

    cell_centers: np.ndarray
    inter_site_distance: float
    bs_positions: np.ndarray
    bs_types: tuple
    user_positions: np.ndarray
    hot_cell: Optional[int] = None
    hot_users: int = 0

    @property
    def apothem(self) -> float:
        return 0.5 * self.inter_site_distance

    def cell_of(self, points) -> np.ndarray:
        """Index of the containing cell for each point, -1 when outside."""
        points = np.atleast_2d(points)
        out = np.full(points.shape[0], -1)
        for c, center in enumerate(self.cell_centers):
            inside = in_hexagon(points - center, self.apothem)
            out[(out < 0) & inside] = c
        return out

    def to_dict(self) -> dict:
        return {
            "cell_centers": self.cell_centers.tolist(),
            "inter_site_distance": self.inter_site_distance,
            "bs_positions": self.bs_positions.tolist(),
            "bs_types": list(self.bs_types),
            "user_positions": self.user_positions.tolist(),
            "hot_cell": self.hot_cell,
            "hot_users": self.hot_users,
        }


def stream(seed, purpose: int) -> np.random.Generator:
    """Independent generator for one `purpose` under `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(purpose,))))


def hex_centers(count: int, isd: float) -> np.ndarray:
    """Centres of the first `count` cells of the hexagonal spiral."""
    centers = [(0, 0)]
    ring = 1
    while len(centers) < count:
        # axial coordinates at hex distance `ring`
        cells = []
        for q in range(-ring, ring + 1):
            for r in range(max(-ring, -q - ring), min(ring, -q + ring) + 1):
                if max(abs(q), abs(r), abs(q + r)) == ring:
                    cells.append((q, r))
        xy = [(q + r / 2.0, SQRT3 / 2.0 * r) for q, r in cells]
        # atan2 in [0, 2pi) gives a deterministic walk round the ring
        xy.sort(key=lambda v: (math.atan2(v[1], v[0]) % (2 * math.pi), v))
        centers.extend(xy)
        ring += 1
    return isd * np.array(centers[:count], dtype=float)


def in_hexagon(points, apothem: float) -> np.ndarray:
    """Membership in the pointy-top hexagon of given apothem centred at 0."""
    x, y = np.asarray(points, dtype=float).T
    tol = 1e-9 * apothem
    return ((np.abs(x) <= apothem + tol)
            & (np.abs(0.5 * x + 0.5 * SQRT3 * y) <= apothem + tol)
            & (np.abs(-0.5 * x + 0.5 * SQRT3 * y) <= apothem + tol))


def sample_hexagon(rng: np.random.Generator, count: int, apothem: float) -> np.ndarray:
    """`count` points uniform in a pointy-top hexagon centred at 0 (rejection)."""
    circumradius = 2.0 * apothem / SQRT3
    out = np.empty((0, 2))
    while out.shape[0] < count:
        need = count - out.shape[0]
        cand = np.column_stack([rng.uniform(-apothem, apothem, 2 * need + 4),
                                rng.uniform(-circumradius, circumradius, 2 * need + 4)])
        out = np.vstack([out, cand[in_hexagon(cand, apothem)]])
    return out[:count]


def _sample_area(rng, centers, count, apothem):
    cells = rng.integers(0, centers.shape[0], size=count)
    return centers[cells] + sample_hexagon(rng, count, apothem)


def place_users(geom: Geometry, mode: str, users: int, seed) -> Geometry:
    """Return `geom` with freshly drawn user positions.

    ``"uniform"`` spreads users uniformly over the network area.
    ``"congested"`` puts the first ``ceil(K/4)`` users uniformly in one
    randomly chosen macro cell and spreads the rest over the whole area.
    """
    if users < 1:
        raise ValueError("need at least one user")
    rng = stream(seed, USER_PLACEMENT)
    centers = geom.cell_centers
    hot_cell, hot = None, 0
    if mode == "uniform":
        pos = _sample_area(rng, centers, users, geom.apothem)
    elif mode == "congested":
        hot_cell = int(rng.integers(0, centers.shape[0]))
        hot = math.ceil(users / 4)
        crowd = centers[hot_cell] + sample_hexagon(rng, hot, geom.apothem)
        pos = np.vstack([crowd, _sample_area(rng, centers, users - hot, geom.apothem)])
    else:
        raise ValueError(f"unknown placement {mode!r}")
    return Geometry(geom.cell_centers, geom.inter_site_distance, geom.bs_positions,
                    geom.bs_types, pos, hot_cell, hot)


def generate_geometry(cfg: LayoutConfig, seed=None) -> Geometry:
    """Macro grid, random picos and users for one trial."""
    seed = cfg.seed if seed is None else seed
    centers = hex_centers(cfg.macro_cells, cfg.inter_site_distance)
    apothem = 0.5 * cfg.inter_site_distance
    rng = stream(seed, PICO_PLACEMENT)
    picos = [c + sample_hexagon(rng, cfg.picos_per_cell, apothem) for c in centers]
    bs = np.vstack([centers] + picos)
    types = ("macro",) * cfg.macro_cells + ("pico",) * (cfg.macro_cells * cfg.picos_per_cell)
    geom = Geometry(centers, float(cfg.inter_site_distance), bs, types, np.empty((0, 2)))
    return place_users(geom, cfg.placement, cfg.users, seed)


def distances(geom: Geometry, floor: float = 0.0) -> np.ndarray:
    """BS-to-user distances, shape (N, K)."""
    diff = geom.bs_positions[:, None, :] - geom.user_positions[None, :, :]
    return np.maximum(np.hypot(diff[..., 0], diff[..., 1]), floor)


def large_scale_gain(geom: Geometry, cfg: LayoutConfig, seed) -> np.ndarray:
    """``S_nk (d_ref / d_nk)^exponent`` with log-normal shadowing, shape (N, K)."""
    d = distances(geom, cfg.min_distance)
    shadow_db = stream(seed, SHADOWING).normal(0.0, cfg.shadow_std_db, size=d.shape)
    return 10.0 ** (shadow_db / 10.0) * (cfg.pathloss_ref_distance / d) ** cfg.pathloss_exponent


def generate_siso_instance(geom: Geometry, cfg: LayoutConfig, seed=None) -> NetworkInstance:
    if cfg.antennas_per_bs != 1:
        raise ValueError("SISO instances need antennas_per_bs == 1")
    seed = cfg.seed if seed is None else seed
    g = large_scale_gain(geom, cfg, seed)
    k = geom.user_positions.shape[0]
    return NetworkInstance.siso(g, np.ones(g.shape[0]), np.full(k, cfg.budget))


def generate_simo_instance(geom: Geometry, cfg: LayoutConfig, seed=None) -> NetworkInstance:
    """Rayleigh channels whose real and imaginary parts each have variance
    equal to the large-scale gain, so ``E||h||^2 = 2 M v``."""
    if cfg.antennas_per_bs < 2:
        raise ValueError("SIMO instances need antennas_per_bs >= 2")
    seed = cfg.seed if seed is None else seed
    v = large_scale_gain(geom, cfg, seed)
    rng = stream(seed, FADING)
    shape = v.shape + (cfg.antennas_per_bs,)
    h = np.sqrt(v)[..., None] * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return NetworkInstance.simo(h, np.ones(v.shape[0]), np.full(v.shape[1], cfg.budget))


def generate_instance(cfg: LayoutConfig, seed=None) -> NetworkInstance:
    geom = generate_geometry(cfg, seed)
    if cfg.antennas_per_bs == 1:
        return generate_siso_instance(geom, cfg, seed)
    return generate_simo_instance(geom, cfg, seed)


# -- small synthetic instances for oracle checks ------------------------

def random_siso_instance(rng: np.random.Generator, users: int, bss: int, snr_db: float,
                         spread_db: float = 10.0) -> NetworkInstance:
    """Unit noise, equal budgets and log-normal gains with `spread_db` deviation."""
    g = 10.0 ** (rng.normal(0.0, spread_db, size=(bss, users)) / 10.0)
    return NetworkInstance.siso(g, np.ones(bss), np.full(users, 10.0 ** (snr_db / 10.0)))


def random_simo_instance(rng: np.random.Generator, users: int, bss: int, antennas: int,
                         snr_db: float, spread_db: float = 10.0) -> NetworkInstance:
    scale = 10.0 ** (rng.normal(0.0, spread_db, size=(bss, users, 1)) / 20.0)
    h = scale * (rng.standard_normal((bss, users, antennas))
                 + 1j * rng.standard_normal((bss, users, antennas))) / math.sqrt(2.0)
    return NetworkInstance.simo(h, np.ones(bss), np.full(users, 10.0 ** (snr_db / 10.0)))
