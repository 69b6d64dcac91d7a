"""Hexagonal multi-cell layout, uniform position sampling, and distances.

Cells are flat-topped regular hexagons with circumradius R (inradius
sqrt(3)/2 * R).  The target cell sits at the origin; interfering cells are
laid out ring by ring on the hexagonal lattice, so adjacent centers are
exactly sqrt(3)*R apart and the hexagons tile the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

SQRT3 = math.sqrt(3.0)

#: Cell counts that form complete rings around the target cell.
RING_COMPLETE_CELL_COUNTS = (1, 7, 19)


@dataclass(frozen=True)
class HexLayout:
    """Ring-ordered hexagonal layout; ``centers[0]`` is the target cell."""

    num_cells: int
    circumradius_m: float
    centers: np.ndarray  # shape (C, 2), meters


@dataclass(frozen=True)
class NetworkRealization:
    """One random drop of all user and D2D positions.

    ``user_pos`` has shape (C, K, 2), ``d2d_tx_pos`` and ``d2d_rx_pos``
    have shape (C, D, 2).  Transmitter positions are uniform inside their
    cell's hexagon (respecting the minimum BS distance); each receiver is
    placed at exactly ``d2d_link_distance_m`` from its transmitter at a
    uniform angle, and may fall outside the hexagon.
    """

    layout: HexLayout
    user_pos: np.ndarray
    d2d_tx_pos: np.ndarray
    d2d_rx_pos: np.ndarray
    d2d_link_distance_m: float


def build_layout(num_cells: int, circumradius_m: float) -> HexLayout:
    """Build a ring-complete hexagonal layout with the target cell first.

    Raises ConfigurationError unless ``num_cells`` is one of
    ``RING_COMPLETE_CELL_COUNTS`` and ``circumradius_m`` is positive.
    """
    if num_cells not in RING_COMPLETE_CELL_COUNTS:
        raise ConfigurationError(
            f"num_cells must be one of {RING_COMPLETE_CELL_COUNTS} "
            f"(ring-complete layouts), got {num_cells}"
        )
    if circumradius_m <= 0:
        raise ConfigurationError(f"circumradius_m must be positive, got {circumradius_m}")

    r = circumradius_m
    coords = []
    max_ring = {1: 0, 7: 1, 19: 2}[num_cells]
    for q in range(-max_ring, max_ring + 1):
        for s in range(-max_ring, max_ring + 1):
            ring = max(abs(q), abs(s), abs(-q - s))
            if ring <= max_ring:
                # Flat-top axial-to-Cartesian mapping; lattice basis vectors
                # have length sqrt(3)*R (twice the inradius).
                x = r * 1.5 * q
                y = r * (SQRT3 / 2.0 * q + SQRT3 * s)
                coords.append((ring, math.atan2(y, x) % (2 * math.pi), x, y))
    coords.sort(key=lambda t: (t[0], t[1]))
    centers = np.array([(x, y) for _, _, x, y in coords], dtype=float)
    centers[0] = 0.0  # exact origin for the target cell
    return HexLayout(num_cells=num_cells, circumradius_m=circumradius_m, centers=centers)


def point_in_hexagon(points: np.ndarray, center: np.ndarray, circumradius_m: float) -> np.ndarray:
    """Vectorized membership test for the closed flat-topped hexagon."""
    p = np.atleast_2d(points) - np.asarray(center, dtype=float)
    x, y = p[:, 0], p[:, 1]
    lim = SQRT3 * circumradius_m
    inside = (
        (np.abs(y) <= lim / 2.0)
        & (np.abs(SQRT3 * x + y) <= lim)
        & (np.abs(SQRT3 * x - y) <= lim)
    )
    return inside if points.ndim > 1 else bool(inside[0])


def sample_uniform_hexagon(
    center: np.ndarray,
    circumradius_m: float,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Sample uniformly from the closed hexagon by bounding-box rejection.

    Returns shape (2,) when ``size`` is None, else (size, 2).
    """
    if circumradius_m <= 0:
        raise ConfigurationError(f"circumradius_m must be positive, got {circumradius_m}")
    n = 1 if size is None else int(size)
    center = np.asarray(center, dtype=float)
    out = np.empty((n, 2))
    filled = 0
    # Acceptance ratio is hex/box area = 3/4, so a couple of rounds suffice.
    while filled < n:
        want = n - filled
        draw = max(int(want * 1.5) + 8, 16)
        cand = np.empty((draw, 2))
        cand[:, 0] = rng.uniform(-circumradius_m, circumradius_m, size=draw)
        cand[:, 1] = rng.uniform(-SQRT3 / 2 * circumradius_m, SQRT3 / 2 * circumradius_m, size=draw)
        ok = point_in_hexagon(cand, np.zeros(2), circumradius_m)
        kept = cand[ok][:want]
        out[filled : filled + len(kept)] = kept
        filled += len(kept)
    out += center
    return out[0] if size is None else out


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two 2-D points, meters."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.hypot(*(a - b)))


def distances_to_centers(points: np.ndarray, layout: HexLayout) -> np.ndarray:
    """Distances from each point (..., 2) to every cell center -> (..., C)."""
    p = np.asarray(points, dtype=float)
    diff = p[..., None, :] - layout.centers  # (..., C, 2)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _sample_with_min_distance(
    center: np.ndarray,
    layout: HexLayout,
    min_bs_distance_m: float,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Uniform in the hexagon, resampling points closer than the minimum
    distance to any BS center."""
    pts = sample_uniform_hexagon(center, layout.circumradius_m, rng, size=size)
    if min_bs_distance_m > 0:
        while True:
            bad = np.min(distances_to_centers(pts, layout), axis=-1) < min_bs_distance_m
            n_bad = int(bad.sum())
            if n_bad == 0:
                break
            pts[bad] = sample_uniform_hexagon(center, layout.circumradius_m, rng, size=n_bad)
    return pts


def drop_network(config, layout: HexLayout, rng: np.random.Generator) -> NetworkRealization:
    """Draw one network realization from the scenario's position law.

    ``config`` needs fields ``users_per_cell``, ``d2d_per_cell``,
    ``min_bs_distance_m`` and ``d2d_link_distance_m``.
    """
    c = layout.num_cells
    k, d = int(config.users_per_cell), int(config.d2d_per_cell)
    user_pos = np.empty((c, k, 2))
    d2d_tx = np.empty((c, d, 2))
    for i, center in enumerate(layout.centers):
        if k:
            user_pos[i] = _sample_with_min_distance(center, layout, config.min_bs_distance_m, rng, k)
        if d:
            d2d_tx[i] = _sample_with_min_distance(center, layout, config.min_bs_distance_m, rng, d)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=(c, d))
    offset = config.d2d_link_distance_m * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    d2d_rx = d2d_tx + offset
    return NetworkRealization(
        layout=layout,
        user_pos=user_pos,
        d2d_tx_pos=d2d_tx,
        d2d_rx_pos=d2d_rx,
        d2d_link_distance_m=float(config.d2d_link_distance_m),
    )
