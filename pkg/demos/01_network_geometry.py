"""Walk through the network geometry: hexagonal layout, uniform drops,
and the distances that drive every pathloss in the model."""

import numpy as np

from mimo_d2d import ScenarioConfig, build_layout, drop_network, sample_uniform_hexagon
from mimo_d2d.geometry import SQRT3, distances_to_centers

config = ScenarioConfig()
layout = build_layout(config.cells, config.radius_m)

print(f"{config.cells} hexagonal cells, circumradius {config.radius_m:.0f} m")
ring_radii = np.linalg.norm(layout.centers, axis=1)
print("ring radii (m):", np.unique(np.round(ring_radii, 3)))
print(f"adjacent spacing sqrt(3) R = {SQRT3 * config.radius_m:.3f} m")

rng = np.random.default_rng(0)
drop = drop_network(config, layout, rng)
print(f"\none drop: {drop.user_pos.shape[0] * drop.user_pos.shape[1]} users, "
      f"{drop.d2d_tx_pos.shape[0] * drop.d2d_tx_pos.shape[1]} D2D pairs")

sep = np.linalg.norm(drop.d2d_rx_pos - drop.d2d_tx_pos, axis=-1)
print(f"every D2D link is exactly {sep.min():.1f} m (max {sep.max():.1f} m)")

dist = np.linalg.norm(drop.user_pos[0], axis=1)
print(f"cell-1 user distances to their BS: {np.sort(np.round(dist, 1))}")

# uniformity sanity: the inscribed disk holds ~90.69% of the samples
pts = sample_uniform_hexagon(np.zeros(2), config.radius_m, rng, size=200_000)
frac = (np.linalg.norm(pts, axis=1) <= SQRT3 / 2 * config.radius_m).mean()
print(f"\ninscribed-disk hit fraction: {frac:.4f} (area ratio 0.9069)")

# tiling: points of cell 4 are closest to center 4
pts = sample_uniform_hexagon(layout.centers[4], config.radius_m, rng, size=50_000)
nearest = np.argmin(distances_to_centers(pts, layout), axis=1)
print(f"nearest-center check for cell 4: {np.unique(nearest)}")
