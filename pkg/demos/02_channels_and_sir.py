"""Draw channels for one drop, build the contaminated estimates and the
zero-forcing precoders, and compare exact against large-antenna SIRs."""

import numpy as np

from mimo_d2d import (
    ScenarioConfig,
    build_layout,
    drop_network,
    estimate_channels,
    generate_channels,
    zf_precoder,
)
from mimo_d2d.sir import (
    asymptotic_d2d_sir_all,
    asymptotic_downlink_sir_all,
    exact_d2d_sir_all,
    exact_downlink_sir_all,
)

config = ScenarioConfig()
layout = build_layout(config.cells, config.radius_m)
rng = np.random.default_rng(7)
drop = drop_network(config, layout, rng)

cs = generate_channels(drop, config.pathloss_params(), config.antennas, np.random.SeedSequence(7))
cs = estimate_channels(cs, config.pilot_config())

err = np.linalg.norm(cs.h_hat[0] - cs.h[0, 0]) / np.linalg.norm(cs.h[0, 0])
print(f"pilot-contamination error on the target cell estimate: {err:.3%}")

precoders = [zf_precoder(cs.h_hat[i], i) for i in range(config.cells)]
residual = max(
    np.linalg.norm(cs.h_hat[i] @ precoders[i].matrix - np.eye(config.users_per_cell))
    for i in range(config.cells)
)
print(f"worst zero-forcing residual over 19 cells: {residual:.2e}")

pb, pd = config.pb_watts, config.pd_watts
dl_exact = exact_downlink_sir_all(cs, precoders, pb, pd)
dl_asym = asymptotic_downlink_sir_all(cs, pb, pd, config.pilot_length, config.antennas)
d2d_exact = exact_d2d_sir_all(cs, precoders, pb, pd)
d2d_asym = asymptotic_d2d_sir_all(cs, pb, pd, config.antennas)

print("\ntarget-cell downlink SIR (dB): exact vs large-antenna approximation")
for k in range(config.users_per_cell):
    print(f"  user {k}: {10 * np.log10(dl_exact[k]):7.2f}  vs {10 * np.log10(dl_asym[k]):7.2f}")

print("\ntarget-cell D2D SIR (dB): exact vs approximation")
for j in range(3):
    print(f"  link {j}: {10 * np.log10(d2d_exact[j]):7.2f}  vs {10 * np.log10(d2d_asym[j]):7.2f}")

gap = np.median(np.abs(dl_exact - dl_asym) / dl_exact)
print(f"\nmedian relative gap at M={config.antennas}: {gap:.3f}")
