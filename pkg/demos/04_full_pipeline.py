"""End-to-end pipeline at reduced trial counts: Monte Carlo batch,
analytic-vs-empirical comparison table, and both sweep CSVs.

Writes into demos/out/; render the figures afterwards with the plotviz
package:

    plotviz render --kind distance  --in demos/out/goodput_vs_distance.csv  --out demos/out/fig_distance.png
    plotviz render --kind d2d-count --in demos/out/goodput_vs_d2d_count.csv --out demos/out/fig_d2d.png
"""

from pathlib import Path

from mimo_d2d import ScenarioConfig
from mimo_d2d.cli import sweep_d2d, sweep_distance
from mimo_d2d.montecarlo import compare, moment_provider, run_batch

out = Path(__file__).parent / "out"
config = ScenarioConfig(n_drops=40, n_fading_per_drop=8, n_workers=2)

print("running the Monte Carlo batch (a minute or so)...")
batch = run_batch(config)
print(f"{len(batch.records)} SIR samples, {batch.n_excluded} excluded")

table = compare(batch, moment_provider(config))
print(f"\n{'entity':<9} {'bin (m)':>8} {'analytic':>12} {'empirical':>12} {'rel gap':>8}")
for row in table.rows:
    print(f"{row.entity:<9} {row.bin_center_m:8.1f} {row.analytic_goodput_bits:12.4g} "
          f"{row.empirical_goodput_bits:12.4g} {row.rel_gap:8.3f}")

print("\nwriting sweep CSVs...")
csv1 = sweep_distance(config, out)
csv2 = sweep_d2d(config.replace(n_drops=0), [2, 4, 6, 8, 10, 12, 14, 16, 18, 20], out)
print(f"wrote {csv1}\nwrote {csv2}")
