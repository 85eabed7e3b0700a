# Statistical layer walkthrough: change points, anomalies, peer outliers,
# and the assembled deviation table.

import numpy as np

from ranloop import scenarios
from ranloop.datastore import DataStore, ingest_scenario_data
from ranloop.simulator import SimulationRun, build_topology
from ranloop.tsa import (
    AnomalyParams,
    ChangePointParams,
    Series,
    build_deviation_table,
    detect_anomalies,
    detect_change_points,
    score_peers,
)

rng = np.random.default_rng(0)

# --- change points: CUSUM on residuals, confirmed by a two-sample test -----
values = rng.normal(100, 3, 300)
values[180:] -= 20  # sustained shift
series = Series(np.arange(300) * 900, values)
for cp in detect_change_points(series, ChangePointParams(remove_diurnal=False)):
    print(f"change point at interval {cp.onset // 900}: {cp.direction}, "
          f"magnitude {cp.magnitude:.1f}, score {cp.score:.1f}")

# --- anomalies: robust z against a trailing median/MAD window ---------------
spiky = rng.normal(50, 2, 200)
spiky[120] += 30
flags = detect_anomalies(Series(np.arange(200) * 900, spiky), AnomalyParams(5.0, 24))
print("anomalies:", [(f.timestamp // 900, round(f.robust_z, 1)) for f in flags])

# --- peer comparison: one cell sitting far from its siblings ----------------
peers = {f"cell-{i}": Series(np.arange(96) * 900, rng.normal(100, 1, 96))
         for i in range(4)}
peers["cell-bad"] = Series(np.arange(96) * 900, rng.normal(70, 1, 96))
result = score_peers(peers, (0, 96 * 900), threshold=5.0, peer_group="node-1")
for o in result.outliers:
    print(f"peer outlier {o.element_id}: score {o.outlier_score:.1f}")

# --- the full deviation table on a band-wide fault ---------------------------
spec = scenarios.band_fault(7, band="b1", horizon=288,
                            topology=scenarios.topology_6())
topo = build_topology(spec.topology)
run = SimulationRun(topo, spec)
store = DataStore()
ingest_scenario_data(store, topo, run, run.advance(spec.horizon), spec)

table = build_deviation_table(store, topo, (0, spec.horizon_s))
print("\ndeviation table (top rows):")
print("\n".join(table.to_text().splitlines()[:8]))
print("\nband-level summary:", table.summary["band"])
