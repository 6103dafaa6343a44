"""
A real threaded screening run
=============================

Dock a small library with several workers sharing two device lanes, then
check that the results do not depend on the schedule.
"""
import io

from geodock.docking import DockParams
from geodock.io import write_metrics, write_results
from geodock.pipeline import NodeConfig, run_screening
from geodock.synth import make_library, make_pocket

library = make_library(24, n_atoms=10, n_rotamers=2, seed=2)
pocket = make_pocket(seed=2)
params = DockParams(n_restarts=4, num_repetitions=2, rotation_steps=(8, 8, 4), dihedral_steps=18)

outputs = {}
for workers, devices in [(1, 0), (6, 2)]:
    results, metrics = run_screening(library, pocket, params, NodeConfig(n_workers=workers, n_devices=devices))
    buf = io.StringIO()
    write_results(results, buf)
    outputs[workers, devices] = buf.getvalue()
    print("workers=%d devices=%d  %.1f ligands/s  lane violations=%d" % (
        workers, devices, metrics.throughput, metrics.violations))

print("byte-identical results:", len(set(outputs.values())) == 1)

best = sorted(results, key=lambda r: -r.best_score)[:3]
for r in best:
    print("%-10s %.4f" % (r.ligand_name, r.best_score))

# lane id is always worker id mod device count
print(all(o.lane == o.worker % 2 for o in metrics.offloads))

buf = io.StringIO()
write_metrics(metrics, buf)
print(buf.getvalue())
