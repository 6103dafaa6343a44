"""
Worker saturation with one device lane
======================================

Synthetic service times: each ligand holds the device for 1 unit and then
needs 6 units of CPU optimization. One lane can feed at most 7 workers.
"""
from geodock.bench import compare_hybrid_vs_split, sweep
from geodock.pipeline import NodeConfig
from geodock.testkit import closed_form_throughput

base = NodeConfig(n_workers=1, mode="synthetic")

rows = sweep(range(1, 17), [1], base)
for r in rows:
    bound = closed_form_throughput(r["workers"], 1, base.t_align_device, base.t_opt_cpu)
    bar = "#" * int(40 * r["throughput"])
    print("%2d workers  %.3f  (bound %.3f)  %s" % (r["workers"], r["throughput"], bound, bar))

# more lanes move the plateau out
for d in (2, 3, 4):
    last = sweep([16], [d], base)[0]
    print("%d devices, 16 workers: %.3f ligands/unit" % (d, last["throughput"]))

# sharing the device between workers vs. giving it whole ligands
for row in compare_hybrid_vs_split([1, 2, 3, 4]):
    print("%d devices: hybrid %.3f  split %.3f  (+%.0f%%)" % (
        row["devices"], row["hybrid_throughput"], row["split_throughput"], 100 * row["improvement"]))
