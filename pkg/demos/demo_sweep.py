"""Design-space sweep over the sampler's data-structure variants.

Records a hop-replay trace (pinning every hop's destination list and draw
stream), then times all 18 map x set x fusion variants on identical work.
Structural digests guarantee every variant produced the same MFGs, so the
numbers compare implementations, not sampling luck.

Run:  python3 demos/demo_sweep.py
"""

from collections import defaultdict

import numpy as np

from mfgprep import (FanoutSpec, SamplerVariant, list_variants,
                     make_epoch_plan, record_trace, sweep, synth_graph)


def main():
    g = synth_graph(30000, 10, 2.5, seed=4)
    plan = make_epoch_plan(np.arange(g.num_nodes), 1024, 4)
    plan = type(plan)(batches=plan.batches[:4], batch_size=plan.batch_size,
                      shuffle_seed=plan.shuffle_seed)
    fanouts = FanoutSpec((15, 10, 5))
    trace = record_trace(g, plan, fanouts, global_seed=4)
    print(f"trace: {len(trace.records)} hop records over "
          f"{len(plan)} batches, {trace.num_hops()} hops each")

    baseline = SamplerVariant.from_descriptor("std_hash/hash_set/twopass")
    res = sweep(trace, g, list_variants(), baseline, repetitions=5)
    print(f"swept {len(list_variants())} variants; all digests matched the "
          f"baseline ({baseline.descriptor})\n")

    total = defaultdict(float)
    for variant, hop, t, s in res.rows:
        total[variant] += t
    base_total = total[baseline.descriptor]
    print(f"{'variant':<38}{'total ms':>10}{'speedup':>9}")
    for variant, t in sorted(total.items(), key=lambda kv: kv[1]):
        print(f"{variant:<38}{t*1e3:>10.2f}{base_total/t:>9.2f}x")


if __name__ == "__main__":
    main()
