"""Parallel batch preparation with pooled buffers.

Prepares one training epoch (sampling + feature/label slicing) with
different worker counts, shows that the produced batches are bit-identical
regardless of schedule, and prints the per-stage timing report plus the
buffer-pool high-water mark that models pinned-memory residency.

Run:  python3 demos/demo_prep.py
"""

import numpy as np

from mfgprep import (FanoutSpec, PrepConfig, make_epoch_plan, run_epoch_prep,
                     synth_graph)
from mfgprep.graph import generate_features, generate_labels
from mfgprep.prep import PrepReport, prep_sweep_csv


def main():
    g = synth_graph(20000, 8, 3.0, seed=2)
    fm = generate_features(g.num_nodes, 32, "f32", seed=2)
    y = generate_labels(g.num_nodes, 16, seed=2)
    plan = make_epoch_plan(np.arange(g.num_nodes), batch_size=1024,
                           shuffle_seed=2)
    print(f"epoch plan: {len(plan)} batches of {plan.batch_size} seeds\n")

    digests = {}
    for P in (1, 2, 4):
        cfg = PrepConfig(num_workers=P, fanouts=FanoutSpec((15, 10, 5)))
        run = run_epoch_prep(g, fm, y, plan, cfg, global_seed=7)
        digests[P] = sorted(b.digest() for b in run)
        r = run.report
        print(f"P={P}: sampling {r.sampling_s*1e3:7.1f} ms, slicing "
              f"{r.slicing_s*1e3:6.1f} ms, wall {r.both_s*1e3:6.1f} ms, "
              f"peak resident buffers {r.peak_resident} "
              f"(pool holds queue_capacity + P = {cfg.queue_capacity + P})")
    print(f"\nbatch digests identical across P=1/2/4: "
          f"{digests[1] == digests[2] == digests[4]}")

    print("\nthroughput sweep CSV (one epoch per worker count):")
    print(prep_sweep_csv(g, fm, y, plan, [1, 2, 4], FanoutSpec((15, 10, 5)),
                         cfg.variant, 7), end="")
    print("\n(on a single-core host the rows are similar; with real cores "
          "the nogil sampling kernels let sampling time drop with P)")


if __name__ == "__main__":
    main()
