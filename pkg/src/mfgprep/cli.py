"""Command-line entry point.

Subcommands: ingest, sample, explore, pipeline, ablate, validate, stats.
Exit codes: 0 ok, 1 usage error, 2 I/O or format error, 3 validation
failure.  A single --seed flag threads through every stochastic component.
"""

import argparse
import json
import sys

import numpy as np

from . import bench, graph, pipeline, prep, reference
from .sampler import FanoutSpec, SamplerVariant, list_variants

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0,
                   help="global seed for every stochastic component")
    p.add_argument("--fanouts", default="15,10,5",
                   help="comma-separated per-hop fanouts, outermost first")
    p.add_argument("--batch-size", type=int, default=1024)


def _add_synth(p):
    p.add_argument("--synth-nodes", type=int, default=10000)
    p.add_argument("--synth-avg-degree", type=float, default=10.0)
    p.add_argument("--synth-exponent", type=float, default=3.0)
    p.add_argument("--feature-dim", type=int, default=32)
    p.add_argument("--num-classes", type=int, default=16)
    p.add_argument("--feature-dtype", choices=["f16", "f32"], default="f32")


def build_parser() -> _Parser:
    ap = _Parser(prog="mfgprep",
                 description="Mini-batch MFG preparation and pipeline tools")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ingest", help="build CSR/FEAT/LABL files")
    p.add_argument("--edge-list", help="text edge list (src dst per line)")
    p.add_argument("--num-nodes", type=int,
                   help="node count for --edge-list input")
    p.add_argument("--undirected", action="store_true",
                   help="add the reverse of every edge")
    p.add_argument("--out-prefix", required=True)
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("stats", help="degree histogram CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("sample", help="batch-prep throughput report")
    p.add_argument("--graph")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--workers", default="1,2,4",
                   help="comma-separated worker counts, one CSV row each")
    p.add_argument("--variant", default=SamplerVariant().descriptor)
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("explore", help="record a trace and sweep variants")
    p.add_argument("--graph")
    p.add_argument("--trace", help="trace file to write/reuse")
    p.add_argument("--variants", default="all",
                   help="'all' or comma-separated descriptors")
    p.add_argument("--baseline", default="std_hash/hash_set/twopass")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--num-batches", type=int, default=4)
    p.add_argument("--out", help="sweep CSV path (default stdout)")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("pipeline", help="run the transfer/compute pipeline")
    p.add_argument("--graph")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--mode", choices=["virtual", "live"], default="virtual")
    p.add_argument("--serial", action="store_true",
                   help="disable transfer/compute overlap")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--prefetch-depth", type=int, default=1)
    p.add_argument("--bandwidth-gbs", type=float, default=12.3)
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--validate-on-transfer", action="store_true")
    p.add_argument("--compute-alpha", type=float, default=1e-3)
    p.add_argument("--compute-beta", type=float, default=0.0)
    p.add_argument("--compute-gamma", type=float, default=0.0)
    p.add_argument("--variant", default=SamplerVariant().descriptor)
    p.add_argument("--num-batches", type=int, default=8)
    p.add_argument("--events-out", help="timeline CSV path")
    p.add_argument("--summary-out", help="summary JSON path")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("ablate", help="optimization-ladder epoch times")
    p.add_argument("--graph")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--num-batches", type=int, default=8)
    p.add_argument("--bandwidth-gbs", type=float, default=12.3)
    p.add_argument("--compute-alpha", type=float, default=1e-3)
    p.add_argument("--baseline-variant", default="std_hash/hash_set/twopass")
    p.add_argument("--fast-variant", default="flat_probing/vector_set/fused")
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("validate", help="run the full oracle suite")
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--avg-degree", type=float, default=8.0)
    p.add_argument("--hidden", type=int, default=256,
                   help="hidden dimension for the aggregation oracle")
    _add_common(p)
    return ap


def _load_or_synth(args):
    if getattr(args, "graph", None):
        g = graph.load_csr(args.graph)
        fm = (graph.load_features(args.features) if getattr(args, "features", None)
              else graph.generate_features(g.num_nodes, args.feature_dim,
                                           args.feature_dtype, args.seed))
        y = (graph.load_labels(args.labels) if getattr(args, "labels", None)
             else graph.generate_labels(g.num_nodes, args.num_classes, args.seed))
    else:
        g = graph.synth_graph(args.synth_nodes, args.synth_avg_degree,
                              args.synth_exponent, args.seed)
        fm = graph.generate_features(g.num_nodes, args.feature_dim,
                                     args.feature_dtype, args.seed)
        y = graph.generate_labels(g.num_nodes, args.num_classes, args.seed)
    return g, fm, y


def _write_or_print(text, path):
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _plan_for(args, g, num_batches=None):
    plan = prep.make_epoch_plan(np.arange(g.num_nodes), args.batch_size,
                                args.seed)
    if num_batches is not None and len(plan) > num_batches:
        plan = prep.EpochPlan(batches=plan.batches[:num_batches],
                              batch_size=plan.batch_size,
                              shuffle_seed=plan.shuffle_seed)
    return plan


def _variants_from(text):
    if text == "all":
        return list_variants()
    return [SamplerVariant.from_descriptor(t) for t in text.split(",")]


def cmd_ingest(args):
    if args.edge_list:
        if args.num_nodes is None:
            raise SystemExit(EXIT_USAGE)
        edges = graph.read_edge_list(args.edge_list)
        g = graph.from_edge_list(edges, args.num_nodes,
                                 make_undirected=args.undirected)
    else:
        g = graph.synth_graph(args.synth_nodes, args.synth_avg_degree,
                              args.synth_exponent, args.seed)
    fm = graph.generate_features(g.num_nodes, args.feature_dim,
                                 args.feature_dtype, args.seed)
    y = graph.generate_labels(g.num_nodes, args.num_classes, args.seed)
    graph.save_csr(g, args.out_prefix + ".graph")
    graph.save_features(fm, args.out_prefix + ".feat")
    graph.save_labels(y, args.out_prefix + ".labl")
    print(f"wrote {args.out_prefix}.graph ({g.num_nodes} nodes, "
          f"{g.num_edges} edge slots), .feat, .labl")
    return EXIT_OK


def cmd_stats(args):
    g = graph.load_csr(args.graph)
    hist = graph.degree_histogram(g)
    lines = ["degree,node_count"]
    lines += [f"{d},{c}" for d, c in sorted(hist.buckets.items())]
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args):
    g, fm, y = _load_or_synth(args)
    plan = _plan_for(args, g)
    workers = [int(w) for w in args.workers.split(",")]
    csv_text = prep.prep_sweep_csv(g, fm, y, plan, workers,
                                   FanoutSpec.parse(args.fanouts),
                                   SamplerVariant.from_descriptor(args.variant),
                                   args.seed)
    _write_or_print(csv_text, args.out)
    return EXIT_OK


def cmd_explore(args):
    g, _, _ = _load_or_synth(args)
    plan = _plan_for(args, g, args.num_batches)
    fanouts = FanoutSpec.parse(args.fanouts)
    trace = bench.record_trace(g, plan, fanouts, args.seed, path=args.trace)
    baseline = SamplerVariant.from_descriptor(args.baseline)
    variants = _variants_from(args.variants)
    result = bench.sweep(trace, g, variants, baseline,
                         repetitions=args.repetitions)
    _write_or_print(result.to_csv(), args.out)
    return EXIT_OK


def _models_from(args):
    tm = pipeline.TransferModel(bandwidth=args.bandwidth_gbs * 1e9,
                                efficiency=args.efficiency,
                                validate_on_transfer=args.validate_on_transfer)
    cm = pipeline.ComputeModel(alpha=args.compute_alpha,
                               beta=args.compute_beta,
                               gamma=args.compute_gamma)
    return tm, cm


def cmd_pipeline(args):
    g, fm, y = _load_or_synth(args)
    plan = _plan_for(args, g, args.num_batches)
    fanouts = FanoutSpec.parse(args.fanouts)
    variant = SamplerVariant.from_descriptor(args.variant)
    tm, cm = _models_from(args)
    cfg = prep.PrepConfig(num_workers=args.workers, fanouts=fanouts,
                          variant=variant)
    run = prep.run_epoch_prep(g, fm, y, plan, cfg, args.seed)
    if args.mode == "live":
        tl, rep = pipeline.run_live(run, tm, cm,
                                    prefetch_depth=args.prefetch_depth,
                                    overlap=not args.serial)
        print(json.dumps(rep.as_dict(), indent=2))
    else:
        batches = [b.detach() for b in run]
        ready = pipeline.prep_ready_schedule(
            [s + sl for _, s, sl in sorted(run.report.per_batch)],
            args.workers)
        costs = pipeline.costs_from_batches(batches, ready)
        tl = (pipeline.run_serial(costs, tm, cm) if args.serial
              else pipeline.run_pipelined(costs, tm, cm, args.prefetch_depth))
        print(tl.summary_json())
    if args.events_out:
        with open(args.events_out, "w") as f:
            f.write(tl.to_csv())
    if args.summary_out:
        with open(args.summary_out, "w") as f:
            f.write(tl.summary_json())
    return EXIT_OK


def cmd_ablate(args):
    g, fm, y = _load_or_synth(args)
    plan = _plan_for(args, g, args.num_batches)
    fanouts = FanoutSpec.parse(args.fanouts)
    tm = pipeline.TransferModel(bandwidth=args.bandwidth_gbs * 1e9)
    cm = pipeline.ComputeModel(alpha=args.compute_alpha)

    def measure(variant_desc):
        variant = SamplerVariant.from_descriptor(variant_desc)
        prep.prepare_batch(g, fm, y, plan.batches[0], fanouts, variant,
                           args.seed)  # warm-up
        cfg = prep.PrepConfig(num_workers=1, fanouts=fanouts, variant=variant)
        run = prep.run_epoch_prep(g, fm, y, plan, cfg, args.seed)
        batches = [b.detach() for b in run]
        times = [s + sl for _, s, sl in sorted(run.report.per_batch)]
        return batches, times

    base_batches, base_times = measure(args.baseline_variant)
    _, fast_times = measure(args.fast_variant)
    costs = pipeline.costs_from_batches(base_batches)
    rows = pipeline.ablation_report(costs, base_times, fast_times, tm, cm,
                                    num_workers=args.workers)
    lines = ["optimization,epoch_s"]
    lines += [f"{r['optimization']},{r['epoch_s']:.6f}" for r in rows]
    _write_or_print("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args):
    results = reference.run_validation(
        n=args.nodes, avg_degree=args.avg_degree, seed=args.seed,
        fanouts=FanoutSpec.parse(args.fanouts),
        batch_size=min(args.batch_size, args.nodes),
        hidden=args.hidden)
    failed = 0
    for name, ok, detail in results:
        mark = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{mark}] {name}{suffix}")
        failed += 0 if ok else 1
    if failed:
        print(f"{failed} check(s) failed")
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE
    handlers = {"ingest": cmd_ingest, "stats": cmd_stats,
                "sample": cmd_sample, "explore": cmd_explore,
                "pipeline": cmd_pipeline, "ablate": cmd_ablate,
                "validate": cmd_validate}
    try:
        return handlers[args.cmd](args)
    except (OSError, graph.FormatError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_IO
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
