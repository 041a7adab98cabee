"""Mini-batch preparation engine for sampled GNN workloads.

Fanout-bounded neighborhood sampling with message-flow-graph construction,
shared-memory parallel batch preparation, a modeled transfer/compute
pipeline with blocking-time accounting, and a hop-replay benchmark harness
for the sampler's data-structure design space.
"""

from .graph import (CsrGraph, DegreeHistogram, FeatureMatrix, FormatError,
                    LabelVector, degree_histogram, from_edge_list,
                    generate_features, generate_labels, load_csr,
                    load_features, load_labels, read_edge_list, save_csr,
                    save_features, save_labels, synth_graph)
from .sampler import (FanoutSpec, IdMap, Mfg, MfgLayer, SamplerVariant,
                      SeedBatch, HopStream, list_variants, multihop_mfg,
                      one_hop_mfg, sample_neighbors)
from .prep import (EpochPlan, PrepConfig, PreparedBatch, PrepReport,
                   make_epoch_plan, prepare_batch, run_epoch_prep,
                   slice_features, slice_labels)
from .pipeline import (BatchCost, ComputeModel, LiveReport, Timeline,
                       TransferModel, ablation_report, costs_from_batches,
                       prep_ready_schedule, run_live, run_pipelined,
                       run_serial, transfer_time)
from .mpnn import (LayerWeights, full_forward, init_weights, mfg_forward,
                   sampled_reference_forward)
from .bench import (Trace, load_trace, record_trace, replay_variant,
                    save_trace, sweep)
from .rng import CounterRng, stream_key

__version__ = "0.1.0"
