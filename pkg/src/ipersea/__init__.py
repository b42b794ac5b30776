"""Simulator for a Sybil-resistant DHT with hierarchical IDs, replicated
Kademlia lookups and inspection-lookup Sybil detection."""

from .adversary import AdversaryPolicy, PoisonedValue, SybilReport, lying_friend_report, spawn_sybils
from .analytic import (AnalyticInputs, DegenerateInputs, analytic_fp_random, analytic_fp_trusted,
                       analytic_path_length, malice_sequence)
from .defense import (Inspector, StatusCache, StatusLedger, Verdict, resolve_status,
                      run_inspection_campaign, status_filter)
from .dht import (NoResult, PeerRecord, RoutingTable, iterative_lookup, majority_vote,
                  replicated_get, replicated_put, xor_distance)
from .experiment import ExperimentConfig, MetricsReport, run_experiment, sweep, write_csv
from .graph import EdgeListError, SocialGraph, graph_stats, parse_edge_list
from .idspace import (AllocationExhausted, BootstrapTree, Chunk, IdCertificate, build_network,
                      replica_keys, verify_certificate_chain)
from .world import World

__version__ = "0.1.0"
