"""PPR-based laundering detection on transaction graphs."""

from .anomaly import AnomalyScoreSet, anomaly_scores, top_k
from .behavior import BehaviorScores, behavior_scores, timestamp_scores, weight_scores
from .classifier import (FeatureSet, LogisticModel, PatternFeatureSet, build_features,
                         predict_f, train)
from .graph import (TransactionGraph, fan_in, fan_out, gather_scatter, identify_sources,
                    ingest_edge_list, load_graph, save_graph)
from .pipeline import EvalReport, Mode, run_pipeline
from .ppr import PPRConfig, PPRScoreSet, exact_ppr_oracle, multi_source_ppr, walk_budget

__version__ = "0.1.0"
