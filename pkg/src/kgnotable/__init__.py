"""Notable characteristics search over knowledge graphs.

Given a handful of query entities, find a context of similar entities and
report the edge labels whose distribution on the query deviates from the
context.
"""

from .context import (
    ContextResult,
    Metapath,
    MetapathSet,
    NoMetapathsError,
    Query,
    WalkConfig,
    context_rw,
    metapath_score,
    mine_metapaths,
    personalized_pagerank,
    random_walk_context,
)
from .graph import (
    KnowledgeGraph,
    LoadOptions,
    TripleFormatError,
    UnknownLabelError,
    label_frequency,
    load_triples,
    load_tsv,
    restricted_labels,
)
from .pipeline import NotableReport, RunConfig, UnresolvedQueryError, find_notable, resolve_query
from .stats import (
    NotableVerdict,
    build_cardinality_distribution,
    build_instance_distribution,
    delta,
    exact_significance,
    montecarlo_significance,
    mt,
    significance,
)
from .synth import GridSpec, GroundTruth, SyntheticSpec, f1_at_k, generate, run_grid

__version__ = "0.1.0"

__all__ = [
    "ContextResult", "GridSpec", "GroundTruth", "KnowledgeGraph", "LoadOptions", "Metapath",
    "MetapathSet", "NoMetapathsError", "NotableReport", "NotableVerdict", "Query", "RunConfig",
    "SyntheticSpec", "TripleFormatError", "UnknownLabelError", "UnresolvedQueryError",
    "WalkConfig", "build_cardinality_distribution", "build_instance_distribution",
    "context_rw", "delta", "exact_significance", "f1_at_k", "find_notable", "generate",
    "label_frequency", "load_triples", "load_tsv", "metapath_score", "mine_metapaths",
    "montecarlo_significance", "mt", "personalized_pagerank", "random_walk_context",
    "resolve_query", "restricted_labels", "run_grid", "significance",
]
