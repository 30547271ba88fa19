"""FindNC / RWMult orchestration and report serialization."""

from __future__ import annotations

import difflib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

from .context import (
    MAX_QUERY_SIZE,
    ContextResult,
    MetapathSet,
    NoMetapathsError,
    Query,
    WalkConfig,
    context_rw,
    mine_metapaths,
    random_walk_context,
)
from .graph import KnowledgeGraph, restricted_labels
from .stats import EXACT_BUDGET, MC_SAMPLES, NotableVerdict, delta

log = logging.getLogger(__name__)

ALGORITHMS = ("findnc", "rwmult")


class UnresolvedQueryError(LookupError):
    def __init__(self, unresolved: dict[str, list[str]]):
        self.unresolved = unresolved
        parts = []
        for name, cands in unresolved.items():
            hint = f" (did you mean: {', '.join(cands)})" if cands else ""
            parts.append(f"{name!r}{hint}")
        super().__init__("unresolved query names: " + "; ".join(parts))


@dataclass(frozen=True)
class RunConfig:
    walk: WalkConfig = field(default_factory=WalkConfig)
    k: int = 100
    alpha: float = 0.05
    algorithm: str = "findnc"
    output_format: str = "json"
    mc_samples: int = MC_SAMPLES
    exact_budget: int = EXACT_BUDGET
    # wall-clock timings make reports non-reproducible, so they are opt-in
    timings: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.output_format not in ("json", "tsv"):
            raise ValueError("output_format must be 'json' or 'tsv'")

    @property
    def rng_seed(self) -> int:
        return self.walk.rng_seed

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, walk=replace(self.walk, rng_seed=seed))


def resolve_query(g: KnowledgeGraph, names: Sequence[str]) -> tuple[Query, list[str]]:
    """Map names to node ids by exact, case-sensitive match.

    Names are matched against node names, which are also the node labels of
    untyped graphs. Unmatched names are reported together with close
    spellings. Returns the query and any warnings (duplicates).
    """
    if not names:
        raise ValueError("query is empty")
    warnings = []
    unique = list(dict.fromkeys(names))
    if len(unique) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        warnings.append(f"duplicate query names ignored: {', '.join(dupes)}")
    if len(unique) > MAX_QUERY_SIZE:
        raise ValueError(f"query has {len(unique)} names, at most {MAX_QUERY_SIZE} allowed")

    ids, unresolved = [], {}
    for name in unique:
        if g.has_node(name):
            ids.append(g.node_id(name))
            continue
        unresolved[name] = difflib.get_close_matches(name, g.node_names, n=3)
    if unresolved:
        raise UnresolvedQueryError(unresolved)
    for w in warnings:
        log.warning(w)
    return Query(tuple(ids)), warnings


def select_context(
    g: KnowledgeGraph, q: Query, cfg: RunConfig, metapaths: MetapathSet | None = None
) -> tuple[ContextResult, MetapathSet | None, str, list[str], dict[str, float]]:
    """Context for ``cfg.algorithm``; FindNC falls back to RandomWalk when no walk reaches Q."""
    timings: dict[str, float] = {}
    warnings: list[str] = []
    if cfg.algorithm == "rwmult":
        t0 = time.perf_counter()
        ctx = random_walk_context(g, q, cfg.k, cfg.walk)
        timings["scoring"] = _ms(t0)
        return ctx, None, "rwmult", warnings, timings

    t0 = time.perf_counter()
    if metapaths is None:
        metapaths = mine_metapaths(g, q, cfg.walk)
    timings["mining"] = _ms(t0)
    t0 = time.perf_counter()
    try:
        ctx = context_rw(g, q, cfg.k, cfg.walk, metapaths)
        used = "findnc"
    except NoMetapathsError:
        warnings.append("no metapaths found; fell back to rwmult context")
        log.warning(warnings[-1])
        ctx = random_walk_context(g, q, cfg.k, cfg.walk)
        used = "rwmult"
    timings["scoring"] = _ms(t0)
    return ctx, metapaths, used, warnings, timings


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def label_verdicts(g: KnowledgeGraph, q: Query, context: Sequence[int], cfg: RunConfig) -> list[NotableVerdict]:
    """Verdicts for every label leaving ``Q ∪ C``, sorted by delta (desc), then label name."""
    nodes = list(q.nodes)
    ctx = list(context)
    if not ctx:
        return []
    labels = sorted(restricted_labels(g, nodes + ctx), key=g.edge_label_name)
    verdicts = [
        delta(g, l, nodes, ctx, cfg.alpha, budget=cfg.exact_budget,
              samples=cfg.mc_samples, rng_seed=cfg.rng_seed)
        for l in labels
    ]
    verdicts.sort(key=lambda v: (-v.delta, g.edge_label_name(v.label)))
    return verdicts


@dataclass
class NotableReport:
    query: list[str]
    context: list[tuple[str, float]]
    verdicts: list[NotableVerdict]
    graph: KnowledgeGraph
    config: RunConfig
    algorithm_used: str
    metapaths: MetapathSet | None = None
    warnings: list[str] = field(default_factory=list)
    timings_ms: dict[str, float] = field(default_factory=dict)

    @property
    def notable(self) -> list[NotableVerdict]:
        return [v for v in self.verdicts if v.notable]

    def verdict(self, label_name: str) -> NotableVerdict:
        lid = self.graph.edge_label_id(label_name)
        for v in self.verdicts:
            if v.label == lid:
                return v
        raise KeyError(label_name)

    def to_dict(self) -> dict:
        g = self.graph

        def value_name(v):
            return None if v is None else g.node_label_names[v]

        chars = []
        for v in self.verdicts:
            chars.append({
                "label": g.edge_label_name(v.label),
                "direction": "inverse" if g.is_inverse_label(v.label) else "forward",
                "delta": _fmt(v.delta),
                "kind": v.kind,
                "p_sig_instance": _fmt(v.p_sig_instance),
                "p_sig_cardinality": _fmt(v.p_sig_cardinality),
                "instance_distribution": {
                    "support": [value_name(s) for s in v.instance.support],
                    "q": v.instance.q_counts.tolist(),
                    "c": v.instance.c_counts.tolist(),
                },
                "cardinality_distribution": {
                    "support": list(v.cardinality.support),
                    "q": v.cardinality.q_counts.tolist(),
                    "c": v.cardinality.c_counts.tolist(),
                },
            })
        out = {
            "query": list(self.query),
            "context": [{"node": n, "score": _fmt(s)} for n, s in self.context],
            "characteristics": chars,
            "timings_ms": {k: round(t, 3) for k, t in self.timings_ms.items()},
            "config": _config_dict(self.config),
            "algorithm_used": self.algorithm_used,
            "warnings": list(self.warnings),
        }
        if self.metapaths is not None:
            out["metapaths"] = self.metapaths.to_json(g)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    def to_tsv(self) -> str:
        rows = ["label\tdirection\tdelta\tkind\tp_sig_instance\tp_sig_cardinality"]
        for c in self.to_dict()["characteristics"]:
            rows.append("\t".join(str(c[k]) for k in
                                  ("label", "direction", "delta", "kind", "p_sig_instance", "p_sig_cardinality")))
        return "\n".join(rows) + "\n"


def _fmt(x: float) -> float:
    """Round to 6 significant digits so serialized reports are stable."""
    return float(f"{float(x):.6g}")


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["walk"] = asdict(cfg.walk)
    return d


def find_notable(
    g: KnowledgeGraph, q: Query, cfg: RunConfig, metapaths: MetapathSet | None = None
) -> NotableReport:
    """Select a context, then test every label leaving ``Q ∪ C``."""
    q.check(g)
    ctx, mined, used, warnings, timings = select_context(g, q, cfg, metapaths)
    if not len(ctx):
        warnings.append("context is empty; no labels tested")
    t0 = time.perf_counter()
    verdicts = label_verdicts(g, q, ctx.nodes, cfg)
    timings["testing"] = _ms(t0)
    return NotableReport(
        query=[g.node_name(n) for n in q.nodes],
        context=[(g.node_name(n), s) for n, s in ctx.entries],
        verdicts=verdicts,
        graph=g,
        config=cfg,
        algorithm_used=used,
        metapaths=mined,
        warnings=warnings,
        timings_ms=timings if cfg.timings else {},
    )


def context_to_dict(g: KnowledgeGraph, q: Query, ctx: ContextResult,
                    metapaths: MetapathSet | None = None) -> dict:
    out = {
        "query": [g.node_name(n) for n in q.nodes],
        "context": [{"node": g.node_name(n), "score": _fmt(s)} for n, s in ctx.entries],
    }
    if metapaths is not None:
        out["metapaths"] = metapaths.to_json(g)
    return out

