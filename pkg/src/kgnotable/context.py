"""Context discovery: frequency-weighted Personalized PageRank and ContextRW.

ContextRW mines metapaths (edge-label sequences) with random walks that end
at a query node, then scores every node by the share of metapath-matching
paths from the query that end there, weighted by metapath frequency.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import KnowledgeGraph

log = logging.getLogger(__name__)

MAX_QUERY_SIZE = 10
# Walks are sampled in fixed blocks, each with its own RNG stream, so results
# do not depend on how blocks are spread across workers.
WALK_BLOCK = 1 << 15


class NoMetapathsError(RuntimeError):
    """No walk reached the query; fall back to :func:`random_walk_context`."""


@dataclass(frozen=True)
class Query:
    nodes: tuple[int, ...]

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not 1 <= len(nodes) <= MAX_QUERY_SIZE:
            raise ValueError(f"query must have 1..{MAX_QUERY_SIZE} nodes, got {len(nodes)}")
        if len(set(nodes)) != len(nodes):
            raise ValueError("query contains duplicate nodes")

    def check(self, g: KnowledgeGraph) -> "Query":
        bad = [n for n in self.nodes if not 0 <= n < g.num_nodes]
        if bad:
            raise ValueError(f"query nodes not in graph: {bad}")
        return self

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.nodes)] = True
        return m

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass(frozen=True)
class WalkConfig:
    damping: float = 0.8
    iterations: int = 10
    num_walk_samples: int = 1_000_000
    max_metapath_len: int = 5
    num_metapaths: int = 5
    rng_seed: int = 0
    # "frequency" picks edges proportionally to the label-rarity weight,
    # "uniform" ignores it.
    walk_weighting: str = "frequency"
    # On typed graphs, keep only candidates whose node label matches a query node.
    same_type: bool = True
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        for name in ("iterations", "num_walk_samples", "max_metapath_len", "num_metapaths", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.walk_weighting not in ("frequency", "uniform"):
            raise ValueError("walk_weighting must be 'frequency' or 'uniform'")


@dataclass(frozen=True)
class Metapath:
    labels: tuple[int, ...]
    count: int

    def __post_init__(self):
        if len(self.labels) < 1 or self.count < 1:
            raise ValueError("metapath needs at least one label and a positive count")


@dataclass(frozen=True)
class MetapathSet:
    paths: tuple[Metapath, ...] = ()

    @property
    def total_count(self) -> int:
        return sum(p.count for p in self.paths)

    def probabilities(self) -> np.ndarray:
        counts = np.array([p.count for p in self.paths], dtype=float)
        return counts / counts.sum() if len(counts) else counts

    def __len__(self) -> int:
        return len(self.paths)

    def __bool__(self) -> bool:
        return bool(self.paths)

    def to_json(self, g: KnowledgeGraph) -> list[dict]:
        return [{"labels": [g.edge_label_name(l) for l in p.labels], "count": p.count}
                for p in self.paths]

    @classmethod
    def from_json(cls, g: KnowledgeGraph, data: Iterable[dict]) -> "MetapathSet":
        paths = tuple(Metapath(tuple(g.edge_label_id(n) for n in d["labels"]), int(d["count"]))
                      for d in data)
        if len({p.labels for p in paths}) != len(paths):
            raise ValueError("duplicate metapaths")
        return cls(paths)


@dataclass(frozen=True)
class ContextResult:
    entries: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    @property
    def nodes(self) -> list[int]:
        return [n for n, _ in self.entries]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def top(self, k: int) -> "ContextResult":
        return ContextResult(self.entries[:k])


# -- edge weights -------------------------------------------------------------


def edge_weights(g: KnowledgeGraph) -> np.ndarray:
    """Per-edge weight ``1 - |E_l|/|E|`` aligned with ``g.targets``."""
    freq = g.label_counts / g.num_edges
    return 1.0 - freq[g.edge_labels]


def weighted_adjacency_weight(g: KnowledgeGraph, u: int, v: int, label: int) -> float:
    """Weight of edge ``(u, v)`` with ``label``; 0 if no such edge exists."""
    targets, labels = g.out_edges(u)
    if not np.any((targets == v) & (labels == label)):
        return 0.0
    return 1.0 - g.label_counts[label] / g.num_edges


def weighted_adjacency(g: KnowledgeGraph) -> sp.csr_matrix:
    """``A`` with parallel edges between the same pair summed."""
    n = g.num_nodes
    a = sp.csr_matrix((edge_weights(g), (g.sources, g.targets)), shape=(n, n))
    a.sum_duplicates()
    return a


# -- Personalized PageRank ----------------------------------------------------


class _Transition:
    """Row-normalised weighted adjacency, transposed for ``p <- P^T p``."""

    def __init__(self, g: KnowledgeGraph):
        a = weighted_adjacency(g)
        out = np.asarray(a.sum(axis=1)).ravel()
        self.dangling = out <= 0
        inv = np.zeros_like(out)
        inv[~self.dangling] = 1.0 / out[~self.dangling]
        self.pt = (sp.diags(inv) @ a).T.tocsr()

    def run(self, seed: int, damping: float, iterations: int, history: list | None = None):
        n = self.pt.shape[0]
        v = np.zeros(n)
        v[seed] = 1.0
        p = v.copy()
        for _ in range(iterations):
            lost = p[self.dangling].sum()
            p = damping * (self.pt @ p)
            p[seed] += damping * lost + (1.0 - damping)
            if history is not None:
                history.append(p.copy())
        return p


def personalized_pagerank(
    g: KnowledgeGraph, seed: int, cfg: WalkConfig, history: list | None = None
) -> np.ndarray:
    """Power iteration of ``p = c Ã p + (1 - c) v`` with ``v`` the seed indicator.

    Runs ``cfg.iterations`` sweeps starting from ``p = v`` and returns the
    dense score vector indexed by node id. Mass sitting on nodes without
    positive-weight out-edges is returned to the seed. When ``history`` is
    given, each iterate is appended to it.
    """
    if not 0 <= seed < g.num_nodes:
        raise ValueError(f"seed {seed} not in graph")
    return _Transition(g).run(seed, cfg.damping, cfg.iterations, history)


def random_walk_context(g: KnowledgeGraph, q: Query, k: int, cfg: WalkConfig) -> ContextResult:
    """RandomWalk baseline: sum of per-query-node PageRank vectors, top-k outside Q."""
    q.check(g)
    trans = _Transition(g)
    total = np.zeros(g.num_nodes)
    for n in q:
        total += trans.run(n, cfg.damping, cfg.iterations)
    return top_k(g, total, q, k, cfg.same_type)


# -- ContextRW ------------------------------------------------------------------


class _WalkTables:
    """Cumulative edge weights laid out so one searchsorted picks a step for every walk."""

    def __init__(self, g: KnowledgeGraph, weighting: str):
        w = edge_weights(g) if weighting == "frequency" else np.ones(g.num_edges)
        self.cum = np.cumsum(w)
        indptr = g.indptr
        before = np.concatenate(([0.0], self.cum))
        self.start = before[indptr[:-1]]
        self.out = before[indptr[1:]] - self.start
        self.lo = indptr[:-1]
        self.hi = indptr[1:] - 1
        self.weights = w
        self.targets = g.targets
        self.labels = g.edge_labels
        self.movable = self.out > 0

    def step(self, pos: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Edge index chosen from each position (all positions must be movable)."""
        r = rng.random(pos.shape[0]) * self.out[pos]
        e = np.searchsorted(self.cum, self.start[pos] + r, side="right")
        return np.clip(e, self.lo[pos], self.hi[pos])


def _walk_block(tables: _WalkTables, starts_pool: np.ndarray, is_query: np.ndarray,
                n_walks: int, max_len: int, rng: np.random.Generator) -> Counter:
    pos = starts_pool[rng.integers(0, starts_pool.shape[0], size=n_walks)]
    hist = np.full((n_walks, max_len), -1, dtype=np.int64)
    alive = np.arange(n_walks)
    found: Counter = Counter()
    for depth in range(max_len):
        if alive.size == 0:
            break
        here = pos[alive]
        ok = tables.movable[here]
        alive, here = alive[ok], here[ok]
        e = tables.step(here, rng)
        # float round-off can land on a zero-weight edge at a segment boundary
        bad = tables.weights[e] <= 0
        if bad.any():
            keep = ~bad
            alive, e = alive[keep], e[keep]
        hist[alive, depth] = tables.labels[e]
        pos[alive] = tables.targets[e]
        done = is_query[pos[alive]]
        if done.any():
            rows = hist[alive[done], : depth + 1]
            uniq, counts = np.unique(rows, axis=0, return_counts=True)
            for labels, c in zip(uniq.tolist(), counts.tolist()):
                found[tuple(labels)] += c
            alive = alive[~done]
    return found


def mine_metapaths(g: KnowledgeGraph, q: Query, cfg: WalkConfig) -> MetapathSet:
    """Sample random walks from ``V \\ Q`` and keep the most frequent label sequences.

    A walk is recorded when it reaches a query node within
    ``cfg.max_metapath_len`` steps; longer walks and walks stuck at a node
    without usable out-edges are discarded. Start nodes without usable
    out-edges are skipped, which is the same as resampling them. On typed
    graphs with ``cfg.same_type`` the walks start only from context
    candidates (see :func:`candidate_mask`).
    """
    q.check(g)
    tables = _WalkTables(g, cfg.walk_weighting)
    is_query = q.mask(g.num_nodes)
    pool = np.flatnonzero(candidate_mask(g, q, cfg.same_type) & tables.movable)
    if pool.size == 0:
        return MetapathSet()

    n_blocks = -(-cfg.num_walk_samples // WALK_BLOCK)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(n_blocks)

    def run(b: int) -> Counter:
        size = min(WALK_BLOCK, cfg.num_walk_samples - b * WALK_BLOCK)
        return _walk_block(tables, pool, is_query, size, cfg.max_metapath_len,
                           np.random.default_rng(seeds[b]))

    if cfg.workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]
    found: Counter = Counter()
    for part in parts:
        found.update(part)

    ranked = sorted(found.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
    kept = ranked[: cfg.num_metapaths]
    log.debug("mined %d distinct metapaths, kept %d", len(found), len(kept))
    return MetapathSet(tuple(Metapath(labels, count) for labels, count in kept))


def reverse_metapath(g: KnowledgeGraph, labels: Sequence[int]) -> tuple[int, ...]:
    """Read a walk-to-query label sequence outward from the query node."""
    inv = g.inverse_labels
    return tuple(int(inv[l]) for l in reversed(labels))


def path_counts(g: KnowledgeGraph, sources: Sequence[int], labels: Sequence[int]) -> np.ndarray:
    """``counts[v, j]``: number of label-constrained paths from ``sources[j]`` to ``v``."""
    x = np.zeros((g.num_nodes, len(sources)))
    x[list(sources), np.arange(len(sources))] = 1.0
    for l in labels:
        x = g.label_matrix(l).T @ x
    return np.asarray(x)


def metapath_score(g: KnowledgeGraph, q: Query, metapaths: MetapathSet) -> np.ndarray:
    """Similarity of every node to the query under the mined metapaths.

    For each metapath and query node, the paths leaving the query node that
    follow the reversed metapath are counted per endpoint and divided by the
    number of such paths ending outside the query. The shares are summed,
    weighted by metapath probability. Query nodes score 0.
    """
    if not metapaths:
        raise ValueError("metapath set is empty")
    is_query = q.mask(g.num_nodes)
    score = np.zeros(g.num_nodes)
    for path, pr in zip(metapaths.paths, metapaths.probabilities()):
        counts = path_counts(g, q.nodes, reverse_metapath(g, path.labels))
        counts[is_query] = 0.0
        denom = counts.sum(axis=0)
        live = denom > 0
        if live.any():
            score += pr * (counts[:, live] / denom[live]).sum(axis=1)
    return score


def context_rw(
    g: KnowledgeGraph, q: Query, k: int, cfg: WalkConfig, metapaths: MetapathSet | None = None
) -> ContextResult:
    """ContextRW: mine metapaths (unless given), score, and return the top-k nodes outside Q."""
    q.check(g)
    if k <= 0:
        return ContextResult()
    if metapaths is None:
        metapaths = mine_metapaths(g, q, cfg)
    if not metapaths:
        raise NoMetapathsError("no random walk reached the query; use random_walk_context instead")
    return top_k(g, metapath_score(g, q, metapaths), q, k, cfg.same_type)


def candidate_mask(g: KnowledgeGraph, q: Query, same_type: bool = True) -> np.ndarray:
    """Nodes eligible for the context.

    ``V \\ Q``, narrowed to nodes typed like some query node when
    ``same_type`` is set, the graph is typed and the query has typed nodes.
    """
    mask = ~q.mask(g.num_nodes)
    if same_type and g.typed:
        qn = [n for n in q.nodes if g.has_type[n]]
        if qn:
            mask &= g.has_type & np.isin(g.node_labels, g.node_labels[qn])
    return mask


def top_k(g: KnowledgeGraph, scores: np.ndarray, q: Query, k: int, same_type: bool = True) -> ContextResult:
    """Highest-scoring candidates with positive score; ties go to the lower node id."""
    if k <= 0:
        return ContextResult()
    cand = np.flatnonzero(candidate_mask(g, q, same_type) & (scores > 0))
    order = np.lexsort((cand, -scores[cand]))[:k]
    chosen = cand[order]
    return ContextResult(tuple((int(n), float(scores[n])) for n in chosen))
