"""Synthetic knowledge graphs with planted domains, and the context-quality harness.

Entities are split into domains. Same-domain entities draw their attribute
values from shared per-domain distributions, and every domain owns a few
labels of its own, so label sequences separate domains. On top of that,
degree-regular "knows" links join entities regardless of domain: close
neighbours that say nothing about what the query has in common. Anomalies can
be planted on query nodes to create known notable labels.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .context import ContextResult, NoMetapathsError, Query, WalkConfig, context_rw, random_walk_context
from .graph import KnowledgeGraph, LoadOptions, load_triples

CSV_HEADER = ("algo", "q_size", "c_size", "num_metapaths", "max_len", "f1", "wall_ms")
CONTEXT_ALGOS = ("contextrw", "randomwalk")


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    # probability of an entity having 0, 1, 2, ... edges with this label
    cardinality: tuple[float, ...] = (0.0, 1.0)
    # value pool size; 0 means every edge points to a fresh node
    values: int = 4
    # one pool and distribution for all domains instead of one per domain
    shared: bool = False
    # give each domain its own copy of the label, named "<name>_<domain>"
    per_domain_label: bool = False
    # type of fresh value nodes (only used with values == 0)
    value_type: str | None = None
    # Dirichlet concentration of the value distribution; large -> near uniform
    concentration: float = 20.0


@dataclass(frozen=True)
class Anomaly:
    label: str
    kind: str = "missing"  # "missing" or "divergent"
    count: int = 1  # how many query nodes are altered

    def __post_init__(self):
        if self.kind not in ("missing", "divergent"):
            raise ValueError("anomaly kind must be 'missing' or 'divergent'")


def default_attributes() -> tuple[AttributeSpec, ...]:
    return (
        AttributeSpec("gender", values=2, shared=True),
        AttributeSpec("bornIn", values=4, shared=True),
        AttributeSpec("memberOf", values=3),
        AttributeSpec("worksOn", values=3, per_domain_label=True, cardinality=(0.0, 0.5, 0.5)),
        AttributeSpec("child", values=0, value_type="person", cardinality=(0.0, 0.5, 0.3, 0.2)),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    n_domains: int = 3
    entities_per_domain: int = 50
    attributes: tuple[AttributeSpec, ...] = field(default_factory=default_attributes)
    anomalies: tuple[Anomaly, ...] = ()
    query_domain: int = 0
    query_size: int = 3
    entity_type: str = "agent"
    type_predicate: str = "type"
    # random entity-to-entity links, ignoring domains
    links_per_entity: int = 4
    link_label: str = "knows"
    # share of link rounds that stay inside a domain
    link_homophily: float = 0.0
    # chance that a per-domain value is drawn from another domain's pool
    mixing: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_domains < 1 or self.entities_per_domain < 2:
            raise ValueError("need at least one domain with two or more entities")
        if not 0 <= self.query_domain < self.n_domains:
            raise ValueError("query_domain out of range")
        if not 1 <= self.query_size < self.entities_per_domain:
            raise ValueError("query_size must be in [1, entities_per_domain)")
        if not 0.0 <= self.mixing <= 1.0:
            raise ValueError("mixing must lie in [0, 1]")
        if not 0.0 <= self.link_homophily <= 1.0:
            raise ValueError("link_homophily must lie in [0, 1]")
        for a in self.attributes:
            if abs(sum(a.cardinality) - 1.0) > 1e-9:
                raise ValueError(f"cardinality of {a.name!r} must sum to 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        data = dict(data)
        if "attributes" in data:
            data["attributes"] = tuple(
                AttributeSpec(**{**a, "cardinality": tuple(a.get("cardinality", (0.0, 1.0)))})
                for a in data["attributes"])
        if "anomalies" in data:
            data["anomalies"] = tuple(Anomaly(**a) for a in data["anomalies"])
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GroundTruth:
    query: tuple[str, ...]
    relevant: frozenset[str]

    def __post_init__(self):
        if not self.query or not self.relevant:
            raise ValueError("ground truth needs a query and a nonempty relevant set")
        if set(self.query) & self.relevant:
            raise ValueError("relevant set must be disjoint from the query")

    def prefix(self, size: int) -> "GroundTruth":
        """Truth for the first ``size`` query names; the dropped names become relevant."""
        return GroundTruth(self.query[:size], self.relevant | frozenset(self.query[size:]))


@dataclass
class SyntheticDataset:
    spec: SyntheticSpec
    triples: list[tuple[str, str, str]]
    truth: GroundTruth
    domains: dict[str, int]
    planted: tuple[str, ...]

    def to_tsv(self) -> str:
        return "".join(f"{s}\t{p}\t{o}\n" for s, p, o in self.triples)

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_tsv())

    def load(self, options: LoadOptions | None = None) -> KnowledgeGraph:
        return load_triples(self.triples, options or LoadOptions(type_predicate=self.spec.type_predicate))

    def truth_for_domain(self, domain: int, query_size: int) -> GroundTruth:
        members = sorted(e for e, d in self.domains.items() if d == domain)
        return GroundTruth(tuple(members[:query_size]), frozenset(members[query_size:]))


def entity_name(domain: int, index: int) -> str:
    return f"d{domain}_e{index:04d}"


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Build the triples, ground truth and planted notable labels for ``spec``."""
    rng = np.random.default_rng(spec.seed)
    tp = spec.type_predicate
    triples: list[tuple[str, str, str]] = []
    domains: dict[str, int] = {}

    pools: dict[tuple[str, int], tuple[list[str], np.ndarray]] = {}
    for a in spec.attributes:
        if a.values <= 0:
            continue
        owners = [-1] if a.shared else range(spec.n_domains)
        for d in owners:
            prefix = a.name if a.shared else f"{a.name}_d{d}"
            names = [f"{prefix}_v{i}" for i in range(a.values)]
            probs = rng.dirichlet(np.full(a.values, a.concentration))
            pools[(a.name, d)] = (names, probs)

    query = [entity_name(spec.query_domain, i) for i in range(spec.query_size)]
    missing = {(an.label, e) for an in spec.anomalies if an.kind == "missing" for e in query[: an.count]}
    divergent = {(an.label, e) for an in spec.anomalies if an.kind == "divergent" for e in query[: an.count]}

    for d in range(spec.n_domains):
        for i in range(spec.entities_per_domain):
            e = entity_name(d, i)
            domains[e] = d
            triples.append((e, tp, spec.entity_type))
            for a in spec.attributes:
                label = f"{a.name}_{d}" if a.per_domain_label else a.name
                n_edges = int(rng.choice(len(a.cardinality), p=a.cardinality))
                if (label, e) in missing or (a.name, e) in missing:
                    continue
                odd = (label, e) in divergent or (a.name, e) in divergent
                if a.values <= 0:
                    for j in range(n_edges):
                        v = f"{e}_{a.name}{j}"
                        triples.append((e, label, v))
                        if a.value_type:
                            triples.append((v, tp, a.value_type + ("_unseen" if odd else "")))
                    continue
                source = d
                if not a.shared and spec.n_domains > 1 and rng.random() < spec.mixing:
                    source = int(rng.choice([x for x in range(spec.n_domains) if x != d]))
                names, probs = pools[(a.name, -1 if a.shared else source)]
                picks = rng.choice(len(names), size=min(n_edges, len(names)), replace=False, p=probs)
                if odd:
                    triples.extend((e, label, f"{label}_unseen_{e}_{j}") for j in range(len(picks)))
                else:
                    triples.extend((e, label, names[j]) for j in sorted(picks.tolist()))

    # Each round links every entity to its successor in a random cyclic order,
    # so in- and out-degree are exactly ``links_per_entity``. Link degrees then
    # carry no signal, and the first rounds stay inside each domain.
    everyone = list(domains)
    by_domain = [[e for e in everyone if domains[e] == d] for d in range(spec.n_domains)]
    n_within = int(round(spec.link_homophily * spec.links_per_entity))
    for r in range(spec.links_per_entity):
        groups = by_domain if r < n_within else [everyone]
        for group in groups:
            order = [group[i] for i in rng.permutation(len(group))]
            triples.extend((a, spec.link_label, b) for a, b in zip(order, order[1:] + order[:1]))

    members = [entity_name(spec.query_domain, i) for i in range(spec.entities_per_domain)]
    truth = GroundTruth(tuple(query), frozenset(members[spec.query_size:]))
    planted = tuple(sorted({an.label for an in spec.anomalies}))
    return SyntheticDataset(spec, triples, truth, domains, planted)


# -- evaluation -----------------------------------------------------------------


def f1_at_k(result: ContextResult | Sequence[str], truth: GroundTruth | set, k: int,
            names: Sequence[str] | None = None) -> float:
    """F1 of the top-``k`` result set against the relevant set.

    ``result`` is a ranked list of names, or a :class:`ContextResult` together
    with the graph's ``names`` to translate node ids.
    """
    relevant = truth.relevant if isinstance(truth, GroundTruth) else set(truth)
    if not relevant:
        raise ValueError("ground truth is empty")
    if isinstance(result, ContextResult):
        if names is None:
            raise ValueError("names are required to compare a ContextResult")
        ranked = [names[n] for n in result.nodes]
    else:
        ranked = list(result)
    if not 0 < k <= len(ranked):
        raise ValueError(f"k={k} outside 1..{len(ranked)}")
    hits = len(set(ranked[:k]) & relevant)
    if hits == 0:
        return 0.0
    precision = hits / k
    recall = hits / len(relevant)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class GridSpec:
    algos: tuple[str, ...] = CONTEXT_ALGOS
    q_sizes: tuple[int, ...] = (3,)
    c_sizes: tuple[int, ...] = (50,)
    num_metapaths: tuple[int, ...] = (5,)
    max_lens: tuple[int, ...] = (5,)
    walks: int = 100_000
    damping: float = 0.8
    iterations: int = 10
    seed: int = 0
    # wall-clock times are not reproducible; left blank unless requested
    timing: bool = False

    def __post_init__(self):
        bad = set(self.algos) - set(CONTEXT_ALGOS)
        if bad:
            raise ValueError(f"unknown algorithms: {sorted(bad)}")

    @property
    def size(self) -> int:
        return (len(self.algos) * len(self.q_sizes) * len(self.c_sizes)
                * len(self.num_metapaths) * len(self.max_lens))

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        data = dict(data)
        for key in ("algos", "q_sizes", "c_sizes", "num_metapaths", "max_lens"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class GridRow:
    algo: str
    q_size: int
    c_size: int
    num_metapaths: int
    max_len: int
    f1: float
    wall_ms: float | None

    def as_csv(self) -> list[str]:
        wall = "" if self.wall_ms is None else f"{self.wall_ms:.1f}"
        return [self.algo, str(self.q_size), str(self.c_size), str(self.num_metapaths),
                str(self.max_len), f"{self.f1:.6f}", wall]


def _context(g: KnowledgeGraph, q: Query, algo: str, k: int, cfg: WalkConfig) -> ContextResult:
    if algo == "randomwalk":
        return random_walk_context(g, q, k, cfg)
    try:
        return context_rw(g, q, k, cfg)
    except NoMetapathsError:
        return ContextResult()


def run_grid(g: KnowledgeGraph, queries: Sequence[Sequence[str]], truths: Sequence[GroundTruth],
             grid: GridSpec) -> list[GridRow]:
    """Sweep the grid; F1 at each context-size cutoff is averaged over the queries.

    Rows come out in grid order: algorithm, query size, number of metapaths,
    maximum length, context size. ``wall_ms`` is the mean context computation
    time per query.
    """
    if len(queries) != len(truths):
        raise ValueError("one ground truth per query is required")
    k_max = max(grid.c_sizes)
    rows: list[GridRow] = []
    rw_cache: dict[int, tuple[list[ContextResult], float]] = {}
    for algo in grid.algos:
        for q_size in grid.q_sizes:
            for n_paths in grid.num_metapaths:
                for max_len in grid.max_lens:
                    cfg = WalkConfig(damping=grid.damping, iterations=grid.iterations,
                                     num_walk_samples=grid.walks, max_metapath_len=max_len,
                                     num_metapaths=n_paths, rng_seed=grid.seed)
                    if algo == "randomwalk" and q_size in rw_cache:
                        results, wall = rw_cache[q_size]
                    else:
                        results, wall = [], 0.0
                        for names in queries:
                            q = Query(tuple(g.node_id(n) for n in names[:q_size]))
                            t0 = time.perf_counter()
                            results.append(_context(g, q, algo, k_max, cfg))
                            wall += (time.perf_counter() - t0) * 1000.0
                        wall /= len(queries)
                        if algo == "randomwalk":
                            rw_cache[q_size] = (results, wall)
                    for c_size in grid.c_sizes:
                        scores = []
                        for res, truth in zip(results, truths):
                            k = min(c_size, len(res))
                            scores.append(f1_at_k(res, truth.prefix(q_size), k, g.node_names) if k else 0.0)
                        rows.append(GridRow(algo, q_size, c_size, n_paths, max_len,
                                            float(np.mean(scores)), wall if grid.timing else None))
    return rows


def rows_to_csv(rows: Sequence[GridRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def read_truth_file(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip() and not line.startswith("#"))
