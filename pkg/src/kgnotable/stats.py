"""Per-label distributions and the exact multinomial test.

The context's counts define the null multinomial; the query's counts are the
observation. A label is notable when the query outcome is improbable enough
under the context's distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .graph import KnowledgeGraph, restricted_labels

EXACT_BUDGET = 1_000_000
MC_SAMPLES = 100_000
MIN_MC_SAMPLES = 10_000
TIE_RTOL = 1e-12
# upper bound on the (samples x categories) block drawn at once
_MC_CHUNK_CELLS = 4_000_000


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceDistribution:
    """Counts of terminal node labels over ``support`` (``None`` = no such edge)."""

    support: tuple[int | None, ...]
    q_counts: np.ndarray
    c_counts: np.ndarray


@dataclass(frozen=True)
class CardinalityDistribution:
    """``q_counts[i]`` / ``c_counts[i]``: members with exactly ``i`` edges of the label."""

    support: tuple[int, ...]
    q_counts: np.ndarray
    c_counts: np.ndarray


@dataclass(frozen=True)
class NotableVerdict:
    label: int
    delta: float
    kind: str  # "instance", "cardinality" or "none"
    p_sig_instance: float
    p_sig_cardinality: float
    instance: InstanceDistribution | None = None
    cardinality: CardinalityDistribution | None = None

    @property
    def notable(self) -> bool:
        return self.delta != 0.0


# -- distributions ------------------------------------------------------------


def _check_label(g: KnowledgeGraph, label: int, q: Iterable[int], c: Iterable[int]) -> None:
    if label not in restricted_labels(g, list(q) + list(c)):
        raise ValueError(f"label {g.edge_label_name(label)!r} has no edges leaving Q or C")


def _terminal_labels(g: KnowledgeGraph, node: int, label: int) -> np.ndarray:
    targets, labels = g.out_edges(node)
    return g.node_labels[targets[labels == label]]


def build_instance_distribution(
    g: KnowledgeGraph, label: int, q: Sequence[int], c: Sequence[int]
) -> InstanceDistribution:
    """Histogram of the node labels reached over ``label`` from Q and from C.

    The support is ``None`` followed by every node label reached from
    ``Q ∪ C`` in ascending id order. Each edge counts once; a member with no
    ``label`` edge counts once in the ``None`` bucket. On untyped graphs the
    node label is the node itself.
    """
    _check_label(g, label, q, c)
    per_q = [_terminal_labels(g, n, label) for n in q]
    per_c = [_terminal_labels(g, n, label) for n in c]
    values = np.unique(np.concatenate(per_q + per_c)) if (per_q or per_c) else np.array([], int)
    index = {int(v): i + 1 for i, v in enumerate(values)}

    def counts(groups: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(len(values) + 1, dtype=np.int64)
        for arr in groups:
            if arr.size == 0:
                out[0] += 1
            for v in arr.tolist():
                out[index[v]] += 1
        return out

    support = (None,) + tuple(int(v) for v in values)
    return InstanceDistribution(support, counts(per_q), counts(per_c))


def build_cardinality_distribution(
    g: KnowledgeGraph, label: int, q: Sequence[int], c: Sequence[int]
) -> CardinalityDistribution:
    _check_label(g, label, q, c)

    def degrees(nodes: Sequence[int]) -> np.ndarray:
        return np.array([int((g.out_edges(n)[1] == label).sum()) for n in nodes], dtype=np.int64)

    dq, dc = degrees(q), degrees(c)
    top = int(max(dq.max(initial=0), dc.max(initial=0)))
    return CardinalityDistribution(
        tuple(range(top + 1)),
        np.bincount(dq, minlength=top + 1),
        np.bincount(dc, minlength=top + 1),
    )


# -- multinomial test ---------------------------------------------------------


def normalize(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    total = y.sum()
    if total <= 0:
        raise ValueError("cannot normalize a vector with zero total")
    return y / total


def _validate(pi, x) -> tuple[np.ndarray, np.ndarray]:
    pi = np.asarray(pi, dtype=float)
    x = np.asarray(x)
    if pi.shape != x.shape or pi.ndim != 1:
        raise ValueError(f"dimension mismatch: pi {pi.shape} vs x {x.shape}")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError("pi must be a probability vector")
    if np.any(x < 0) or np.any(x != np.round(x)):
        raise ValueError("x must be a nonnegative integer vector")
    x = x.astype(np.int64)
    if x.sum() < 1:
        raise ValueError("x must contain at least one observation")
    return pi, x


def _logpmf(log_pi: np.ndarray, counts: np.ndarray, lgam: np.ndarray) -> np.ndarray:
    """Log multinomial pmf for rows of ``counts`` (all categories have pi > 0)."""
    n = int(counts.sum(axis=-1).flat[0])
    return lgam[n] - lgam[counts].sum(axis=-1) + (counts * log_pi).sum(axis=-1)


def multinomial_logpmf(pi, x) -> float:
    pi, x = _validate(pi, x)
    if np.any((pi == 0) & (x > 0)):
        return -math.inf
    pos = pi > 0
    lgam = gammaln(np.arange(x.sum() + 1) + 1.0)
    return float(_logpmf(np.log(pi[pos]), x[pos], lgam))


def multinomial_point_probability(pi, x) -> float:
    """``N! prod(pi_i^x_i / x_i!)`` with ``0^0 = 1``."""
    return math.exp(multinomial_logpmf(pi, x))


def outcome_count(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def _run_offsets(reps: np.ndarray) -> np.ndarray:
    """``[0..reps[0]-1, 0..reps[1]-1, ...]`` concatenated."""
    return np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)


def compositions(n: int, k: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``k`` summing to ``n``."""
    rows = np.zeros((1, 0), dtype=np.int64)
    rem = np.array([n], dtype=np.int64)
    for _ in range(k - 1):
        reps = rem + 1
        rows = np.repeat(rows, reps, axis=0)
        first = _run_offsets(reps)
        rem = np.repeat(rem, reps) - first
        rows = np.hstack((rows, first[:, None]))
    return np.hstack((rows, rem[:, None]))


def multisets(n: int, k: int) -> np.ndarray:
    """All nondecreasing length-``n`` sequences over ``range(k)``.

    Same outcomes as :func:`compositions`, stored as category indices; far
    smaller when ``n`` is much less than ``k``.
    """
    rows = np.arange(k, dtype=np.int64)[:, None]
    for _ in range(n - 1):
        last = rows[:, -1]
        reps = k - last
        nxt = np.repeat(last, reps) + _run_offsets(reps)
        rows = np.hstack((np.repeat(rows, reps, axis=0), nxt[:, None]))
    return rows


def _all_outcome_logpmf(log_pi: np.ndarray, n: int, lgam: np.ndarray) -> np.ndarray:
    k = len(log_pi)
    if k <= n:
        return _logpmf(log_pi, compositions(n, k), lgam)
    seq = multisets(n, k)
    # sum of log(x_i!) == sum over positions of log(rank within its run of equal values)
    run = np.ones(len(seq))
    log_fact = np.zeros(len(seq))
    for j in range(1, n):
        run = np.where(seq[:, j] == seq[:, j - 1], run + 1, 1.0)
        log_fact += np.log(run)
    return lgam[n] - log_fact + log_pi[seq].sum(axis=1)


def _reduce(pi, x):
    """Drop zero-probability categories; ``None`` when x itself has probability 0."""
    pi, x = _validate(pi, x)
    if np.any((pi == 0) & (x > 0)):
        return None
    pos = pi > 0
    return pi[pos], x[pos]


def _is_tied_or_less(logp, logp_x):
    return logp <= logp_x + TIE_RTOL * max(1.0, abs(logp_x))


def exact_significance(pi, x, budget: int = EXACT_BUDGET) -> float:
    """Total probability of all outcomes no more likely than ``x``.

    Outcomes are enumerated over the categories with positive probability;
    outcomes touching a zero-probability category have probability 0 and add
    nothing. Raises :class:`EnumerationBudgetExceeded` when there are more
    than ``budget`` outcomes.
    """
    reduced = _reduce(pi, x)
    if reduced is None:
        return 0.0
    pi, x = reduced
    n, k = int(x.sum()), len(pi)
    if outcome_count(n, k) > budget:
        raise EnumerationBudgetExceeded(f"{outcome_count(n, k)} outcomes > budget {budget}")
    lgam = gammaln(np.arange(n + 1) + 1.0)
    log_pi = np.log(pi)
    logp_x = float(_logpmf(log_pi, x, lgam))
    logp = _all_outcome_logpmf(log_pi, n, lgam)
    total = math.fsum(np.exp(logp[_is_tied_or_less(logp, logp_x)]).tolist())
    return min(total, 1.0)


def montecarlo_significance(pi, x, samples: int = MC_SAMPLES, rng_seed: int = 0) -> float:
    """Monte Carlo estimate ``(1 + #{y: Pr(y) <= Pr(x)}) / (samples + 1)``."""
    if samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples")
    reduced = _reduce(pi, x)
    if reduced is None:
        return 0.0
    pi, x = reduced
    n, k = int(x.sum()), len(pi)
    lgam = gammaln(np.arange(n + 1) + 1.0)
    log_pi = np.log(pi)
    logp_x = float(_logpmf(log_pi, x, lgam))
    rng = np.random.default_rng(rng_seed)
    chunk = max(1, _MC_CHUNK_CELLS // k)
    hits = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        ys = rng.multinomial(n, pi, size=size)
        hits += int(_is_tied_or_less(_logpmf(log_pi, ys, lgam), logp_x).sum())
        done += size
    return (1 + hits) / (samples + 1)


def significance(pi, x, *, budget: int = EXACT_BUDGET, samples: int = MC_SAMPLES,
                 rng_seed: int = 0) -> tuple[float, str]:
    """Significance probability and the method used (``"exact"`` or ``"montecarlo"``)."""
    reduced = _reduce(pi, x)
    if reduced is None:
        return 0.0, "exact"
    pi_r, x_r = reduced
    if outcome_count(int(x_r.sum()), len(pi_r)) <= budget:
        return exact_significance(pi_r, x_r, budget), "exact"
    return montecarlo_significance(pi_r, x_r, samples, rng_seed), "montecarlo"


def mt_from_significance(p_sig: float, alpha: float = 0.05) -> float:
    return 1.0 - p_sig if p_sig <= alpha else 0.0


def mt(pi, x, alpha: float = 0.05, *, budget: int = EXACT_BUDGET, samples: int = MC_SAMPLES,
       rng_seed: int = 0) -> float:
    """``1 - Pr_s`` when the test rejects at level ``alpha``, else 0."""
    p_sig, _ = significance(pi, x, budget=budget, samples=samples, rng_seed=rng_seed)
    return mt_from_significance(p_sig, alpha)


def delta(
    g: KnowledgeGraph,
    label: int,
    q: Sequence[int],
    c: Sequence[int],
    alpha: float = 0.05,
    *,
    budget: int = EXACT_BUDGET,
    samples: int = MC_SAMPLES,
    rng_seed: int = 0,
) -> NotableVerdict:
    """Instance and cardinality tests for one label; ``delta`` is the larger score.

    On a tie between two positive scores the verdict reports ``cardinality``.
    """
    if len(c) == 0:
        raise ValueError("context is empty")
    inst = build_instance_distribution(g, label, q, c)
    card = build_cardinality_distribution(g, label, q, c)
    seeds = np.random.SeedSequence([rng_seed, label]).generate_state(2)
    p_inst, _ = significance(normalize(inst.c_counts), inst.q_counts,
                             budget=budget, samples=samples, rng_seed=int(seeds[0]))
    p_card, _ = significance(normalize(card.c_counts), card.q_counts,
                             budget=budget, samples=samples, rng_seed=int(seeds[1]))
    d_inst = mt_from_significance(p_inst, alpha)
    d_card = mt_from_significance(p_card, alpha)
    best = max(d_inst, d_card)
    if best == 0.0:
        kind = "none"
    elif d_card >= d_inst:
        kind = "cardinality"
    else:
        kind = "instance"
    return NotableVerdict(label, best, kind, p_inst, p_card, inst, card)
