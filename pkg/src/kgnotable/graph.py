"""In-memory labeled multigraph with reverse edges.

Nodes are dense integers assigned in first-seen order. Outgoing edges are
stored in CSR form (``indptr``, ``targets``, ``edge_labels``) so that walks
and label lookups index straight into numpy arrays.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np
import scipy.sparse as sp

INVERSE_SUFFIX = "\u207b\u00b9"
ASCII_INVERSE_SUFFIX = "_inv"


class TripleFormatError(ValueError):
    """Raised for malformed or unusable triple input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownLabelError(KeyError):
    pass


@dataclass(frozen=True)
class LoadOptions:
    synthesize_inverses: bool = True
    inverse_suffix: str = INVERSE_SUFFIX
    # Triples with this predicate also set the subject's node label.
    type_predicate: str | None = None


def parse_tsv(lines: Iterable[str]) -> Iterator[tuple[str, str, str]]:
    """Yield ``(subject, predicate, object)`` from TSV lines.

    Blank lines and ``#`` comments are skipped. A line with the wrong number
    of columns raises :class:`TripleFormatError` carrying the 1-based line
    number.
    """
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise TripleFormatError(f"expected 3 tab-separated columns, got {len(cols)}", lineno)
        if not all(cols):
            raise TripleFormatError("empty column", lineno)
        yield cols[0], cols[1], cols[2]


class KnowledgeGraph:
    """Immutable directed multigraph with node labels and labeled edges.

    Build one with :func:`load_triples` or :func:`load_tsv`.
    """

    def __init__(
        self,
        node_names: list[str],
        node_label: np.ndarray,
        node_label_names: list[str],
        src: np.ndarray,
        dst: np.ndarray,
        lab: np.ndarray,
        edge_label_names: list[str],
        inverse: np.ndarray,
        typed: bool = False,
        inverse_suffix: str = INVERSE_SUFFIX,
        has_type: np.ndarray | None = None,
    ):
        n = len(node_names)
        order = np.argsort(src, kind="stable")
        self._src = src[order]
        self._dst = dst[order]
        self._lab = lab[order]
        counts = np.bincount(self._src, minlength=n)
        self._indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

        self._node_names = tuple(node_names)
        self._node_index = {name: i for i, name in enumerate(node_names)}
        self._node_label = node_label
        self._node_label_names = tuple(node_label_names)
        self._edge_label_names = tuple(edge_label_names)
        self._edge_label_index = {name: i for i, name in enumerate(edge_label_names)}
        self._inverse = inverse
        self._label_counts = np.bincount(self._lab, minlength=len(edge_label_names)).astype(np.int64)
        self._typed = typed
        self._has_type = (np.zeros(n, dtype=bool) if has_type is None
                          else np.asarray(has_type, dtype=bool))
        self._suffix = inverse_suffix
        self._is_inverse = np.array([name.endswith(inverse_suffix) for name in edge_label_names], dtype=bool)
        self._cache: dict = {}

        for arr in (self._src, self._dst, self._lab, self._indptr, self._node_label,
                    self._inverse, self._label_counts, self._has_type):
            arr.setflags(write=False)

    # -- sizes and dictionaries -------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self._node_names)

    @property
    def num_edges(self) -> int:
        return int(self._dst.shape[0])

    @property
    def num_edge_labels(self) -> int:
        return len(self._edge_label_names)

    @property
    def typed(self) -> bool:
        """True when node labels came from a type predicate."""
        return self._typed

    @property
    def has_type(self) -> np.ndarray:
        """Per node: whether its label came from a type triple rather than its name."""
        return self._has_type

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._node_names

    @property
    def edge_label_names(self) -> tuple[str, ...]:
        return self._edge_label_names

    @property
    def node_label_names(self) -> tuple[str, ...]:
        return self._node_label_names

    @property
    def node_labels(self) -> np.ndarray:
        return self._node_label

    @property
    def label_counts(self) -> np.ndarray:
        return self._label_counts

    @property
    def inverse_labels(self) -> np.ndarray:
        return self._inverse

    def node_id(self, name: str) -> int:
        return self._node_index[name]

    def has_node(self, name: str) -> bool:
        return name in self._node_index

    def node_name(self, node: int) -> str:
        return self._node_names[node]

    def node_label(self, node: int) -> str:
        return self._node_label_names[self._node_label[node]]

    def edge_label_id(self, name: str) -> int:
        try:
            return self._edge_label_index[name]
        except KeyError:
            raise UnknownLabelError(name) from None

    def edge_label_name(self, label: int) -> str:
        return self._edge_label_names[label]

    def inverse(self, label: int) -> int:
        return int(self._inverse[label])

    def is_inverse_label(self, label: int) -> bool:
        """Whether ``label`` carries the inverse suffix (display direction only)."""
        return bool(self._is_inverse[label])

    # -- edges ------------------------------------------------------------

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def sources(self) -> np.ndarray:
        return self._src

    @property
    def targets(self) -> np.ndarray:
        return self._dst

    @property
    def edge_labels(self) -> np.ndarray:
        return self._lab

    def out_edges(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Targets and labels of the outgoing edges of ``node``."""
        a, b = self._indptr[node], self._indptr[node + 1]
        return self._dst[a:b], self._lab[a:b]

    def out_degree(self, node: int) -> int:
        return int(self._indptr[node + 1] - self._indptr[node])

    def iter_edges(self) -> Iterator[tuple[int, int, int]]:
        for u, v, l in zip(self._src.tolist(), self._dst.tolist(), self._lab.tolist()):
            yield u, v, l

    def label_matrix(self, label: int) -> sp.csr_matrix:
        """Sparse ``n x n`` count matrix of ``label`` edges; entry (u, v) is the multiplicity."""
        key = ("label_matrix", label)
        if key not in self._cache:
            mask = self._lab == label
            n = self.num_nodes
            m = sp.csr_matrix(
                (np.ones(int(mask.sum())), (self._src[mask], self._dst[mask])), shape=(n, n)
            )
            m.sum_duplicates()
            self._cache[key] = m
        return self._cache[key]

    def __repr__(self) -> str:
        return (f"KnowledgeGraph(nodes={self.num_nodes}, edges={self.num_edges}, "
                f"edge_labels={self.num_edge_labels})")


def _inverse_name(name: str, suffix: str) -> str:
    if name.endswith(suffix) and len(name) > len(suffix):
        return name[: -len(suffix)]
    return name + suffix


def load_triples(
    source: Iterable[tuple[str, str, str]], options: LoadOptions | None = None
) -> KnowledgeGraph:
    """Build a :class:`KnowledgeGraph` from string triples.

    Every distinct subject/object string becomes one node. Unless
    ``options.synthesize_inverses`` is off, each triple ``(s, p, o)`` also
    yields ``(o, p⁻¹, s)``; a predicate that already ends in the inverse
    suffix maps back to its base name so that inversion stays an involution.
    With synthesis off, the input must already be closed under inversion.
    """
    options = options or LoadOptions()
    suffix = options.inverse_suffix
    node_index: dict[str, int] = {}
    label_index: dict[str, int] = {}
    node_type: dict[int, str] = {}
    src: list[int] = []
    dst: list[int] = []
    lab: list[int] = []

    def node(name: str) -> int:
        i = node_index.get(name)
        if i is None:
            i = node_index[name] = len(node_index)
        return i

    def label(name: str) -> int:
        i = label_index.get(name)
        if i is None:
            i = label_index[name] = len(label_index)
        return i

    for i, triple in enumerate(source, start=1):
        if len(triple) != 3:
            raise TripleFormatError(f"expected a 3-tuple, got {len(triple)} items", i)
        s, p, o = triple
        u, v = node(s), node(o)
        lp = label(p)
        src.append(u)
        dst.append(v)
        lab.append(lp)
        if options.synthesize_inverses:
            src.append(v)
            dst.append(u)
            lab.append(label(_inverse_name(p, suffix)))
        if options.type_predicate is not None and p == options.type_predicate:
            node_type.setdefault(u, o)

    if not src:
        raise TripleFormatError("empty input: graphs without edges are not supported")

    edge_label_names = list(label_index)
    inverse = np.empty(len(edge_label_names), dtype=np.int64)
    for name, i in label_index.items():
        partner = label_index.get(_inverse_name(name, suffix))
        if partner is None:
            raise TripleFormatError(f"predicate {name!r} has no inverse in the input")
        inverse[i] = partner

    node_names = list(node_index)
    label_names: list[str] = []
    label_ids: dict[str, int] = {}
    node_label = np.empty(len(node_names), dtype=np.int64)
    has_type = np.zeros(len(node_names), dtype=bool)
    has_type[list(node_type)] = True
    for i, name in enumerate(node_names):
        text = node_type.get(i, name)
        if text not in label_ids:
            label_ids[text] = len(label_names)
            label_names.append(text)
        node_label[i] = label_ids[text]

    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    lab_a = np.asarray(lab, dtype=np.int64)
    if not options.synthesize_inverses:
        _check_closure(src_a, dst_a, lab_a, inverse, len(node_names))

    return KnowledgeGraph(
        node_names, node_label, label_names, src_a, dst_a, lab_a,
        edge_label_names, inverse,
        typed=options.type_predicate is not None, inverse_suffix=suffix, has_type=has_type,
    )


def _check_closure(src, dst, lab, inverse, n) -> None:
    forward = np.sort((lab * n + src) * n + dst)
    backward = np.sort((inverse[lab] * n + dst) * n + src)
    if not np.array_equal(forward, backward):
        raise TripleFormatError("input is not closed under edge inversion")


def load_tsv(source: str | os.PathLike | TextIO, options: LoadOptions | None = None) -> KnowledgeGraph:
    """Load a UTF-8 ``subject<TAB>predicate<TAB>object`` file."""
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return load_triples(parse_tsv(source), options)
    with open(source, encoding="utf-8") as fh:
        return load_triples(parse_tsv(fh), options)


def label_frequency(g: KnowledgeGraph, label: int) -> float:
    """Fraction ``|E_l| / |E|`` of edges carrying ``label``."""
    if not 0 <= label < g.num_edge_labels:
        raise UnknownLabelError(label)
    return float(g.label_counts[label]) / g.num_edges


def restricted_labels(g: KnowledgeGraph, nodes: Iterable[int]) -> set[int]:
    """Labels of the edges leaving any node in ``nodes``."""
    labels: set[int] = set()
    for u in nodes:
        labels.update(g.out_edges(u)[1].tolist())
    return labels
