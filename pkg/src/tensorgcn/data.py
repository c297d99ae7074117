"""Temporal graph datasets: parsing, partitioning and window preparation.

Supported inputs (local files only, nothing is downloaded):

=============  ==========================================  ===========================
kind           file                                        row format
=============  ==========================================  ===========================
bitcoin_otc    soc-sign-bitcoinotc.csv[.gz]                ``SOURCE,TARGET,RATING,TIME``
bitcoin_alpha  soc-sign-bitcoinalpha.csv[.gz]              ``SOURCE,TARGET,RATING,TIME``
reddit         soc-redditHyperlinks-body.tsv[.gz]          TSV with a header row
chess          out.chess[.gz]                              ``white black result time``
=============  ==========================================  ===========================

Sources: https://snap.stanford.edu/data/soc-sign-bitcoin-otc.html,
https://snap.stanford.edu/data/soc-sign-bitcoin-alpha.html,
https://snap.stanford.edu/data/soc-RedditHyperlinks.html (body file) and the
Konect ``chess`` network.

Records are cut into half-open windows ``[t0 + k*len, t0 + (k+1)*len)``
anchored at the earliest timestamp. Repeated ``(src, dst)`` pairs inside a
window collapse to one edge whose rating is the sum of the originals; the
class is taken from the sign of that sum.
"""
from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, ParseError
from .model import EdgeSet, Window
from .spectral import normalize_adjacency
from .tensor import MixingMatrix, banded_m, m_transform, transform_slices

DAY = 86_400.0
CACHE_FORMAT = "tensorgcn-graph"
CACHE_VERSION = 1


@dataclass(frozen=True)
class DatasetInfo:
    filenames: tuple
    window_days: float
    num_classes: int
    metric: str
    split: tuple  # (s_train, s_val, s_test)
    integer_ids: bool
    # reference statistics: nodes, edges, T
    reference: tuple


DATASETS = {
    "bitcoin_otc": DatasetInfo(("soc-sign-bitcoinotc.csv", "soc-sign-bitcoinotc.csv.gz"),
                               14, 2, "f1_negative", (95, 20, 20), True, (6005, 35569, 135)),
    "bitcoin_alpha": DatasetInfo(("soc-sign-bitcoinalpha.csv", "soc-sign-bitcoinalpha.csv.gz"),
                                 14, 2, "f1_negative", (95, 20, 20), True, (7604, 24173, 135)),
    "reddit": DatasetInfo(("soc-redditHyperlinks-body.tsv", "soc-redditHyperlinks-body.tsv.gz"),
                          14, 2, "f1_negative", (66, 10, 10), False, (3818, 163008, 86)),
    "chess": DatasetInfo(("out.chess", "out.chess.gz", "chess.tsv"),
                         31, 3, "accuracy", (80, 10, 10), True, (7301, 64958, 100)),
}

REDDIT_MIN_INTERACTIONS = 20


def dataset_info(kind) -> DatasetInfo:
    try:
        return DATASETS[kind]
    except KeyError:
        raise ConfigError(f"unknown dataset kind {kind!r}; choose from {sorted(DATASETS)}") from None


def find_dataset(kind, root) -> Path:
    """Locate the file for ``kind`` under ``root`` (or accept a file path)."""
    info = dataset_info(kind)
    root = Path(root)
    if root.is_file():
        return root
    for name in info.filenames:
        for cand in (root / name, root / kind / name):
            if cand.is_file():
                return cand
    raise DataError(f"no {kind} file found under {root} (expected one of {', '.join(info.filenames)})")


def _open_text(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


# -- parsing -------------------------------------------------------------------------

@dataclass
class RawRecords:
    """Interaction records in file order; ``src``/``dst`` are raw node ids."""

    src: list
    dst: list
    rating: np.ndarray
    time: np.ndarray

    def __len__(self):
        return len(self.src)


def _parse_time(text):
    try:
        return float(text)
    except ValueError:
        pass
    for fmt in ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d", "%Y-%m"):
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc).timestamp()
        except ValueError:
            continue
    raise ValueError(f"unrecognised timestamp {text!r}")


def _parse_int_id(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"non-integer node id {text!r}")
    return int(value)


def _parse_bitcoin(fh, path):
    src, dst, rating, time = [], [], [], []
    for lineno, row in enumerate(csv.reader(fh), start=1):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 4:
            raise ParseError(path, lineno, f"expected 4 fields, got {len(row)}")
        try:
            s, d = _parse_int_id(row[0]), _parse_int_id(row[1])
            r, t = float(row[2]), float(row[3])
        except ValueError as exc:
            if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                continue  # header row
            raise ParseError(path, lineno, str(exc)) from None
        src.append(s)
        dst.append(d)
        rating.append(r)
        time.append(t)
    return src, dst, rating, time


def _parse_reddit(fh, path):
    reader = csv.reader(fh, delimiter="\t")
    header = next(reader, None)
    if header is None:
        raise ParseError(path, 1, "empty file")
    try:
        cols = [header.index(c) for c in
                ("SOURCE_SUBREDDIT", "TARGET_SUBREDDIT", "TIMESTAMP", "LINK_SENTIMENT")]
    except ValueError as exc:
        raise ParseError(path, 1, f"missing column: {exc}") from None
    width = max(cols) + 1
    src, dst, rating, time = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < width:
            raise ParseError(path, lineno, f"expected at least {width} fields, got {len(row)}")
        try:
            t = _parse_time(row[cols[2]])
            r = float(row[cols[3]])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        src.append(row[cols[0]])
        dst.append(row[cols[1]])
        rating.append(r)
        time.append(t)
    return src, dst, rating, time


def _parse_chess(fh, path):
    src, dst, rating, time = [], [], [], []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if len(parts) < 4:
            raise ParseError(path, lineno, f"expected 'white black result time', got {line!r}")
        try:
            s, d = _parse_int_id(parts[0]), _parse_int_id(parts[1])
            r = float(parts[2])
            t = _parse_time(" ".join(parts[3:]))
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        src.append(s)
        dst.append(d)
        rating.append(r)
        time.append(t)
    return src, dst, rating, time


_PARSERS = {
    "bitcoin_otc": _parse_bitcoin,
    "bitcoin_alpha": _parse_bitcoin,
    "reddit": _parse_reddit,
    "chess": _parse_chess,
}


def parse_dataset(kind, path) -> RawRecords:
    """Read raw interaction records for a dataset ``kind`` from ``path``."""
    dataset_info(kind)
    with _open_text(path) as fh:
        src, dst, rating, time = _PARSERS[kind](fh, str(path))
    return RawRecords(src, dst, np.asarray(rating, dtype=np.float64), np.asarray(time, dtype=np.float64))


# -- partitioning ----------------------------------------------------------------------

@dataclass
class DynamicGraph:
    """Aggregated edges over ``num_steps`` windows, stored column-wise.

    ``label`` holds the class index of each edge, or ``-1`` for edges that
    stay in the graph but are excluded from classification (rating sum of 0
    in the two-class datasets).
    """

    num_nodes: int
    num_steps: int
    step: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    rating: np.ndarray
    label: np.ndarray
    node_ids: np.ndarray
    num_classes: int

    @property
    def num_edges(self) -> int:
        return len(self.step)

    def step_bounds(self):
        return np.searchsorted(self.step, np.arange(self.num_steps + 1))

    def edges_at(self, t):
        lo, hi = np.searchsorted(self.step, [t, t + 1])
        return self.src[lo:hi], self.dst[lo:hi], self.label[lo:hi]

    def stats(self):
        return {"nodes": self.num_nodes, "edges": self.num_edges, "T": self.num_steps}


def rating_to_class(total, num_classes):
    """Map summed ratings to class indices (``-1`` means dropped).

    Two classes: negative sum -> 0, positive sum -> 1, zero -> dropped.
    Three classes (chess): -1 -> 0 (black wins), 0 -> 1 (draw), +1 -> 2.
    """
    sign = np.sign(np.asarray(total, dtype=np.float64)).astype(np.int64)
    if num_classes == 2:
        return np.where(sign > 0, 1, np.where(sign < 0, 0, -1))
    if num_classes == 3:
        return sign + 1
    raise ConfigError(f"unsupported class count {num_classes}")


def _index_nodes(records, integer_ids, keep=None):
    if integer_ids:
        ids = np.asarray(records.src + records.dst, dtype=np.int64)
        if ids.size and ids.min() < 1:
            raise DataError("integer node ids must be >= 1")
        n = int(ids.max()) if ids.size else 0
        e = len(records)
        return n, ids[:e] - 1, ids[e:] - 1, np.arange(1, n + 1)
    index = {}
    for s, d in zip(records.src, records.dst):
        if keep is not None and (s not in keep or d not in keep):
            continue
        for v in (s, d):
            if v not in index:
                index[v] = len(index)
    src = np.array([index.get(s, -1) for s in records.src], dtype=np.int64)
    dst = np.array([index.get(d, -1) for d in records.dst], dtype=np.int64)
    return len(index), src, dst, np.array(list(index), dtype=object)


def partition(records: RawRecords, kind, window_days=None) -> DynamicGraph:
    """Aggregate raw records into a :class:`DynamicGraph`.

    Node indices: datasets with integer ids use ``id - 1`` (the node count is
    the largest id); Reddit subreddits are indexed by first appearance after
    dropping those with fewer than 20 interactions.
    """
    info = dataset_info(kind)
    if len(records) == 0:
        raise DataError("no records to partition")
    keep = None
    if kind == "reddit":
        counts = {}
        for v in records.src + records.dst:
            counts[v] = counts.get(v, 0) + 1
        keep = {v for v, c in counts.items() if c >= REDDIT_MIN_INTERACTIONS}
    n, src, dst, node_ids = _index_nodes(records, info.integer_ids, keep)
    mask = (src >= 0) & (dst >= 0)
    if not mask.any():
        raise DataError("no records left after node filtering")
    time = records.time[mask]
    t0, t1 = time.min(), time.max()
    if t1 <= t0:
        raise DataError("records span zero time")
    length = (window_days or info.window_days) * DAY
    step = np.floor((time - t0) / length).astype(np.int64)
    num_steps = int(step.max()) + 1

    src, dst, rating = src[mask], dst[mask], records.rating[mask]
    key = (step * n + src) * n + dst
    uniq, inv = np.unique(key, return_inverse=True)
    total = np.zeros(len(uniq))
    np.add.at(total, inv, rating)
    a_src = (uniq // n) % n
    a_dst = uniq % n
    a_step = uniq // (n * n)
    return DynamicGraph(n, num_steps, a_step, a_src, a_dst, total,
                        rating_to_class(total, info.num_classes), node_ids, info.num_classes)


def load_graph(kind, path, window_days=None) -> DynamicGraph:
    return partition(parse_dataset(kind, path), kind, window_days)


# -- features and adjacency ---------------------------------------------------------------

def build_features(g: DynamicGraph) -> np.ndarray:
    """Out- and in-degree of every node at every step, shape (N, 2, T)."""
    x = np.zeros((g.num_nodes, 2, g.num_steps))
    np.add.at(x, (g.src, 0, g.step), 1.0)
    np.add.at(x, (g.dst, 1, g.step), 1.0)
    return x


def adjacency_slices(g: DynamicGraph) -> list:
    """Binary adjacency (one entry per aggregated edge) for every step."""
    bounds = g.step_bounds()
    out = []
    for t in range(g.num_steps):
        lo, hi = bounds[t], bounds[t + 1]
        out.append(sp.csr_matrix((np.ones(hi - lo), (g.src[lo:hi], g.dst[lo:hi])),
                                 shape=(g.num_nodes, g.num_nodes)))
    return out


def apply_edge_life(slices, life: int) -> list:
    """Add every slice to the following ``life - 1`` slices (connectivity only)."""
    if life < 1:
        raise ConfigError(f"edge life must be >= 1, got {life}")
    out = []
    acc = None
    for t, a in enumerate(slices):
        acc = a.copy() if acc is None else acc + a
        if t >= life:
            acc = acc - slices[t - life]
        acc.eliminate_zeros()
        out.append(sp.csr_matrix(acc))
    return out


def symmetrize(a) -> sp.csr_matrix:
    """``(A + A^T) / 2``."""
    a = sp.csr_matrix(a, dtype=np.float64)
    return sp.csr_matrix(0.5 * (a + a.T))


# -- windows ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    s_train: int
    s_val: int
    s_test: int

    def __post_init__(self):
        if min(self.s_train, self.s_val, self.s_test) < 1:
            raise ConfigError(f"every split must be positive, got {self}")

    @property
    def total(self):
        return self.s_train + self.s_val + self.s_test

    def offsets(self):
        """0-based start slice of the train, validation and test windows."""
        return 0, self.s_val, self.s_val + self.s_test


@dataclass
class PreparedData:
    train: Window
    val: Window
    test: Window
    train_edges: EdgeSet
    val_edges: EdgeSet
    test_edges: EdgeSet
    m: MixingMatrix
    num_classes: int
    split: SplitSpec


def normalized_slices(g: DynamicGraph, edge_life=10, symmetric=False) -> list:
    """Edge-life smeared, optionally symmetrized, renormalized adjacency slices."""
    slices = apply_edge_life(adjacency_slices(g), edge_life)
    if symmetric:
        slices = [symmetrize(a) for a in slices]
    return [normalize_adjacency(a) for a in slices]


def _edges_between(g, lo, hi, shift):
    sel = (g.step >= lo) & (g.step < hi) & (g.label >= 0)
    return EdgeSet(g.step[sel] - shift, g.src[sel], g.dst[sel], g.label[sel])


def make_windows(g: DynamicGraph, split: SplitSpec, bandwidth=20, edge_life=10,
                 symmetric=False, log_features=False) -> PreparedData:
    """Sliding train/validation/test windows of ``s_train`` slices each.

    Windows start at slices 0, ``s_val`` and ``s_val + s_test``; each one is
    M-transformed with ``banded_m(s_train, bandwidth)``. Validation and test
    edges land in the last ``s_val`` / ``s_test`` slices of their window.
    """
    if split.total != g.num_steps:
        raise ConfigError(f"split {split.s_train}/{split.s_val}/{split.s_test} sums to "
                          f"{split.total}, graph has T={g.num_steps}")
    if bandwidth > split.s_train:
        raise ConfigError(f"bandwidth {bandwidth} exceeds window length {split.s_train}")
    m = banded_m(split.s_train, bandwidth)
    a_norm = normalized_slices(g, edge_life, symmetric)
    x = build_features(g)
    if log_features:
        x = np.log1p(x)
    windows = []
    for off in split.offsets():
        sl = slice(off, off + split.s_train)
        windows.append(Window(transform_slices(a_norm[sl], m), m_transform(x[:, :, sl], m)))
    s_tr, s_va = split.s_train, split.s_val
    off_val, off_test = split.offsets()[1:]
    return PreparedData(
        *windows,
        train_edges=_edges_between(g, 0, s_tr, 0),
        val_edges=_edges_between(g, s_tr, s_tr + s_va, off_val),
        test_edges=_edges_between(g, s_tr + s_va, g.num_steps, off_test),
        m=m,
        num_classes=g.num_classes,
        split=split,
    )


# -- cache -----------------------------------------------------------------------------------

def save_graph(path, g: DynamicGraph):
    """Write ``g`` as a versioned ``.npz`` of edge columns sorted by step.

    Arrays: ``step, src, dst, rating, label`` (one entry per aggregated edge)
    and ``step_ptr`` (CSR-like offsets of each step), plus header scalars.
    """
    np.savez(path, format=np.array(CACHE_FORMAT), version=np.array(CACHE_VERSION),
             num_nodes=np.array(g.num_nodes), num_steps=np.array(g.num_steps),
             num_classes=np.array(g.num_classes), step_ptr=g.step_bounds(),
             step=g.step, src=g.src, dst=g.dst, rating=g.rating, label=g.label,
             node_ids=np.asarray(g.node_ids, dtype=str))


def load_cached_graph(path) -> DynamicGraph:
    try:
        with np.load(path, allow_pickle=False) as z:
            if str(z["format"]) != CACHE_FORMAT or int(z["version"]) != CACHE_VERSION:
                raise DataError(f"{path}: unsupported cache file")
            return DynamicGraph(int(z["num_nodes"]), int(z["num_steps"]), z["step"], z["src"],
                                z["dst"], z["rating"], z["label"], z["node_ids"], int(z["num_classes"]))
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read cache {path}: {exc}") from exc


def top_degree_nodes(g: DynamicGraph, k: int) -> np.ndarray:
    """The ``k`` nodes with most aggregated edges (ties to lower index), sorted."""
    deg = np.bincount(np.concatenate([g.src, g.dst]), minlength=g.num_nodes)
    order = np.argsort(-deg, kind="stable")
    return np.sort(order[:k])


def induced_subgraph(g: DynamicGraph, nodes) -> DynamicGraph:
    """Restrict ``g`` to ``nodes`` (reindexed in the given order); T is kept."""
    nodes = np.asarray(nodes, dtype=np.int64)
    remap = np.full(g.num_nodes, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    sel = (remap[g.src] >= 0) & (remap[g.dst] >= 0)
    return DynamicGraph(len(nodes), g.num_steps, g.step[sel], remap[g.src[sel]], remap[g.dst[sel]],
                        g.rating[sel], g.label[sel], np.asarray(g.node_ids)[nodes], g.num_classes)
