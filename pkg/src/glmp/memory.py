"""Triplet memory with multi-hop attention reads, global pointing, and filtering.

Layout is always [KB triplets; dialogue triplets; one null slot]. The null
slot is the copy target meaning "generate from vocabulary instead".
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import GlmpError, NullCopyError, ShapeError, VocabError
from .vocab import NULL_TOKEN


class Triplet(NamedTuple):
    subject: str
    relation: str
    object: str


@dataclass
class HopTrace:
    """Intermediates of one multi-hop read: K logits/probs/readouts, K+1 queries."""
    logits: list = field(default_factory=list)
    probs: list = field(default_factory=list)
    readouts: list = field(default_factory=list)
    queries: list = field(default_factory=list)


@dataclass
class GlobalPointer:
    g: Tensor  # (n_kb + n_dlg,) sigmoid activations, null slot excluded


@dataclass
class LocalPointerStep:
    dist: Tensor        # (P,) softmax over all positions including null
    logits: Tensor      # (P,) pre-softmax scores
    trace: HopTrace


class MemoryStore:
    """Embeddable triplet memory shared by the encoder and decoder reads."""

    def __init__(self, ids, surfaces, n_kb, hop_matrices):
        self.ids = ids                    # (P, 3) int array, last row = null slot
        self.surfaces = surfaces          # list[Triplet] of raw strings, incl. null
        self.n_kb = n_kb
        self.n_dlg = ids.shape[0] - n_kb - 1
        self.hop_matrices = hop_matrices  # [C^1 .. C^{K+1}] embedding Tensors
        self.hops = len(hop_matrices) - 1
        self.corrections: Optional[Tensor] = None  # (n_dlg, d) hidden-state writes
        self.scales: Optional[Tensor] = None       # (n_kb + n_dlg,) filter gates
        self._cache: dict[int, Tensor] = {}

    @property
    def size(self):
        """Number of addressable positions including the null slot."""
        return self.ids.shape[0]

    @property
    def dim(self):
        return self.hop_matrices[0].shape[1]

    def invalidate(self):
        self._cache.clear()

    def embedded(self, hop):
        """(P, d) sum-of-token embeddings under C^hop, plus corrections and scales."""
        if not 1 <= hop <= self.hops + 1:
            raise ValueError(f"hop {hop} outside [1, {self.hops + 1}]")
        cached = self._cache.get(hop)
        if cached is not None:
            return cached
        table = self.hop_matrices[hop - 1]
        flat = ad.gather_rows(table, self.ids.reshape(-1))          # (3P, d)
        emb = ad.tsum(ad.reshape(flat, (self.size, 3, table.shape[1])), axis=1)
        if self.corrections is not None:
            emb = ad.add(emb, ad.pad_rows(self.corrections, self.n_kb, 1))
        if self.scales is not None:
            col = ad.reshape(ad.concat([self.scales, Tensor(np.ones(1))]), (self.size, 1))
            emb = ad.mul(emb, col)
        self._cache[hop] = emb
        return emb

    def object_id(self, position):
        if position == self.size - 1:
            raise NullCopyError("null memory slot has no object to copy")
        return int(self.ids[position, 2])

    def object_surface(self, position):
        if position == self.size - 1:
            raise NullCopyError("null memory slot has no object to copy")
        return self.surfaces[position].object

    def object_surfaces(self):
        """Object strings for the n_kb + n_dlg real positions, in memory order."""
        return [t.object for t in self.surfaces[:-1]]


def build_memory(kb, dialogue, hop_matrices, vocab) -> MemoryStore:
    """Assemble [KB; dialogue; null] memory from id-triplets, validating ids."""
    if len(hop_matrices) < 2:
        raise ValueError("need at least 2 hop matrices (K >= 1)")
    size = hop_matrices[0].shape[0]
    null_id = vocab.id(NULL_TOKEN)
    rows, surfaces = [], []
    for trip in list(kb) + list(dialogue):
        ids = [vocab.lookup(trip.subject), vocab.lookup(trip.relation), vocab.lookup(trip.object)]
        for i in ids:
            if not 0 <= i < size:
                raise VocabError(f"triplet id {i} outside embedding table of {size} rows")
        rows.append(ids)
        surfaces.append(trip)
    rows.append([null_id, null_id, null_id])
    surfaces.append(Triplet(NULL_TOKEN, NULL_TOKEN, NULL_TOKEN))
    ids = np.asarray(rows, dtype=np.int64)
    return MemoryStore(ids, surfaces, len(list(kb)), hop_matrices)


def bow_embed(store: MemoryStore, position, hop):
    """(d,) embedding of one memory position under hop matrix C^hop."""
    if not 0 <= position < store.size:
        raise IndexError(f"memory position {position} outside [0, {store.size})")
    return ad.row(store.embedded(hop), position)


def write_hidden(store: MemoryStore, hidden):
    """Attach encoder hidden states to the dialogue positions (all hops)."""
    if hidden.shape[0] != store.n_dlg:
        raise ShapeError(
            f"got {hidden.shape[0]} hidden rows for {store.n_dlg} dialogue positions")
    if hidden.shape[1] != store.dim:
        raise ShapeError(f"hidden width {hidden.shape[1]} != memory dim {store.dim}")
    store.corrections = hidden
    store.invalidate()


def apply_global_filter(store: MemoryStore, pointer: GlobalPointer):
    """Scale every real position's embedding by its global-pointer gate, once."""
    if store.scales is not None:
        raise GlmpError("global filter already applied to this memory")
    if pointer.g.shape != (store.size - 1,):
        raise ShapeError(
            f"pointer length {pointer.g.shape} != {store.size - 1} real positions")
    store.scales = pointer.g
    store.invalidate()


def multi_hop_read(store: MemoryStore, query, attend_null=True) -> HopTrace:
    """K attention hops: p^k = softmax(C^k q), o^k = (C^{k+1})^T p^k, q^{k+1} = q^k + o^k."""
    if query.shape != (store.dim,):
        raise ShapeError(f"query shape {query.shape} != ({store.dim},)")
    limit = store.size if attend_null else store.size - 1
    trace = HopTrace()
    q = query
    trace.queries.append(q)
    for k in range(1, store.hops + 1):
        keys = store.embedded(k)
        values = store.embedded(k + 1)
        if not attend_null:
            keys = ad.rows(keys, 0, limit)
            values = ad.rows(values, 0, limit)
        logits = ad.matmul(keys, q)
        p = ad.softmax(logits)
        o = ad.matmul(p, values)
        q = ad.add(q, o)
        trace.logits.append(logits)
        trace.probs.append(p)
        trace.readouts.append(o)
        trace.queries.append(q)
    return trace


def global_pointer(store: MemoryStore, query):
    """Sigmoid gate over real positions from the last-hop scores of an unfiltered read.

    Returns (GlobalPointer, q^{K+1} readout query, HopTrace).
    """
    if store.scales is not None:
        raise GlmpError("global pointer must be computed before filtering")
    trace = multi_hop_read(store, query, attend_null=False)
    g = ad.sigmoid(trace.logits[-1])
    return GlobalPointer(g=g), trace.queries[-1], trace


def local_pointer_query(store: MemoryStore, query) -> LocalPointerStep:
    """Decoder-side read over all positions; last-hop attention is the copy dist."""
    trace = multi_hop_read(store, query, attend_null=True)
    return LocalPointerStep(dist=trace.probs[-1], logits=trace.logits[-1], trace=trace)
