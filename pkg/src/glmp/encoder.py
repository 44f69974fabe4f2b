"""Bidirectional GRU over the dialogue history, wired into the triplet memory."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import GruWeights, Tensor
from .memory import GlobalPointer, HopTrace, MemoryStore, global_pointer, write_hidden


@dataclass
class EncoderParams:
    embedding: Tensor      # C^1, shared with the first memory hop
    fwd: GruWeights
    bwd: GruWeights


@dataclass
class EncodedContext:
    hidden: Tensor                 # (n, d) per-token states, directions summed
    final: Tensor                  # (d,) last-token state, the first memory query
    kb_readout: Tensor             # (d,) q^{K+1} after the encoder-side hops
    pointer: GlobalPointer
    trace: HopTrace


def dropout_mask(shape, rate, rng):
    """Inverted-dropout multiplier; scales kept units by 1/(1-rate)."""
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep


def _run_gru(xs, weights, reverse=False):
    h = Tensor(np.zeros(weights.b_z.shape[0]))
    out = [None] * len(xs)
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    for t in order:
        h = ad.gru_cell(xs[t], h, weights)
        out[t] = h
    return out


def encode(history_ids, store: MemoryStore, params: EncoderParams,
           dropout=0.0, rng=None, write=True) -> EncodedContext:
    """Encode the token history, write states into memory, raise the global pointer.

    history_ids must line up one-to-one with the store's dialogue positions.
    `write=False` skips the hidden-state memory write (ablation path).
    """
    n = len(history_ids)
    if n == 0:
        raise ValueError("cannot encode an empty history")
    if n != store.n_dlg:
        raise ValueError(f"{n} history tokens vs {store.n_dlg} dialogue memory positions")
    idx = np.asarray(history_ids, dtype=np.int64)
    emb = ad.gather_rows(params.embedding, idx)
    if dropout > 0.0:
        emb = ad.mul(emb, Tensor(dropout_mask(emb.shape, dropout, rng)))
    xs = [ad.row(emb, t) for t in range(n)]
    fwd = _run_gru(xs, params.fwd)
    bwd = _run_gru(xs, params.bwd, reverse=True)
    merged = [ad.add(f, b) for f, b in zip(fwd, bwd)]
    hidden = ad.stack_rows(merged)
    if dropout > 0.0:
        hidden = ad.mul(hidden, Tensor(dropout_mask(hidden.shape, dropout, rng)))
    final = ad.row(hidden, n - 1)
    if write:
        write_hidden(store, hidden)
    pointer, kb_readout, trace = global_pointer(store, final)
    return EncodedContext(hidden=hidden, final=final, kb_readout=kb_readout,
                          pointer=pointer, trace=trace)
