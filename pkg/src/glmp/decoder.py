"""Sketch-and-copy decoding: label builders, the three losses, greedy search."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import GruWeights, Tensor
from .encoder import dropout_mask
from .memory import MemoryStore, local_pointer_query
from .vocab import EOS, SOS, Vocabulary

PROB_FLOOR = 1e-12  # probabilities are clamped here before any log


@dataclass
class DecoderParams:
    embedding: Tensor   # C^1, shared with the encoder and first hop
    gru: GruWeights
    out_w: Tensor       # (|V|, d) vocabulary projection


@dataclass
class StepTrace:
    sketch_id: int
    copied: bool
    position: Optional[int]
    pointer: np.ndarray       # copy distribution over all positions incl. null


@dataclass
class DecodeState:
    tokens: list = field(default_factory=list)       # emitted surfaces, no <eos>
    sketch_ids: list = field(default_factory=list)
    record: Optional[np.ndarray] = None
    steps: list = field(default_factory=list)


@dataclass
class LossBundle:
    pointer_loss: Tensor
    sketch_loss: Tensor
    copy_loss: Tensor
    total: Tensor

    def values(self):
        return {
            "loss_g": float(self.pointer_loss.data),
            "loss_v": float(self.sketch_loss.data),
            "loss_l": float(self.copy_loss.data),
            "loss": float(self.total.data),
        }


def make_sketch_labels(gold_tokens, table):
    """Gold response with every table entity replaced by its '@' slot tag."""
    out = []
    for tok in gold_tokens:
        slot = table.slot_of(tok)
        out.append(table.sketch_tag(slot) if slot is not None else tok)
    return out


def make_global_label(gold_tokens, objects):
    """Binary vector over real memory positions: 1 where the object occurs in gold."""
    gold = set(gold_tokens)
    return np.array([1.0 if o in gold else 0.0 for o in objects], dtype=np.float64)


def make_local_labels(target_tokens, objects):
    """Copy target per step: highest matching position, else the null index."""
    null = len(objects)
    labels = []
    for tok in target_tokens:
        best = null
        for z, o in enumerate(objects):
            if o == tok:
                best = z
        labels.append(best)
    return labels


def pointer_bce(pointer_g: Tensor, label):
    """Summed binary cross-entropy of the global pointer against its 0/1 label."""
    label = np.asarray(label, dtype=np.float64)
    if label.shape != pointer_g.shape:
        raise ValueError(f"label shape {label.shape} != pointer shape {pointer_g.shape}")
    if not np.all((label == 0.0) | (label == 1.0)):
        raise ValueError("global pointer label must be binary")
    pos = ad.mul(Tensor(label), ad.log(pointer_g, floor=PROB_FLOOR))
    neg = ad.mul(Tensor(1.0 - label), ad.log(ad.sub(1.0, pointer_g), floor=PROB_FLOOR))
    return ad.neg(ad.tsum(ad.add(pos, neg)))


def _nll(dists, labels, what):
    if len(dists) != len(labels):
        raise ValueError(f"{what}: {len(dists)} distributions vs {len(labels)} labels")
    total = None
    for dist, y in zip(dists, labels):
        if not 0 <= y < dist.shape[0]:
            raise ValueError(f"{what}: label {y} outside distribution of size {dist.shape[0]}")
        term = ad.neg(ad.log(ad.pick(dist, y), floor=PROB_FLOOR))
        total = term if total is None else ad.add(total, term)
    return total if total is not None else Tensor(np.float64(0.0))


def sketch_nll(vocab_dists, label_ids):
    """Teacher-forced negative log-likelihood of the sketch tokens."""
    return _nll(vocab_dists, label_ids, "sketch loss")


def copy_nll(pointer_dists, labels):
    """Negative log-likelihood of the per-step copy positions."""
    return _nll(pointer_dists, labels, "copy loss")


def sketch_step(prev_id, h_prev, dec: DecoderParams, dropout=0.0, rng=None):
    """One decoder step. Returns (new hidden, tapped hidden, vocab distribution).

    The tap (dropout-adjusted view of the hidden state) feeds both the
    vocabulary projection and the memory query; recurrence stays clean.
    """
    if not 0 <= prev_id < dec.embedding.shape[0]:
        raise ValueError(f"token id {prev_id} outside embedding table")
    x = ad.row(dec.embedding, prev_id)
    if dropout > 0.0:
        x = ad.mul(x, Tensor(dropout_mask(x.shape, dropout, rng)))
    h = ad.gru_cell(x, h_prev, dec.gru)
    tap = h
    if dropout > 0.0:
        tap = ad.mul(tap, Tensor(dropout_mask(tap.shape, dropout, rng)))
    dist = ad.softmax(ad.matmul(dec.out_w, tap))
    return h, tap, dist


def decode_greedy(store: MemoryStore, dec: DecoderParams, vocab: Vocabulary,
                  h0: Tensor, max_len=20) -> DecodeState:
    """Greedy sketch decoding with copy-on-tag and a no-repeat record mask.

    Sketch tags pull the object of argmax(L_t * R) (ties to the lowest index);
    once copied, a position's record entry is cleared. If every real position
    has been used the mask is ignored for that step. The null slot is never a
    copy source.
    """
    state = DecodeState()
    n_real = store.size - 1
    record = np.ones(n_real, dtype=np.float64)
    with ad.no_grad():
        h = h0
        prev = SOS
        for _ in range(max_len):
            h, tap, dist = sketch_step(prev, h, dec)
            top = int(np.argmax(dist.data))
            if top == EOS:
                break
            step = local_pointer_query(store, tap)
            copies = step.dist.data[:n_real]
            if vocab.is_sketch_tag(top):
                masked = copies * record
                pos = int(np.argmax(masked if masked.max() > 0.0 else copies))
                token = store.object_surface(pos)
                record[pos] = 0.0
                state.steps.append(StepTrace(top, True, pos, step.dist.data.copy()))
            else:
                token = vocab.surface(top)
                state.steps.append(StepTrace(top, False, None, step.dist.data.copy()))
            state.tokens.append(token)
            state.sketch_ids.append(top)
            prev = top
    state.record = record
    return state
