"""Per-step attention export for inspecting pointer behaviour on one sample."""

import numpy as np

from . import autodiff as ad
from .decoder import sketch_step
from .memory import apply_global_filter, local_pointer_query, write_hidden
from .vocab import EOS, SOS

COLUMNS = ("step", "position", "subject", "relation", "object", "global_pointer",
           "attention_unfiltered", "attention_masked", "sketch_token", "chosen")


def attention_rows(model, sample):
    """Greedy-decode `sample`, logging per-position attention three ways: the
    per-response global pointer, the unfiltered last-hop attention, and the
    record-masked filtered attention L_t * R that drives copy choices.
    Returns (rows, decoded tokens); one row per step*position."""
    cfg = model.config
    with ad.no_grad():
        store = model.build_store(sample)
        shadow = model.build_store(sample)  # same memory, never filtered
        ctx = model._encode_sample(sample, store)
        if store.corrections is not None:
            write_hidden(shadow, ctx.hidden)
        if not cfg.no_global_filter:
            apply_global_filter(store, ctx.pointer)
        g = ctx.pointer.g.data
        h = model._decoder_init(ctx)
        dec = model.decoder_params
        record = np.ones(store.size - 1)
        rows, tokens = [], []
        prev = SOS
        for t in range(cfg.max_decode_len):
            h, tap, dist = sketch_step(prev, h, dec)
            top = int(np.argmax(dist.data))
            if top == EOS:
                break
            filt = local_pointer_query(store, tap).dist.data
            unfilt = local_pointer_query(shadow, tap).dist.data
            masked = filt * np.concatenate([record, [1.0]])  # R never masks null
            pos = None
            if model.vocab.is_sketch_tag(top):
                scores = masked[:-1]
                pos = int(np.argmax(scores if scores.max() > 0.0 else filt[:-1]))
                record[pos] = 0.0
                tokens.append(store.object_surface(pos))
            else:
                tokens.append(model.vocab.surface(top))
            sketch_token = model.vocab.surface(top)
            for i in range(store.size):
                trip = store.surfaces[i]
                rows.append({
                    "step": t,
                    "position": i,
                    "subject": trip.subject,
                    "relation": trip.relation,
                    "object": trip.object,
                    "global_pointer": float(g[i]) if i < store.size - 1 else float("nan"),
                    "attention_unfiltered": float(unfilt[i]),
                    "attention_masked": float(masked[i]),
                    "sketch_token": sketch_token,
                    "chosen": 1 if pos == i else 0,
                })
            prev = top
    return rows, tokens


def write_attention_tsv(path, model, sample):
    rows, tokens = attention_rows(model, sample)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(COLUMNS) + "\n")
        for r in rows:
            vals = []
            for c in COLUMNS:
                v = r[c]
                vals.append(f"{v:.6f}" if isinstance(v, float) else str(v))
            f.write("\t".join(vals) + "\n")
    return tokens
