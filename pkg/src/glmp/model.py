"""Model assembly: parameters, per-sample loss, and greedy response decoding."""

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import RunConfig
from .decoder import (DecoderParams, LossBundle, copy_nll, decode_greedy,
                      pointer_bce, sketch_nll, sketch_step)
from .encoder import EncoderParams, encode
from .errors import CheckpointError
from .memory import apply_global_filter, build_memory, local_pointer_query
from .params import (ParamStore, add_gru, gru_view, load_checkpoint,
                     save_checkpoint, uniform_init)
from .vocab import EOS, SOS, Vocabulary

GRU_KINDS = ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h")


class Model:
    """Memory-augmented encoder-decoder over a fixed vocabulary."""

    def __init__(self, config: RunConfig, vocab: Vocabulary, store: ParamStore = None):
        self.config = config
        self.vocab = vocab
        if store is None:
            store = self._init_params(config, len(vocab))
        else:
            self._check_params(store, config, len(vocab))
        self.store = store

    @staticmethod
    def _param_names(config):
        n_hops = 1 if config.tie_hop_matrices else config.hops + 1
        names = [f"hop.{k}" for k in range(1, n_hops + 1)]
        for prefix in ("enc_fwd", "enc_bwd", "dec"):
            names += [f"{prefix}.{kind}" for kind in GRU_KINDS]
        names += ["out.w", "init.w", "init.b"]
        return names

    @staticmethod
    def _init_params(config, n_vocab):
        store = ParamStore(seed=config.seed)
        rng = np.random.default_rng(config.seed)
        d = config.hidden
        n_hops = 1 if config.tie_hop_matrices else config.hops + 1
        for k in range(1, n_hops + 1):
            store.add(f"hop.{k}", uniform_init(rng, (n_vocab, d)))
        add_gru(store, rng, "enc_fwd", d, d)
        add_gru(store, rng, "enc_bwd", d, d)
        add_gru(store, rng, "dec", d, d)
        store.add("out.w", uniform_init(rng, (n_vocab, d)))
        store.add("init.w", uniform_init(rng, (d, 2 * d)))
        store.add("init.b", np.zeros(d))
        return store

    @classmethod
    def _check_params(cls, store, config, n_vocab):
        missing = [n for n in cls._param_names(config) if n not in store]
        if missing:
            raise CheckpointError(f"checkpoint missing parameters: {missing}")
        if store["hop.1"].shape != (n_vocab, config.hidden):
            raise CheckpointError(
                f"embedding shape {store['hop.1'].shape} does not match "
                f"vocab {n_vocab} / hidden {config.hidden}")

    @property
    def hop_matrices(self):
        if self.config.tie_hop_matrices:
            return [self.store["hop.1"]] * (self.config.hops + 1)
        return [self.store[f"hop.{k}"] for k in range(1, self.config.hops + 2)]

    @property
    def encoder_params(self):
        return EncoderParams(embedding=self.store["hop.1"],
                             fwd=gru_view(self.store, "enc_fwd"),
                             bwd=gru_view(self.store, "enc_bwd"))

    @property
    def decoder_params(self):
        return DecoderParams(embedding=self.store["hop.1"],
                             gru=gru_view(self.store, "dec"),
                             out_w=self.store["out.w"])

    def build_store(self, sample):
        return build_memory(sample.kb, sample.history, self.hop_matrices, self.vocab)

    def _encode_sample(self, sample, store, dropout=0.0, rng=None):
        ids = self.vocab.encode(sample.history_tokens)
        return encode(ids, store, self.encoder_params, dropout=dropout, rng=rng,
                      write=not self.config.no_hidden_write)

    def _decoder_init(self, ctx):
        packed = ad.concat([ctx.final, ctx.kb_readout])
        return ad.add(ad.matmul(self.store["init.w"], packed), self.store["init.b"])

    def joint_loss(self, sample, training=True, rng=None) -> LossBundle:
        """Teacher-forced weighted sum of pointer, sketch, and copy losses."""
        cfg = self.config
        dropout = cfg.dropout if training else 0.0
        if dropout > 0.0 and rng is None:
            raise ValueError("training with dropout requires an rng")
        store = self.build_store(sample)
        ctx = self._encode_sample(sample, store, dropout=dropout, rng=rng)
        loss_g = pointer_bce(ctx.pointer.g, np.asarray(sample.global_label))
        if not cfg.no_global_filter:
            apply_global_filter(store, ctx.pointer)
        h = self._decoder_init(ctx)
        sketch_ids = self.vocab.encode(sample.sketch)
        inputs = [SOS] + sketch_ids
        targets = sketch_ids + [EOS]
        vocab_dists, copy_dists = [], []
        dec = self.decoder_params
        for prev in inputs:
            h, tap, dist = sketch_step(prev, h, dec, dropout=dropout, rng=rng)
            vocab_dists.append(dist)
            copy_dists.append(local_pointer_query(store, tap).dist)
        loss_v = sketch_nll(vocab_dists, targets)
        loss_l = copy_nll(copy_dists, list(sample.local_labels))
        total = ad.add(ad.add(ad.mul(loss_g, cfg.alpha), ad.mul(loss_v, cfg.beta)),
                       ad.mul(loss_l, cfg.gamma))
        return LossBundle(pointer_loss=loss_g, sketch_loss=loss_v,
                          copy_loss=loss_l, total=total)

    def decode(self, sample):
        """Greedy response for one dialogue turn. Returns a DecodeState."""
        with ad.no_grad():
            store = self.build_store(sample)
            ctx = self._encode_sample(sample, store)
            if not self.config.no_global_filter:
                apply_global_filter(store, ctx.pointer)
            h0 = self._decoder_init(ctx)
            return decode_greedy(store, self.decoder_params, self.vocab, h0,
                                 max_len=self.config.max_decode_len)

    def save(self, path, extra_meta=None):
        meta = {"config": self.config.to_dict(), "vocab": self.vocab.to_dict()}
        if extra_meta:
            meta.update(extra_meta)
        save_checkpoint(path, self.store, meta)

    @classmethod
    def load(cls, path):
        store, meta = load_checkpoint(path)
        if "config" not in meta or "vocab" not in meta:
            raise CheckpointError(f"{path}: checkpoint lacks config/vocab metadata")
        config = RunConfig.from_dict(meta["config"])
        vocab = Vocabulary.from_dict(meta["vocab"])
        return cls(config, vocab, store=store)
