"""Triplet memory: hop reads vs brute-force oracle, writes, filtering, pointers."""

from collections import Counter

import numpy as np
import pytest

from conftest import finite_diff_check
from glmp import autodiff as ad
from glmp.autodiff import Tensor
from glmp.errors import GlmpError, NullCopyError, ShapeError
from glmp.memory import (GlobalPointer, MemoryStore, Triplet, apply_global_filter,
                         bow_embed, build_memory, global_pointer,
                         local_pointer_query, multi_hop_read, write_hidden)
from glmp.vocab import NULL_TOKEN, Vocabulary
from oracles import global_pointer_ref, hop_read_ref

WORDS = [f"w{i}" for i in range(10)]


def make_vocab():
    return Vocabulary.build(Counter({w: 1 for w in WORDS}))


def random_store(rng, n_kb, n_dlg, hops, d, vocab=None, scale=0.5):
    vocab = vocab or make_vocab()
    kb = [Triplet(*(WORDS[i] for i in rng.integers(len(WORDS), size=3)))
          for _ in range(n_kb)]
    dlg = [Triplet(*(WORDS[i] for i in rng.integers(len(WORDS), size=3)))
           for _ in range(n_dlg)]
    mats = [Tensor(rng.normal(size=(len(vocab), d)) * scale, requires_grad=True)
            for _ in range(hops + 1)]
    return build_memory(kb, dlg, mats, vocab), mats, vocab


class TestBuildMemory:
    def test_position_count_and_null_last(self):
        rng = np.random.default_rng(0)
        store, _, vocab = random_store(rng, 0, 3, 1, 4)
        assert store.size == 0 + 3 + 1
        assert store.n_kb == 0 and store.n_dlg == 3
        assert store.surfaces[-1] == Triplet(NULL_TOKEN, NULL_TOKEN, NULL_TOKEN)
        assert store.ids[-1, 0] == vocab.id(NULL_TOKEN)

    def test_duplicates_kept(self):
        vocab = make_vocab()
        trip = Triplet("w1", "w2", "w3")
        mats = [Tensor(np.zeros((len(vocab), 4))) for _ in range(2)]
        store = build_memory([trip, trip], [trip], mats, vocab)
        assert store.size == 4

    def test_needs_two_hop_matrices(self):
        vocab = make_vocab()
        with pytest.raises(ValueError):
            build_memory([], [Triplet("w1", "w1", "w1")],
                         [Tensor(np.zeros((len(vocab), 4)))], vocab)

    def test_unknown_words_become_unk_but_stay_copyable(self):
        vocab = make_vocab()
        mats = [Tensor(np.zeros((len(vocab), 4))) for _ in range(2)]
        store = build_memory([], [Triplet("$user", "turn1", "zanzibar")], mats, vocab)
        assert store.object_surface(0) == "zanzibar"
        assert store.ids[0, 2] == vocab.lookup("zanzibar") == 1  # <unk>


class TestBowEmbed:
    def test_zero_embeddings(self):
        rng = np.random.default_rng(1)
        store, mats, _ = random_store(rng, 2, 2, 1, 4)
        for m in mats:
            m.data[:] = 0.0
        store.invalidate()
        assert np.allclose(bow_embed(store, 0, 1).data, 0.0)

    def test_bag_of_words_sum(self):
        vocab = make_vocab()
        rng = np.random.default_rng(2)
        mats = [Tensor(rng.normal(size=(len(vocab), 4))) for _ in range(2)]
        a = vocab.id("w3")
        store = build_memory([Triplet("w3", "w3", "w3")], [], mats, vocab)
        assert np.allclose(bow_embed(store, 0, 1).data, 3 * mats[0].data[a], atol=1e-12)

    def test_scale_factor_multiplies(self):
        rng = np.random.default_rng(3)
        store, _, _ = random_store(rng, 2, 2, 1, 4)
        base = bow_embed(store, 1, 1).data.copy()
        apply_global_filter(store, GlobalPointer(Tensor(np.full(4, 0.25))))
        assert np.allclose(bow_embed(store, 1, 1).data, 0.25 * base, atol=1e-15)

    def test_position_out_of_range(self):
        rng = np.random.default_rng(4)
        store, _, _ = random_store(rng, 1, 1, 1, 4)
        with pytest.raises(IndexError):
            bow_embed(store, 3, 1)
        with pytest.raises(ValueError):
            bow_embed(store, 0, 5)  # hop outside [1, K+1]


class TestMultiHopRead:
    def test_two_identical_elements_split_evenly(self):
        vocab = make_vocab()
        rng = np.random.default_rng(5)
        mats = [Tensor(rng.normal(size=(len(vocab), 4))) for _ in range(2)]
        trip = Triplet("w1", "w4", "w2")
        store = build_memory([trip, trip], [], mats, vocab)
        trace = multi_hop_read(store, Tensor(rng.normal(size=4)), attend_null=False)
        assert np.allclose(trace.probs[0].data, [0.5, 0.5], atol=1e-12)

    def test_zero_embeddings_identity_query(self):
        rng = np.random.default_rng(6)
        store, mats, _ = random_store(rng, 2, 3, 3, 4)
        for m in mats:
            m.data[:] = 0.0
        store.invalidate()
        q1 = rng.normal(size=4)
        trace = multi_hop_read(store, Tensor(q1), attend_null=True)
        for p in trace.probs:
            assert np.allclose(p.data, 1.0 / store.size, atol=1e-12)
        for o in trace.readouts:
            assert np.allclose(o.data, 0.0)
        assert np.allclose(trace.queries[-1].data, q1)

    def test_query_shape_checked(self):
        rng = np.random.default_rng(7)
        store, _, _ = random_store(rng, 1, 1, 1, 4)
        with pytest.raises(ShapeError):
            multi_hop_read(store, Tensor(np.zeros(5)))

    @pytest.mark.parametrize("hops", [1, 2, 3])
    @pytest.mark.parametrize("attend_null", [True, False])
    def test_matches_bruteforce_oracle(self, hops, attend_null):
        rng = np.random.default_rng(100 + hops)
        store, mats, _ = random_store(rng, 3, 2, hops, 5)
        q1 = rng.normal(size=5)
        trace = multi_hop_read(store, Tensor(q1), attend_null=attend_null)
        ref = hop_read_ref(store.ids, [m.data for m in mats], q1, attend_null,
                           n_kb=store.n_kb)
        for k in range(hops):
            assert np.allclose(trace.logits[k].data, ref["logits"][k], atol=1e-12)
            assert np.allclose(trace.probs[k].data, ref["probs"][k], atol=1e-12)
            assert np.allclose(trace.readouts[k].data, ref["readouts"][k], atol=1e-12)
        assert np.allclose(trace.queries[-1].data, ref["queries"][-1], atol=1e-12)

    def test_simplex_at_every_hop(self):
        rng = np.random.default_rng(8)
        for trial in range(10):
            store, _, _ = random_store(rng, int(rng.integers(0, 4)),
                                       int(rng.integers(1, 4)), 3, 4)
            trace = multi_hop_read(store, Tensor(rng.normal(size=4)),
                                   attend_null=bool(trial % 2))
            for p in trace.probs:
                assert abs(float(p.data.sum()) - 1.0) <= 1e-9
                assert np.all(p.data > 0)


class TestWriteHidden:
    def test_zero_write_is_noop(self):
        rng = np.random.default_rng(9)
        store, _, _ = random_store(rng, 2, 3, 1, 4)
        before = store.embedded(1).data.copy()
        write_hidden(store, Tensor(np.zeros((3, 4))))
        assert np.allclose(store.embedded(1).data, before, atol=1e-15)

    def test_additive_at_every_hop(self):
        rng = np.random.default_rng(10)
        store, _, _ = random_store(rng, 1, 1, 2, 4)
        v = rng.normal(size=(1, 4))
        before = [store.embedded(k).data.copy() for k in (1, 2, 3)]
        write_hidden(store, Tensor(v))
        for k in (1, 2, 3):
            after = store.embedded(k).data
            assert np.allclose(after[1], before[k - 1][1] + v[0], atol=1e-15)

    def test_kb_and_null_untouched(self):
        rng = np.random.default_rng(11)
        store, _, _ = random_store(rng, 3, 2, 1, 4)
        before = store.embedded(1).data.copy()
        write_hidden(store, Tensor(rng.normal(size=(2, 4))))
        after = store.embedded(1).data
        assert np.array_equal(after[:3], before[:3])      # KB rows bit-identical
        assert np.array_equal(after[-1], before[-1])      # null row bit-identical

    def test_count_mismatch(self):
        rng = np.random.default_rng(12)
        store, _, _ = random_store(rng, 1, 3, 1, 4)
        with pytest.raises(ShapeError):
            write_hidden(store, Tensor(np.zeros((2, 4))))
        with pytest.raises(ShapeError):
            write_hidden(store, Tensor(np.zeros((3, 5))))


class TestGlobalPointer:
    def test_zero_embeddings_give_half(self):
        rng = np.random.default_rng(13)
        store, mats, _ = random_store(rng, 2, 2, 1, 4)
        for m in mats:
            m.data[:] = 0.0
        store.invalidate()
        ptr, readout, _ = global_pointer(store, Tensor(rng.normal(size=4)))
        assert np.allclose(ptr.g.data, 0.5)

    def test_open_interval(self):
        rng = np.random.default_rng(14)
        store, _, _ = random_store(rng, 3, 3, 2, 4)
        ptr, _, _ = global_pointer(store, Tensor(rng.normal(size=4) * 10))
        assert np.all(ptr.g.data > 0.0) and np.all(ptr.g.data < 1.0)
        assert ptr.g.shape == (6,)  # null slot excluded

    @pytest.mark.parametrize("hops", [1, 2, 3])
    def test_matches_oracle(self, hops):
        rng = np.random.default_rng(200 + hops)
        store, mats, _ = random_store(rng, 2, 2, hops, 4)
        corr = rng.normal(size=(2, 4))
        write_hidden(store, Tensor(corr))
        q1 = rng.normal(size=4)
        ptr, readout, _ = global_pointer(store, Tensor(q1))
        g_ref, q_ref = global_pointer_ref(store.ids, [m.data for m in mats], q1,
                                          n_kb=2, corrections=corr)
        assert np.allclose(ptr.g.data, g_ref, atol=1e-12)
        assert np.allclose(readout.data, q_ref, atol=1e-12)

    def test_rejected_after_filter(self):
        rng = np.random.default_rng(15)
        store, _, _ = random_store(rng, 1, 2, 1, 4)
        apply_global_filter(store, GlobalPointer(Tensor(np.full(3, 0.5))))
        with pytest.raises(GlmpError):
            global_pointer(store, Tensor(np.zeros(4)))


class TestGlobalFilter:
    def test_all_ones_is_identity(self):
        rng = np.random.default_rng(16)
        store, mats, vocab = random_store(rng, 2, 2, 2, 4)
        q = rng.normal(size=4)
        baseline = multi_hop_read(store, Tensor(q)).probs[-1].data.copy()
        store2 = build_memory(store.surfaces[:2], store.surfaces[2:-1], mats, vocab)
        apply_global_filter(store2, GlobalPointer(Tensor(np.ones(4))))
        filtered = multi_hop_read(store2, Tensor(q)).probs[-1].data
        assert np.allclose(filtered, baseline, atol=1e-15)

    def test_zeroed_position_contributes_nothing(self):
        rng = np.random.default_rng(17)
        store, _, _ = random_store(rng, 2, 1, 1, 4)
        g = np.ones(3)
        g[1] = 0.0
        apply_global_filter(store, GlobalPointer(Tensor(g)))
        emb = store.embedded(2).data
        assert np.allclose(emb[1], 0.0)
        # the zeroed position's logit collapses to exactly q.0 = 0, not -inf
        trace = multi_hop_read(store, Tensor(rng.normal(size=4)))
        assert trace.logits[0].data[1] == pytest.approx(0.0, abs=1e-15)

    def test_commutes_with_embedding(self):
        # filtering then embedding == embedding then scaling, to 1e-12
        rng = np.random.default_rng(18)
        store, mats, vocab = random_store(rng, 3, 2, 2, 4)
        corr = rng.normal(size=(2, 4))
        write_hidden(store, Tensor(corr))
        g = rng.uniform(0.1, 0.9, size=5)
        pre = {k: store.embedded(k).data.copy() for k in (1, 2, 3)}
        apply_global_filter(store, GlobalPointer(Tensor(g)))
        scale = np.concatenate([g, [1.0]])[:, None]
        for k in (1, 2, 3):
            assert np.allclose(store.embedded(k).data, pre[k] * scale, atol=1e-12)

    def test_null_slot_never_scaled(self):
        rng = np.random.default_rng(19)
        store, _, _ = random_store(rng, 1, 1, 1, 4)
        before = store.embedded(1).data[-1].copy()
        apply_global_filter(store, GlobalPointer(Tensor(np.full(2, 1e-6))))
        assert np.array_equal(store.embedded(1).data[-1], before)

    def test_single_application(self):
        rng = np.random.default_rng(20)
        store, _, _ = random_store(rng, 1, 1, 1, 4)
        apply_global_filter(store, GlobalPointer(Tensor(np.full(2, 0.5))))
        with pytest.raises(GlmpError):
            apply_global_filter(store, GlobalPointer(Tensor(np.full(2, 0.5))))

    def test_length_checked(self):
        rng = np.random.default_rng(21)
        store, _, _ = random_store(rng, 1, 1, 1, 4)
        with pytest.raises(ShapeError):
            apply_global_filter(store, GlobalPointer(Tensor(np.ones(3))))


class TestLocalPointer:
    def test_simplex_including_null(self):
        rng = np.random.default_rng(22)
        store, _, _ = random_store(rng, 2, 2, 2, 4)
        step = local_pointer_query(store, Tensor(rng.normal(size=4)))
        assert step.dist.shape == (5,)
        assert abs(float(step.dist.data.sum()) - 1.0) <= 1e-9

    def test_null_dominates_when_aligned(self):
        vocab = make_vocab()
        mats = [Tensor(np.zeros((len(vocab), 4))) for _ in range(2)]
        null_id = vocab.id(NULL_TOKEN)
        for m in mats:
            m.data[null_id] = [5.0, 0, 0, 0]
        store = build_memory([Triplet("w1", "w1", "w1")], [], mats, vocab)
        step = local_pointer_query(store, Tensor(np.array([3.0, 0, 0, 0])))
        assert int(np.argmax(step.dist.data)) == store.size - 1

    def test_matches_oracle_with_filter(self):
        rng = np.random.default_rng(23)
        store, mats, _ = random_store(rng, 2, 2, 3, 4)
        corr = rng.normal(size=(2, 4))
        write_hidden(store, Tensor(corr))
        g = rng.uniform(0.05, 0.95, size=4)
        apply_global_filter(store, GlobalPointer(Tensor(g)))
        h = rng.normal(size=4)
        step = local_pointer_query(store, Tensor(h))
        scales = np.concatenate([g, [1.0]])
        ref = hop_read_ref(store.ids, [m.data for m in mats], h, True,
                           n_kb=2, corrections=corr, scales=scales)
        assert np.allclose(step.dist.data, ref["probs"][-1], atol=1e-12)


class TestObjectOf:
    def test_returns_object(self):
        vocab = make_vocab()
        mats = [Tensor(np.zeros((len(vocab), 4))) for _ in range(2)]
        store = build_memory([Triplet("w7", "w2", "w9")],
                             [Triplet("$user", "turn1", "w5")], mats, vocab)
        assert store.object_id(0) == vocab.id("w9")
        assert store.object_surface(0) == "w9"
        assert store.object_surface(1) == "w5"

    def test_null_position_errors(self):
        vocab = make_vocab()
        mats = [Tensor(np.zeros((len(vocab), 4))) for _ in range(2)]
        store = build_memory([], [Triplet("$user", "turn1", "w5")], mats, vocab)
        with pytest.raises(NullCopyError):
            store.object_id(store.size - 1)
        with pytest.raises(NullCopyError):
            store.object_surface(store.size - 1)


def test_gradients_through_composed_read():
    """Write, point, filter, then a decoder-style read: FD check end to end."""
    rng = np.random.default_rng(24)
    vocab = make_vocab()
    d = 4
    mats = [Tensor(rng.normal(size=(len(vocab), d)) * 0.5, requires_grad=True)
            for _ in range(3)]
    hidden = Tensor(rng.normal(size=(2, d)), requires_grad=True)
    q = Tensor(rng.normal(size=d), requires_grad=True)
    h_dec = Tensor(rng.normal(size=d), requires_grad=True)
    probe = Tensor(rng.normal(size=4))  # one KB + two dialogue + null

    def loss():
        store = build_memory([Triplet("w0", "w1", "w2")],
                             [Triplet("$user", "turn1", "w3"),
                              Triplet("$user", "turn1", "w4")], mats, vocab)
        write_hidden(store, hidden)
        ptr, readout, _ = global_pointer(store, q)
        apply_global_filter(store, ptr)
        step = local_pointer_query(store, h_dec)
        return ad.add(ad.dot(step.dist, probe), ad.tsum(readout))

    finite_diff_check(mats + [hidden, q, h_dec], loss, tol=1e-4)
