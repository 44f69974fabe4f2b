"""Training loop: evaluation reports, annealing, early stop, best-state restore."""

import json
import math
import os

import numpy as np
import pytest

from glmp.config import RunConfig
from glmp.data import build_vocab, limit_dialogues, load_task, make_sample
from glmp.errors import TrainingError
from glmp.memory import Triplet
from glmp.metrics import EvalReport
from glmp.model import Model
from glmp.training import _restore, _snapshot, dev_metric, evaluate, predict, train

def small_config(out_dir, **kw):
    base = dict(task="babi:1", out_dir=out_dir, hops=1, hidden=8, dropout=0.0,
                mask_ratio=0.0, seed=11, batch=4, max_epochs=8, patience=3,
                max_decode_len=12, stop_at_dev=-1.0)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def corpus(babi_dir):
    cfg = RunConfig(task="babi:1", data_dir=babi_dir)
    splits, table = load_task(cfg)
    return splits, table


def impossible_dev(table):
    """Dev samples whose gold can never be produced: metric pinned at zero."""
    out = []
    for i in range(3):
        out.append(make_sample(f"imp-{i}", 1, "babi:1", [],
                               [Triplet("$user", "turn1", "hello")],
                               ["unreachable_gold_zzz"], table))
    return out


class TestEvaluate:
    def test_report_fields(self, corpus):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        vocab = build_vocab(train_s, table)
        model = Model(small_config("unused"), vocab)
        report = evaluate(model, train_s, table, split="train")
        assert report.split == "train"
        assert report.count == len(train_s)
        assert 0.0 <= report.per_response_accuracy <= 1.0
        assert 0.0 <= report.completion_rate <= 1.0
        assert 0.0 <= report.bleu <= 100.0
        assert 0.0 <= report.entity_f1 <= 1.0
        assert set(report.entity_f1_by_domain) == {"babi:1"}

    def test_empty_split_rejected(self, corpus):
        splits, table = corpus
        vocab = build_vocab(splits["train"], table)
        model = Model(small_config("unused"), vocab)
        with pytest.raises(ValueError):
            evaluate(model, [], table)

    def test_dev_metric_selection(self):
        r = EvalReport(task="x", split="dev", count=1,
                       per_response_accuracy=0.25, bleu=40.0)
        assert dev_metric(r, "babi:1") == 0.25
        assert dev_metric(r, "smd") == 40.0


class TestSnapshot:
    def test_round_trip_restores_weights_and_moments(self, corpus):
        splits, table = corpus
        vocab = build_vocab(splits["train"], table)
        model = Model(small_config("unused"), vocab)
        store = model.store
        store.ensure_grads()
        store.adam_m["out.w"][:] = 0.5
        store.step = 7
        snap = _snapshot(store)
        store.params["out.w"].data[:] = 99.0
        store.adam_m["out.w"][:] = -1.0
        store.step = 20
        _restore(store, snap)
        assert store.step == 7
        assert np.all(store.adam_m["out.w"] == 0.5)
        assert not np.any(store.params["out.w"].data == 99.0)


class TestTrainLoop:
    def test_loss_decreases_and_artifacts_written(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 3)
        dev_s = limit_dialogues(splits["dev"], 2)
        cfg = small_config(str(tmp_path / "run"), max_epochs=5, patience=5)
        model, history = train(cfg, train_s, dev_s, table)
        assert len(history) == 5
        assert history[-1]["loss"] < history[0]["loss"]
        assert os.path.exists(os.path.join(cfg.out_dir, "model.npz"))
        log_lines = open(os.path.join(cfg.out_dir, "metrics.jsonl")).read().splitlines()
        assert len(log_lines) == len(history)
        rec = json.loads(log_lines[0])
        assert set(rec) >= {"epoch", "lr", "dev_metric", "improved", "stale",
                            "loss", "loss_g", "loss_v", "loss_l"}

    def test_stop_at_dev_breaks_immediately(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        cfg = small_config(str(tmp_path / "run"), stop_at_dev=0.0)
        _, history = train(cfg, train_s, limit_dialogues(splits["dev"], 2), table)
        assert len(history) == 1  # any metric satisfies a 0.0 target

    def test_annealing_halves_lr_only_when_stale(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        cfg = small_config(str(tmp_path / "run"), patience=2, max_epochs=10)
        _, history = train(cfg, train_s, impossible_dev(table), table)
        assert [h["improved"] for h in history] == [True, False, False]
        assert [h["stale"] for h in history] == [0, 1, 2]
        assert history[0]["lr"] == pytest.approx(1e-3)   # untouched on improvement
        assert history[1]["lr"] == pytest.approx(5e-4)
        assert history[2]["lr"] == pytest.approx(2.5e-4)

    def test_lr_floor_respected(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        cfg = small_config(str(tmp_path / "run"), patience=3, max_epochs=10,
                           lr=1e-3, lr_floor=6e-4)
        _, history = train(cfg, train_s, impossible_dev(table), table)
        assert all(h["lr"] >= 6e-4 for h in history)
        assert history[-1]["lr"] == pytest.approx(6e-4)

    def test_best_weights_kept(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 3)
        dev_s = limit_dialogues(splits["dev"], 2)
        cfg = small_config(str(tmp_path / "run"), max_epochs=4, patience=9)
        model, history = train(cfg, train_s, dev_s, table)
        final = dev_metric(evaluate(model, dev_s, table), cfg.task)
        assert final == pytest.approx(max(h["dev_metric"] for h in history))

    def test_checkpoint_reload_matches(self, corpus, tmp_path):
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        dev_s = limit_dialogues(splits["dev"], 1)
        cfg = small_config(str(tmp_path / "run"), max_epochs=2, patience=9)
        model, _ = train(cfg, train_s, dev_s, table)
        loaded = Model.load(os.path.join(cfg.out_dir, "model.npz"))
        assert predict(loaded, dev_s) == predict(model, dev_s)

    def test_empty_sets_rejected(self, corpus, tmp_path):
        splits, table = corpus
        cfg = small_config(str(tmp_path / "run"))
        with pytest.raises(TrainingError):
            train(cfg, [], splits["dev"], table)
        with pytest.raises(TrainingError):
            train(cfg, splits["train"][:1], [], table)

    def test_nonfinite_loss_aborts_with_context(self, corpus, tmp_path, monkeypatch):
        from glmp.autodiff import Tensor
        from glmp.decoder import LossBundle
        splits, table = corpus
        train_s = limit_dialogues(splits["train"], 2)
        cfg = small_config(str(tmp_path / "run"))

        def poisoned(self, sample, training=True, rng=None):
            nan = Tensor(np.float64("nan"))
            return LossBundle(nan, nan, nan, nan)

        monkeypatch.setattr(Model, "joint_loss", poisoned)
        with pytest.raises(TrainingError, match="epoch 1, sample index"):
            train(cfg, train_s, impossible_dev(table), table)


def test_training_is_deterministic(corpus, tmp_path):
    """Same config, same data: bit-identical weights and identical history."""
    splits, table = corpus
    train_s = limit_dialogues(splits["train"], 2)
    dev_s = limit_dialogues(splits["dev"], 1)
    runs = []
    for name in ("a", "b"):
        cfg = small_config(str(tmp_path / name), max_epochs=2, patience=9,
                           dropout=0.2, mask_ratio=0.1)
        runs.append(train(cfg, train_s, dev_s, table))
    (m1, h1), (m2, h2) = runs
    assert h1 == h2
    for name, t in m1.store.params.items():
        assert np.array_equal(t.data, m2.store.params[name].data), name
