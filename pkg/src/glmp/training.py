"""Training loop: accumulate-and-step Adam, dev-driven annealing, best-state keep."""

import json
import logging
import math
import os

import numpy as np

from .data import build_vocab, mask_tokens
from .errors import TrainingError
from .metrics import (EvalReport, completion_rate, corpus_bleu, entity_f1,
                      per_response_accuracy)
from .model import Model
from .params import adam_step

log = logging.getLogger("glmp")


def predict(model, samples):
    return [model.decode(s).tokens for s in samples]


def evaluate(model, samples, table, split="dev") -> EvalReport:
    """Greedy-decode every sample and score it; returns the report."""
    if not samples:
        raise ValueError("cannot evaluate an empty split")
    preds = predict(model, samples)
    golds = [s.gold for s in samples]
    report = EvalReport(task=model.config.task, split=split, count=len(samples))
    report.per_response_accuracy = per_response_accuracy(preds, golds)
    report.completion_rate = completion_rate(preds, golds, [s.dialogue_id for s in samples])
    report.bleu = corpus_bleu(preds, golds)
    gold_ents = [s.gold_entities for s in samples]
    domains = [s.domain for s in samples]
    overall = entity_f1(preds, gold_ents, table)
    report.entity_f1 = overall.f1
    report.f1_undefined = overall.undefined
    for dom in sorted(set(domains)):
        report.entity_f1_by_domain[dom] = entity_f1(
            preds, gold_ents, table, domains=domains, restrict=dom).f1
    return report


def dev_metric(report: EvalReport, task):
    """The quantity annealing and early stopping watch: accuracy or BLEU."""
    if task.startswith("babi"):
        return report.per_response_accuracy
    return report.bleu


def _snapshot(store):
    return {
        "step": store.step,
        "params": {k: v.data.copy() for k, v in store.params.items()},
        "m": {k: v.copy() for k, v in store.adam_m.items()},
        "v": {k: v.copy() for k, v in store.adam_v.items()},
    }


def _restore(store, snap):
    store.step = snap["step"]
    for k, p in store.params.items():
        p.data = snap["params"][k].copy()
        store.adam_m[k] = snap["m"][k].copy()
        store.adam_v[k] = snap["v"][k].copy()


def train(config, train_samples, dev_samples, table, vocab=None):
    """Train a fresh model; returns (model with best-dev weights, history list).

    Writes metrics.jsonl and model.npz under config.out_dir.
    """
    if not train_samples:
        raise TrainingError("no training samples")
    if not dev_samples:
        raise TrainingError("no dev samples")
    os.makedirs(config.out_dir, exist_ok=True)
    if vocab is None:
        vocab = build_vocab(train_samples, table, config.min_count)
    model = Model(config, vocab)
    lr = config.lr
    best = -math.inf
    best_snap = None
    stale = 0
    history = []
    log_path = os.path.join(config.out_dir, "metrics.jsonl")
    log_f = open(log_path, "w", encoding="utf-8")
    try:
        for epoch in range(1, config.max_epochs + 1):
            order = np.random.default_rng([config.seed, epoch, 0]).permutation(len(train_samples))
            noise = np.random.default_rng([config.seed, epoch, 1])
            sums = {"loss": 0.0, "loss_g": 0.0, "loss_v": 0.0, "loss_l": 0.0}
            model.store.zero_grad()
            pending = 0
            for j, idx in enumerate(order):
                sample = mask_tokens(train_samples[idx], config.mask_ratio, noise)
                bundle = model.joint_loss(sample, training=True, rng=noise)
                total = float(bundle.total.data)
                if not math.isfinite(total):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, sample index {int(idx)}")
                for k, v in bundle.values().items():
                    sums[k] += v
                bundle.total.backward()
                pending += 1
                if pending == config.batch or j == len(order) - 1:
                    model.store.scale_grads(1.0 / pending)
                    adam_step(model.store, lr)
                    model.store.zero_grad()
                    pending = 0
            report = evaluate(model, dev_samples, table, split="dev")
            metric = dev_metric(report, config.task)
            improved = metric > best
            if improved:
                best = metric
                best_snap = _snapshot(model.store)
                stale = 0
            else:
                stale += 1
                lr = max(lr * config.lr_decay, config.lr_floor)
            record = {"epoch": epoch, "lr": lr, "dev_metric": metric,
                      "improved": improved, "stale": stale}
            record.update({k: v / len(order) for k, v in sums.items()})
            history.append(record)
            log_f.write(json.dumps(record, sort_keys=True) + "\n")
            log_f.flush()
            log.info("epoch %d loss %.4f dev %.4f lr %.2e%s", epoch,
                     record["loss"], metric, lr, " *" if improved else "")
            if config.stop_at_dev >= 0.0 and metric >= config.stop_at_dev:
                break
            if stale >= config.patience:
                break
    finally:
        log_f.close()
    if best_snap is not None:
        _restore(model.store, best_snap)
    model.save(os.path.join(config.out_dir, "model.npz"),
               extra_meta={"best_dev": best, "epochs": len(history)})
    return model, history
