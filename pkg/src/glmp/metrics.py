"""Evaluation: exact-match accuracy, completion, corpus BLEU, micro entity F1."""

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional


def _check_paired(predictions, golds):
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions vs {len(golds)} references")
    if not predictions:
        raise ValueError("cannot score an empty prediction set")


def per_response_accuracy(predictions, golds):
    """Fraction of responses whose token sequence matches the gold exactly."""
    _check_paired(predictions, golds)
    hits = sum(1 for p, g in zip(predictions, golds) if list(p) == list(g))
    return hits / len(predictions)


def completion_rate(predictions, golds, dialogue_ids):
    """Fraction of dialogues in which every response is an exact match."""
    _check_paired(predictions, golds)
    if len(dialogue_ids) != len(predictions):
        raise ValueError("dialogue_ids must pair with predictions")
    ok: dict = {}
    for p, g, d in zip(predictions, golds, dialogue_ids):
        ok[d] = ok.get(d, True) and (list(p) == list(g))
    return sum(ok.values()) / len(ok)


def _ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def corpus_bleu(predictions, golds):
    """Corpus-level BLEU-4 on 0-100 scale: clipped n-gram precisions, geometric
    mean, multiplicative brevity penalty, hard zero when any order has no match."""
    _check_paired(predictions, golds)
    correct = [0] * 4
    total = [0] * 4
    c_len = r_len = 0
    for hyp, ref in zip(predictions, golds):
        hyp, ref = list(hyp), list(ref)
        c_len += len(hyp)
        r_len += len(ref)
        for n in range(1, 5):
            hyp_counts = Counter(_ngrams(hyp, n))
            ref_counts = Counter(_ngrams(ref, n))
            total[n - 1] += max(len(hyp) - n + 1, 0)
            correct[n - 1] += sum(min(cnt, ref_counts[ng]) for ng, cnt in hyp_counts.items())
    if c_len == 0:
        return 0.0
    precisions = [correct[i] / total[i] if total[i] > 0 else 0.0 for i in range(4)]
    if min(precisions) <= 0.0:
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / 4.0
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return 100.0 * bp * math.exp(log_mean)


@dataclass
class EntityF1:
    f1: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    undefined: bool  # true when no entities exist on either side


def entity_f1(predictions, gold_entities, table, domains=None, restrict=None) -> EntityF1:
    """Micro-averaged F1 of table entities found in predictions vs gold sets.

    `restrict` keeps only samples whose domain tag equals it; the tag must
    actually occur in `domains`.
    """
    _check_paired(predictions, gold_entities)
    idx = range(len(predictions))
    if restrict is not None:
        if domains is None:
            raise ValueError("restrict requires per-sample domain tags")
        if len(domains) != len(predictions):
            raise ValueError("domains must pair with predictions")
        if restrict not in set(domains):
            raise ValueError(f"unknown domain tag {restrict!r}")
        idx = [i for i in idx if domains[i] == restrict]
    tp = fp = fn = 0
    for i in idx:
        gold = set(gold_entities[i])
        found = {tok for tok in predictions[i] if table.slot_of(tok) is not None}
        tp += len(gold & found)
        fp += len(found - gold)
        fn += len(gold - found)
    denom = 2 * tp + fp + fn
    undefined = denom == 0
    f1 = 0.0 if undefined else 2 * tp / denom
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return EntityF1(f1=f1, precision=precision, recall=recall,
                    tp=tp, fp=fp, fn=fn, undefined=undefined)


@dataclass
class EvalReport:
    task: str
    split: str
    count: int
    per_response_accuracy: Optional[float] = None
    completion_rate: Optional[float] = None
    bleu: Optional[float] = None
    entity_f1: Optional[float] = None
    entity_f1_by_domain: dict = field(default_factory=dict)
    f1_undefined: bool = False

    def to_dict(self):
        d = {"task": self.task, "split": self.split, "count": self.count}
        for key in ("per_response_accuracy", "completion_rate", "bleu", "entity_f1"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        for dom in sorted(self.entity_f1_by_domain):
            d[f"entity_f1_{dom}"] = self.entity_f1_by_domain[dom]
        if self.f1_undefined:
            d["f1_undefined"] = True
        return d

    def to_text(self):
        lines = []
        for k, v in self.to_dict().items():
            lines.append(f"{k}\t{v:.6f}" if isinstance(v, float) else f"{k}\t{v}")
        return "\n".join(lines)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)
