"""Run configuration: one dataclass, JSON round-trip, CLI override hook."""

import dataclasses
import json
import logging
from dataclasses import dataclass

log = logging.getLogger("glmp")

RECOMMENDED_HOPS = (1, 3, 6)

# (embedding/hidden size, dropout) tuned per task and hop count
HIDDEN_DROPOUT = {
    ("babi:1", 1): (64, 0.1), ("babi:1", 3): (64, 0.3), ("babi:1", 6): (64, 0.3),
    ("babi:2", 1): (64, 0.3), ("babi:2", 3): (64, 0.3), ("babi:2", 6): (64, 0.3),
    ("babi:3", 1): (64, 0.3), ("babi:3", 3): (64, 0.3), ("babi:3", 6): (64, 0.5),
    ("babi:4", 1): (64, 0.7), ("babi:4", 3): (64, 0.7), ("babi:4", 6): (64, 0.5),
    ("babi:5", 1): (128, 0.3), ("babi:5", 3): (128, 0.1), ("babi:5", 6): (128, 0.1),
    ("smd", 1): (128, 0.2), ("smd", 3): (128, 0.2), ("smd", 6): (128, 0.3),
}


def paper_defaults(task, hops):
    """Published hidden size and dropout for a (task, hops) pair, if tabulated."""
    key = (task, hops)
    if key not in HIDDEN_DROPOUT:
        return None
    hidden, dropout = HIDDEN_DROPOUT[key]
    return {"hidden": hidden, "dropout": dropout}


@dataclass
class RunConfig:
    task: str = "babi:1"            # "babi:<n>" or "smd"
    data_dir: str = "data"
    out_dir: str = "runs/default"
    hops: int = 1
    hidden: int = 64                # embedding size == GRU state size
    dropout: float = 0.1
    lr: float = 1e-3
    lr_decay: float = 0.5
    lr_floor: float = 1e-4
    alpha: float = 1.0              # global pointer loss weight
    beta: float = 1.0               # sketch loss weight
    gamma: float = 1.0              # copy loss weight
    mask_ratio: float = 0.05        # random token -> <unk> rate during training
    seed: int = 7
    batch: int = 8                  # gradient accumulation window
    max_epochs: int = 200
    patience: int = 6               # evals without dev improvement before stopping
    max_decode_len: int = 20
    min_count: int = 1
    stop_at_dev: float = -1.0       # early exit once dev metric >= this; <0 disables
    tie_hop_matrices: bool = False  # share one embedding across every hop
    no_global_filter: bool = False  # ablation: skip memory scaling by the pointer
    no_hidden_write: bool = False   # ablation: skip encoder writes into memory

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (self.task == "smd" or self.task.startswith("babi:")):
            raise ValueError(f"unknown task {self.task!r}")
        if self.hops < 1:
            raise ValueError("hops must be >= 1")
        if self.hops not in RECOMMENDED_HOPS:
            log.warning("hops=%d is outside the usual settings %s", self.hops, RECOMMENDED_HOPS)
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.lr <= 0 or self.lr_floor <= 0:
            raise ValueError("learning rates must be positive")
        if self.lr_floor > self.lr:
            raise ValueError("lr_floor cannot exceed lr")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must be in (0, 1]")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be non-negative")
        if not 0.0 <= self.mask_ratio < 1.0:
            raise ValueError("mask_ratio must be in [0, 1)")
        if self.batch < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch, max_epochs, and patience must be >= 1")
        if self.max_decode_len < 1:
            raise ValueError("max_decode_len must be >= 1")

    @property
    def babi_task(self):
        if not self.task.startswith("babi:"):
            raise ValueError(f"{self.task!r} is not a bAbI task")
        return int(self.task.split(":", 1)[1])

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def for_task(cls, task, hops=1, **overrides):
        """Config seeded with the tabulated hidden/dropout for this task."""
        base = {"task": task, "hops": hops}
        base.update(paper_defaults(task, hops) or {})
        base.update(overrides)
        return cls(**base)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)
