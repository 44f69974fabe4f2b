"""Global-to-local memory pointer networks for task-oriented dialogue."""

from .autodiff import GruWeights, Tensor, gru_cell, no_grad
from .config import RunConfig
from .data import DialogueSample, EntityTable, build_vocab, parse_babi, parse_smd
from .errors import (CheckpointError, GlmpError, GraphError, NullCopyError,
                     ParseError, ShapeError, TrainingError, VocabError)
from .memory import (GlobalPointer, HopTrace, MemoryStore, Triplet,
                     apply_global_filter, build_memory, global_pointer,
                     local_pointer_query, multi_hop_read, write_hidden)
from .metrics import EvalReport, corpus_bleu, entity_f1, per_response_accuracy
from .model import Model
from .params import ParamStore, adam_step, load_checkpoint, save_checkpoint
from .training import evaluate, train
from .vocab import Vocabulary

__version__ = "0.1.0"

__all__ = [
    "CheckpointError", "DialogueSample", "EntityTable", "EvalReport",
    "GlmpError", "GlobalPointer", "GraphError", "GruWeights", "HopTrace",
    "MemoryStore", "Model", "NullCopyError", "ParamStore", "ParseError",
    "RunConfig", "ShapeError", "Tensor", "TrainingError", "Triplet",
    "Vocabulary", "VocabError", "adam_step", "apply_global_filter",
    "build_memory", "build_vocab", "corpus_bleu", "entity_f1", "evaluate",
    "global_pointer", "gru_cell", "load_checkpoint", "local_pointer_query",
    "multi_hop_read", "no_grad", "parse_babi", "parse_smd",
    "per_response_accuracy", "save_checkpoint", "train",
]
