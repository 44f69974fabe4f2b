"""Token/id mapping with reserved symbols and sketch-tag bookkeeping."""

import json
from collections import Counter

from .errors import VocabError

PAD, UNK, SOS, EOS, NULL = 0, 1, 2, 3, 4
RESERVED = ("<pad>", "<unk>", "<sos>", "<eos>", "<null>")
PAD_TOKEN, UNK_TOKEN, SOS_TOKEN, EOS_TOKEN, NULL_TOKEN = RESERVED


class Vocabulary:
    def __init__(self):
        self.token_to_id: dict[str, int] = {}
        self.id_to_token: list[str] = []
        self.sketch_tag_ids: set[int] = set()
        for tok in RESERVED:
            self._add(tok)

    def _add(self, token):
        if token in self.token_to_id:
            return self.token_to_id[token]
        i = len(self.id_to_token)
        self.token_to_id[token] = i
        self.id_to_token.append(token)
        return i

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    @classmethod
    def build(cls, token_counts: Counter, sketch_tags=(), min_count=1):
        """Deterministic ids: reserved block, then sketch tags, then tokens by (-count, token)."""
        v = cls()
        for tag in sorted(sketch_tags):
            if not tag.startswith("@"):
                raise VocabError(f"sketch tag {tag!r} must start with '@'")
            v.sketch_tag_ids.add(v._add(tag))
        ordered = sorted(token_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        for tok, count in ordered:
            if count < min_count or tok in v.token_to_id:
                continue
            v._add(tok)
        return v

    def lookup(self, token):
        """Token id, falling back to <unk> for unseen tokens."""
        return self.token_to_id.get(token, UNK)

    def id(self, token):
        try:
            return self.token_to_id[token]
        except KeyError:
            raise VocabError(f"token {token!r} not in vocabulary") from None

    def surface(self, idx):
        if not 0 <= idx < len(self.id_to_token):
            raise VocabError(f"id {idx} out of range for vocabulary of size {len(self)}")
        return self.id_to_token[idx]

    def encode(self, tokens):
        return [self.lookup(t) for t in tokens]

    def decode(self, ids):
        return [self.surface(i) for i in ids]

    def is_sketch_tag(self, idx):
        return idx in self.sketch_tag_ids

    def to_dict(self):
        return {"tokens": self.id_to_token, "sketch_tag_ids": sorted(self.sketch_tag_ids)}

    @classmethod
    def from_dict(cls, d):
        v = cls.__new__(cls)
        v.id_to_token = list(d["tokens"])
        v.token_to_id = {t: i for i, t in enumerate(v.id_to_token)}
        v.sketch_tag_ids = set(d["sketch_tag_ids"])
        if v.id_to_token[: len(RESERVED)] != list(RESERVED):
            raise VocabError("vocabulary file missing reserved token block")
        return v

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
