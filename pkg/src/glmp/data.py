"""Corpus loading: dialogue files to triplet-form training samples.

Both corpora reduce to the same sample shape: a KB triplet list, a running
dialogue-history triplet list ($speaker, turnK, token), the gold response,
its sketch form, and precomputed pointer labels. Multi-word entity values
are joined with underscores so one memory position holds one entity.
"""

import dataclasses
import json
import re
from collections import Counter
from dataclasses import dataclass, field

from .decoder import make_global_label, make_local_labels, make_sketch_labels
from .errors import ParseError
from .memory import Triplet
from .vocab import EOS_TOKEN, UNK_TOKEN, Vocabulary

CACHE_FORMAT = "glmp-samples"
CACHE_VERSION = 1

BABI_TASK_NAMES = {1: "API-calls", 2: "API-refine", 3: "options",
                   4: "phone-address", 5: "full-dialogs"}
BABI_SPLIT_SUFFIX = {"train": "trn", "dev": "dev", "test": "tst", "test-oov": "tst-OOV"}
SMD_SPLIT_FILES = {"train": "kvret_train_public.json", "dev": "kvret_dev_public.json",
                   "test": "kvret_test_public.json"}

_PUNCT_DETACH = re.compile(r"([,!?;:\"()])")


def tokenize(text):
    """Lowercase split with detached punctuation; keeps <tags> and under_scores."""
    text = _PUNCT_DETACH.sub(r" \1 ", text.lower())
    toks = []
    for w in text.split():
        if len(w) > 1 and w.endswith("."):
            toks.extend((w[:-1], "."))
        else:
            toks.append(w)
    return toks


def canonical(text):
    """Single-token form of an entity value: lowercased, spaces to underscores."""
    return "_".join(str(text).lower().split())


class EntityTable:
    """Entity value -> slot type map driving sketch tags and entity joining."""

    def __init__(self, mapping=None):
        self._slot = dict(mapping or {})  # canonical value -> slot type
        self._rebuild()

    def _rebuild(self):
        spaced = [(v.replace("_", " "), v) for v in self._slot if "_" in v]
        # longest first so "palo alto cafe" wins over "palo alto"
        spaced.sort(key=lambda p: (-len(p[0]), p[0]))
        self._spaced = [(re.compile(r"\b" + re.escape(s) + r"\b"), c) for s, c in spaced]

    def __len__(self):
        return len(self._slot)

    def __contains__(self, token):
        return token in self._slot

    def slot_of(self, token):
        return self._slot.get(token)

    @staticmethod
    def sketch_tag(slot):
        return "@" + slot

    def tags(self):
        return sorted({self.sketch_tag(s) for s in self._slot.values()})

    def slot_types(self):
        return sorted(set(self._slot.values()))

    def join(self, text):
        """Rewrite multi-word entity mentions in `text` to their canonical token."""
        text = text.lower()
        for pattern, canon in self._spaced:
            text = pattern.sub(canon, text)
        return text

    def add(self, value, slot):
        self._slot[canonical(value)] = slot.lower()

    def merge(self, other):
        merged = dict(other._slot)
        merged.update(self._slot)  # self wins on conflicts
        return EntityTable(merged)

    @classmethod
    def from_values(cls, slot_to_values):
        t = cls()
        for slot, values in slot_to_values.items():
            for v in values:
                if isinstance(v, dict):
                    for sub in v.values():
                        t.add(str(sub), slot)
                else:
                    t.add(str(v), slot)
        t._rebuild()
        return t

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_values(json.load(f))

    @classmethod
    def from_babi_kb(cls, path):
        """Derive slot types from a KB facts file: object tagged by relation."""
        t = cls()
        with open(path, encoding="utf-8") as f:
            for line_no, raw in enumerate(f, 1):
                line = raw.strip()
                if not line:
                    continue
                parts = line.split(" ")
                if len(parts) != 4:
                    raise ParseError("knowledge line must be 'idx subj rel obj'",
                                     path=path, line_no=line_no)
                _, subj, rel, obj = parts
                t.add(obj, rel.lower())
                t.add(subj, "r_name")
        t._rebuild()
        return t


@dataclass
class DialogueSample:
    """One system turn to predict, with everything the model needs frozen in."""
    dialogue_id: str
    turn: int
    domain: str
    kb: list                      # list[Triplet], canonical strings
    history: list                 # list[Triplet] ($user/$system, turnK, token)
    gold: list                    # gold response tokens
    sketch: list                  # gold with entities replaced by @slot tags
    gold_entities: list = field(default_factory=list)
    global_label: list = field(default_factory=list)   # 0/1 per real memory slot
    local_labels: list = field(default_factory=list)   # copy position per step

    @property
    def history_tokens(self):
        return [t.object for t in self.history]

    @property
    def objects(self):
        return [t.object for t in self.kb] + self.history_tokens

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["kb"] = [list(t) for t in self.kb]
        d["history"] = [list(t) for t in self.history]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["kb"] = [Triplet(*t) for t in d["kb"]]
        d["history"] = [Triplet(*t) for t in d["history"]]
        return cls(**d)


def make_sample(dialogue_id, turn, domain, kb, history, gold, table) -> DialogueSample:
    """Freeze one training sample; pointer labels are computed on the spot."""
    objects = [t.object for t in kb] + [t.object for t in history]
    return DialogueSample(
        dialogue_id=str(dialogue_id), turn=turn, domain=domain,
        kb=list(kb), history=list(history), gold=list(gold),
        sketch=make_sketch_labels(gold, table),
        gold_entities=sorted({t for t in gold if table.slot_of(t) is not None}),
        global_label=list(make_global_label(gold, objects)),
        local_labels=make_local_labels(list(gold) + [EOS_TOKEN], objects),
    )


def parse_babi(path, table: EntityTable, domain="babi") -> list:
    """Numbered-line dialogue files: exchanges are tab-split, KB facts are not."""
    samples = []
    kb, history = [], []
    dlg_idx, turn = 0, 0

    def reset():
        nonlocal turn
        kb.clear()
        history.clear()
        turn = 0

    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.rstrip("\n").strip()
            if not line:
                if history or kb:
                    dlg_idx += 1
                    reset()
                continue
            head, _, rest = line.partition(" ")
            if not head.isdigit():
                raise ParseError(f"expected a line index, got {head!r}",
                                 path=path, line_no=line_no)
            if not rest:
                raise ParseError("line has an index but no content",
                                 path=path, line_no=line_no)
            if int(head) == 1 and (history or kb):
                dlg_idx += 1
                reset()
            if "\t" in rest:
                user, _, system = rest.partition("\t")
                turn += 1
                tag = f"turn{turn}"
                for tok in tokenize(table.join(user)):
                    history.append(Triplet("$user", tag, tok))
                system = system.strip()
                if system:
                    gold = tokenize(table.join(system))
                    samples.append(make_sample(dlg_idx, turn, domain,
                                               kb, history, gold, table))
                    for tok in gold:
                        history.append(Triplet("$system", tag, tok))
            else:
                parts = rest.split(" ")
                if len(parts) != 3:
                    raise ParseError(
                        f"knowledge line must have 3 fields, got {len(parts)}",
                        path=path, line_no=line_no)
                kb.append(Triplet(*(p.lower() for p in parts)))
    return samples


def _cell_token(value, table):
    return canonical(table.join(str(value).lower()))


def parse_smd(path, table: EntityTable) -> list:
    """kvret-schema JSON: scenarios with a column-table KB and driver/assistant turns."""
    with open(path, encoding="utf-8") as f:
        try:
            dialogues = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", path=path) from e
    if not isinstance(dialogues, list):
        raise ParseError("top level must be a list of dialogues", path=path)
    samples = []
    for di, dlg in enumerate(dialogues):
        scenario = dlg.get("scenario")
        if not scenario or "kb" not in scenario or scenario["kb"] is None:
            raise ParseError(f"dialogue {di}: missing kb section", path=path)
        intent = (scenario.get("task") or {}).get("intent", "unknown")
        domain = {"navigate": "navigation"}.get(intent, intent)
        uuid = (scenario.get("uuid") or f"{di}")
        columns = scenario["kb"].get("column_names") or []
        kb = []
        for item in scenario["kb"].get("items") or []:
            if not columns:
                raise ParseError(f"dialogue {di}: kb items without column_names", path=path)
            subj_raw = item.get(columns[0])
            if subj_raw in (None, "", "-"):
                continue
            subj = _cell_token(subj_raw, table)
            for col in columns[1:]:
                val = item.get(col)
                if val in (None, "", "-"):
                    continue
                kb.append(Triplet(subj, col.lower(), _cell_token(val, table)))
        history, turn = [], 0
        for ti, t in enumerate(dlg.get("dialogue") or []):
            speaker = t.get("turn")
            utt = (t.get("data") or {}).get("utterance") or ""
            toks = tokenize(table.join(utt))
            if speaker == "driver":
                turn += 1
                tag = f"turn{turn}"
                for tok in toks:
                    history.append(Triplet("$user", tag, tok))
            elif speaker == "assistant":
                if not history:
                    continue  # dialogue opened by the assistant: nothing to condition on
                if toks:
                    samples.append(make_sample(uuid, max(turn, 1), domain,
                                               kb, history, toks, table))
                tag = f"turn{max(turn, 1)}"
                for tok in toks:
                    history.append(Triplet("$system", tag, tok))
            else:
                raise ParseError(f"dialogue {di} turn {ti}: unknown speaker {speaker!r}",
                                 path=path)
    return samples


def build_vocab(samples, table: EntityTable, min_count=1) -> Vocabulary:
    counts = Counter()
    for s in samples:
        for trip in list(s.kb) + list(s.history):
            counts.update(trip)
        counts.update(s.gold)
        counts.update(tok for tok in s.sketch if not tok.startswith("@"))
    tags = set(table.tags())
    tags.update(tok for s in samples for tok in s.sketch if tok.startswith("@"))
    return Vocabulary.build(counts, sketch_tags=tags, min_count=min_count)


def mask_tokens(sample: DialogueSample, ratio, rng) -> DialogueSample:
    """Randomly hide content tokens behind <unk>; labels keep pre-mask targets."""
    if ratio <= 0.0:
        return sample
    def hide(trips):
        return [Triplet(t.subject, t.relation,
                        UNK_TOKEN if rng.random() < ratio else t.object)
                for t in trips]
    return dataclasses.replace(sample, kb=hide(sample.kb), history=hide(sample.history))


def save_samples(path, samples):
    with open(path, "w", encoding="utf-8") as f:
        header = {"format": CACHE_FORMAT, "version": CACHE_VERSION, "count": len(samples)}
        f.write(json.dumps(header) + "\n")
        for s in samples:
            f.write(json.dumps(s.to_dict()) + "\n")


def load_samples(path):
    with open(path, encoding="utf-8") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad cache header: {e}", path=path, line_no=1) from e
        if header.get("format") != CACHE_FORMAT:
            raise ParseError("not a sample cache file", path=path, line_no=1)
        if header.get("version") != CACHE_VERSION:
            raise ParseError(
                f"cache version {header.get('version')} != supported {CACHE_VERSION}",
                path=path, line_no=1)
        samples = [DialogueSample.from_dict(json.loads(line)) for line in f if line.strip()]
    if header.get("count") not in (None, len(samples)):
        raise ParseError(f"cache holds {len(samples)} samples, header says {header['count']}",
                         path=path)
    return samples


def limit_dialogues(samples, n):
    """Keep only the samples of the first n distinct dialogues, in order."""
    if n is None or n <= 0:
        return samples
    seen = []
    kept = []
    for s in samples:
        if s.dialogue_id not in seen:
            if len(seen) == n:
                continue
            seen.append(s.dialogue_id)
        if s.dialogue_id in seen:
            kept.append(s)
    return kept


def babi_path(data_dir, task, split):
    name = BABI_TASK_NAMES.get(task)
    if name is None:
        raise ValueError(f"unknown bAbI task {task}")
    return f"{data_dir}/dialog-babi-task{task}-{name}-{BABI_SPLIT_SUFFIX[split]}.txt"


def load_task(config):
    """All splits for config.task plus the entity table: (dict, EntityTable)."""
    import os
    if config.task == "smd":
        table = EntityTable.from_json(os.path.join(config.data_dir, "kvret_entities.json"))
        splits = {name: parse_smd(os.path.join(config.data_dir, fn), table)
                  for name, fn in SMD_SPLIT_FILES.items()}
        return splits, table
    task = config.babi_task
    ent_path = os.path.join(config.data_dir, "entities.json")
    kb_path = os.path.join(config.data_dir, "dialog-babi-kb-all.txt")
    if os.path.exists(ent_path):
        table = EntityTable.from_json(ent_path)
    elif os.path.exists(kb_path):
        table = EntityTable.from_babi_kb(kb_path)
    else:
        raise ParseError(f"no entities.json or dialog-babi-kb-all.txt in {config.data_dir}",
                         path=config.data_dir)
    splits = {}
    for split in BABI_SPLIT_SUFFIX:
        path = babi_path(config.data_dir, task, split)
        if os.path.exists(path):
            splits[split] = parse_babi(path, table, domain=config.task)
        elif split != "test-oov":
            raise ParseError(f"missing split file {path}", path=path)
    return splits, table
