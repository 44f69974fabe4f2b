"""Command line front end: make-data, train, eval, decode, dump-attention, ablate."""

import argparse
import json
import logging
import os
import sys

from .config import RunConfig, paper_defaults
from .data import limit_dialogues, load_task
from .model import Model
from .trace import write_attention_tsv
from .training import dev_metric, evaluate, train

log = logging.getLogger("glmp")


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--task", help="babi:<n> or smd")
    p.add_argument("--data-dir")
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--hops", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--mask-ratio", dest="mask_ratio", type=float)
    p.add_argument("--max-decode-len", dest="max_decode_len", type=int)
    p.add_argument("--stop-at-dev", dest="stop_at_dev", type=float)
    p.add_argument("--tie-hops", dest="tie_hop_matrices", action="store_const", const=True)
    p.add_argument("--no-global-filter", dest="no_global_filter",
                   action="store_const", const=True)
    p.add_argument("--no-hidden-write", dest="no_hidden_write",
                   action="store_const", const=True)


def _build_config(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if args.config else {}
    explicit = set(base)
    for f in ("task", "data_dir", "out_dir", "hops", "hidden", "dropout", "lr",
              "seed", "batch", "max_epochs", "patience", "mask_ratio",
              "max_decode_len", "stop_at_dev", "tie_hop_matrices",
              "no_global_filter", "no_hidden_write"):
        v = getattr(args, f, None)
        if v is not None:
            base[f] = v
            explicit.add(f)
    tuned = paper_defaults(base.get("task", "babi:1"), base.get("hops", 1)) or {}
    for f, v in tuned.items():
        if f not in explicit:
            base[f] = v
    return RunConfig.from_dict(base)


def _load_limited(config, args):
    splits, table = load_task(config)
    train_n = getattr(args, "train_dialogues", None)
    dev_n = getattr(args, "dev_dialogues", None)
    splits["train"] = limit_dialogues(splits["train"], train_n)
    splits["dev"] = limit_dialogues(splits["dev"], dev_n)
    return splits, table


def cmd_make_data(args):
    from . import synth
    if args.task == "smd":
        counts = {}
        if args.dialogues:
            counts = {"n_train": args.dialogues,
                      "n_dev": max(args.dialogues // 8, 1),
                      "n_test": max(args.dialogues // 8, 1)}
        paths = synth.write_smd(args.out, seed=args.seed, **counts)
    elif args.task.startswith("babi:"):
        task = int(args.task.split(":")[1])
        if task != 1:
            raise SystemExit("only babi:1 generation is supported")
        counts = {}
        if args.dialogues:
            counts = {k: args.dialogues for k in ("n_train", "n_dev", "n_test", "n_oov")}
        paths = synth.write_babi_task1(args.out, seed=args.seed, **counts)
    else:
        raise SystemExit(f"unknown task {args.task!r}")
    for k, v in paths.items():
        print(f"{k}\t{v}")
    return 0


def cmd_train(args):
    config = _build_config(args)
    splits, table = _load_limited(config, args)
    model, history = train(config, splits["train"], splits["dev"], table)
    report = evaluate(model, splits["dev"], table, split="dev")
    print(report.to_text())
    if "test" in splits and args.eval_test:
        test_report = evaluate(model, splits["test"], table, split="test")
        print(test_report.to_text())
    print(f"checkpoint\t{os.path.join(config.out_dir, 'model.npz')}")
    return 0


def _load_model_and_data(args):
    model = Model.load(args.checkpoint)
    config = model.config
    if args.data_dir:
        config = config.replace(data_dir=args.data_dir)
        model.config = config
    splits, table = load_task(config)
    if args.split not in splits:
        raise SystemExit(f"split {args.split!r} not available; have {sorted(splits)}")
    return model, splits[args.split], table


def cmd_eval(args):
    model, samples, table = _load_model_and_data(args)
    report = evaluate(model, samples, table, split=args.split)
    print(report.to_text())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            f.write(report.to_json() + "\n")
    return 0


def cmd_decode(args):
    model, samples, table = _load_model_and_data(args)
    if args.limit:
        samples = samples[: args.limit]
    for s in samples:
        state = model.decode(s)
        print(f"# dialogue {s.dialogue_id} turn {s.turn}")
        print("gold\t" + " ".join(s.gold))
        print("pred\t" + " ".join(state.tokens))
    return 0


def cmd_dump_attention(args):
    model, samples, table = _load_model_and_data(args)
    if not 0 <= args.sample < len(samples):
        raise SystemExit(f"sample index {args.sample} outside 0..{len(samples) - 1}")
    tokens = write_attention_tsv(args.out, model, samples[args.sample])
    print(f"wrote {args.out}")
    print("pred\t" + " ".join(tokens))
    return 0


def cmd_ablate(args):
    config = _build_config(args)
    splits, table = _load_limited(config, args)
    flag = {"no-G": "no_global_filter", "no-H": "no_hidden_write"}[args.flag]
    reports = {}
    for name, ablated in (("full", False), (args.flag, True)):
        run_cfg = config.replace(out_dir=os.path.join(config.out_dir, name),
                                 **{flag: ablated} if ablated else {})
        model, _ = train(run_cfg, splits["train"], splits["dev"], table)
        reports[name] = evaluate(model, splits["test"], table, split="test")
        print(f"== {name} ==")
        print(reports[name].to_text())
    full, cut = reports["full"], reports[args.flag]
    metric = "entity_f1" if config.task == "smd" else "per_response_accuracy"
    delta = getattr(full, metric) - getattr(cut, metric)
    print(f"delta_{metric}\t{delta:.6f}")
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    p = argparse.ArgumentParser(
        prog="glmp",
        description="Memory-pointer dialogue model: data, training, evaluation.")
    sub = p.add_subparsers(dest="cmd", required=True)

    mk = sub.add_parser("make-data", help="write a synthetic corpus")
    mk.add_argument("--task", required=True)
    mk.add_argument("--out", required=True)
    mk.add_argument("--seed", type=int, default=13)
    mk.add_argument("--dialogues", type=int, help="override the split sizes")
    mk.set_defaults(fn=cmd_make_data)

    tr = sub.add_parser("train", help="train a model")
    _add_config_flags(tr)
    tr.add_argument("--train-dialogues", type=int, help="cap training dialogues")
    tr.add_argument("--dev-dialogues", type=int, help="cap dev dialogues")
    tr.add_argument("--eval-test", action="store_true", help="also score the test split")
    tr.set_defaults(fn=cmd_train)

    ev = sub.add_parser("eval", help="score a checkpoint on a split")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data-dir")
    ev.add_argument("--split", default="test")
    ev.add_argument("--json", help="also write the report as JSON")
    ev.set_defaults(fn=cmd_eval)

    de = sub.add_parser("decode", help="print gold vs predicted responses")
    de.add_argument("--checkpoint", required=True)
    de.add_argument("--data-dir")
    de.add_argument("--split", default="test")
    de.add_argument("--limit", type=int, default=10)
    de.set_defaults(fn=cmd_decode)

    da = sub.add_parser("dump-attention", help="write per-step attention as TSV")
    da.add_argument("--checkpoint", required=True)
    da.add_argument("--data-dir")
    da.add_argument("--split", default="test")
    da.add_argument("--sample", type=int, default=0)
    da.add_argument("--out", required=True)
    da.set_defaults(fn=cmd_dump_attention)

    ab = sub.add_parser("ablate", help="train full vs ablated on the same data")
    _add_config_flags(ab)
    ab.add_argument("--flag", choices=["no-G", "no-H"], required=True)
    ab.add_argument("--train-dialogues", type=int)
    ab.add_argument("--dev-dialogues", type=int)
    ab.set_defaults(fn=cmd_ablate)

    args = p.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
