"""Check analytic gradients of the joint loss against finite differences.

A small model is built over one hand-written dialogue sample; a handful of
parameter entries are nudged by +/-h and the centered difference is compared
to what backward() accumulated. Prints a table of worst offenders per tensor.
"""

import argparse

import numpy as np

from glmp.config import RunConfig
from glmp.data import EntityTable, build_vocab, make_sample
from glmp.memory import Triplet
from glmp.model import Model


def build_toy():
    table = EntityTable.from_values({
        "poi": ["valero", "starbucks"],
        "distance": ["4 miles", "3 miles"],
        "address": ["200 alester ave"],
    })
    kb = [Triplet("valero", "distance", "4_miles"),
          Triplet("valero", "address", "200_alester_ave"),
          Triplet("starbucks", "distance", "3_miles")]
    history = [Triplet("$user", "turn1", t)
               for t in ["how", "far", "is", "valero"]]
    history += [Triplet("$system", "turn1", t)
                for t in ["valero", "is", "4_miles", "away"]]
    history += [Triplet("$user", "turn2", t) for t in ["whats", "the", "address"]]
    gold = ["valero", "is", "at", "200_alester_ave"]
    return make_sample("demo-0", 2, "navigation", kb, history, gold, table), table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hidden", type=int, default=8)
    ap.add_argument("--hops", type=int, default=2)
    ap.add_argument("--step", type=float, default=1e-5)
    ap.add_argument("--per-tensor", type=int, default=4,
                    help="entries sampled from each parameter tensor")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sample, table = build_toy()
    cfg = RunConfig(task="babi:1", hops=args.hops, hidden=args.hidden,
                    dropout=0.0, mask_ratio=0.0, seed=args.seed)
    vocab = build_vocab([sample], table, 1)
    model = Model(cfg, vocab)

    def loss():
        return model.joint_loss(sample, training=True).total

    base = loss()
    base.backward()
    print(f"joint loss on the toy sample: {float(base.data):.6f}")
    print(f"{'tensor':<14} {'entry':>6} {'analytic':>14} {'numeric':>14} {'rel err':>10}")

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for name, p in model.store.params.items():
        flat = p.data.reshape(-1)
        gflat = p.grad.reshape(-1)
        picks = rng.choice(flat.size, size=min(args.per_tensor, flat.size),
                           replace=False)
        for i in picks:
            keep = flat[i]
            flat[i] = keep + args.step
            up = float(loss().data)
            flat[i] = keep - args.step
            down = float(loss().data)
            flat[i] = keep
            fd = (up - down) / (2 * args.step)
            err = abs(gflat[i] - fd) / max(1.0, abs(gflat[i]), abs(fd))
            worst = max(worst, err)
            print(f"{name:<14} {i:>6} {gflat[i]:>14.8f} {fd:>14.8f} {err:>10.2e}")
    print(f"\nworst relative error: {worst:.2e}")


if __name__ == "__main__":
    main()
