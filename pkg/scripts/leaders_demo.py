"""Run FindNC on the 25-node leaders graph and print the verdicts."""

import argparse
from pathlib import Path

from kgnotable import LoadOptions, RunConfig, WalkConfig, find_notable, load_tsv, resolve_query

GRAPH = Path(__file__).resolve().parents[1] / "tests" / "data" / "leaders.tsv"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--walks", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = load_tsv(GRAPH, LoadOptions(type_predicate="type"))
    q, _ = resolve_query(g, ["Angela Merkel", "Barack Obama"])
    cfg = RunConfig(walk=WalkConfig(num_walk_samples=args.walks, rng_seed=args.seed), k=args.k)
    report = find_notable(g, q, cfg)

    print("context:")
    for name, score in report.context:
        print(f"  {name:<20} {score:.4f}")
    print("\nlabel            delta    kind         Pr_s(inst)  Pr_s(card)")
    for v in report.verdicts:
        print(f"{g.edge_label_name(v.label):<16} {v.delta:<8.4f} {v.kind:<12} "
              f"{v.p_sig_instance:<11.4g} {v.p_sig_cardinality:.4g}")


if __name__ == "__main__":
    main()
