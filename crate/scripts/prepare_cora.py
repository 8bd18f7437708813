#!/usr/bin/env python3
"""Convert the LINQS Cora release (cora.cites, cora.content) into the
edge-list and label files read by curvreg.

    python3 scripts/prepare_cora.py path/to/cora data/cora
"""

import argparse
from pathlib import Path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=Path, help="directory holding cora.cites and cora.content")
    parser.add_argument("dest", type=Path, help="output directory")
    args = parser.parse_args()

    labels = {}
    with open(args.source / "cora.content") as f:
        for line in f:
            fields = line.split()
            if fields:
                labels[fields[0]] = fields[-1]

    edges = set()
    with open(args.source / "cora.cites") as f:
        for line in f:
            fields = line.split()
            if len(fields) != 2:
                continue
            a, b = fields
            if a != b and a in labels and b in labels:
                edges.add((min(a, b), max(a, b)))

    args.dest.mkdir(parents=True, exist_ok=True)
    with open(args.dest / "cora.edges", "w") as f:
        f.writelines(f"{a} {b}\n" for a, b in sorted(edges))
    with open(args.dest / "cora.labels", "w") as f:
        f.writelines(f"{node} {label}\n" for node, label in sorted(labels.items()))
    print(f"{len(labels)} nodes, {len(edges)} undirected edges -> {args.dest}")


if __name__ == "__main__":
    main()
