#!/usr/bin/env python3
"""Converts a LINQS-style citation dump (Cora, Citeseer) to gbc input files.

usage: convert_planetoid.py <name.content> <name.cites> <out dir> [--binary]

Input layout: `.content` lines are `<paper id> <word 0/1>... <class label>`,
`.cites` lines are `<cited id> <citing id>`. Citations that name papers
missing from `.content` are dropped (Citeseer has a few).

Writes edges.txt (0-based ids, `%N` header), labels.txt (classes numbered in
sorted order of their names) and features.csv, or features.gbfm with
--binary. No roles file is written; gbc draws the 60/20/20 split itself.
"""

import argparse
import pathlib
import struct
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("content")
    ap.add_argument("cites")
    ap.add_argument("out_dir")
    ap.add_argument("--binary", action="store_true", help="write features.gbfm instead of features.csv")
    args = ap.parse_args()

    ids, rows, names = {}, [], []
    for line in pathlib.Path(args.content).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] in ids:
            sys.exit(f"duplicate paper id {parts[0]}")
        ids[parts[0]] = len(rows)
        rows.append([float(x) for x in parts[1:-1]])
        names.append(parts[-1])
    width = {len(r) for r in rows}
    if len(width) != 1:
        sys.exit(f"ragged feature rows: widths {sorted(width)}")
    classes = {c: i for i, c in enumerate(sorted(set(names)))}

    edges, dropped = set(), 0
    for line in pathlib.Path(args.cites).read_text().splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        if parts[0] not in ids or parts[1] not in ids:
            dropped += 1
            continue
        u, v = ids[parts[0]], ids[parts[1]]
        if u != v:
            edges.add((min(u, v), max(u, v)))

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.txt", "w") as f:
        f.write(f"%N {len(rows)}\n")
        for u, v in sorted(edges):
            f.write(f"{u} {v}\n")
    (out / "labels.txt").write_text("".join(f"{classes[c]}\n" for c in names))
    if args.binary:
        with open(out / "features.gbfm", "wb") as f:
            f.write(b"GBFM")
            f.write(struct.pack("<II", len(rows), width.pop()))
            for r in rows:
                f.write(struct.pack(f"<{len(r)}f", *r))
    else:
        with open(out / "features.csv", "w") as f:
            for r in rows:
                f.write(",".join(f"{x:g}" for x in r) + "\n")

    print(f"{len(rows)} nodes, {len(edges)} edges, {len(classes)} classes, {len(rows[0])} features; "
          f"{dropped} citations to unknown papers dropped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
