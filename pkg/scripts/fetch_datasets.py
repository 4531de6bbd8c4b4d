#!/usr/bin/env python3
"""Fetch the benchmark datasets and rewrite them into the canonical local
form (comma-separated, header row, final ``class`` column) under data/.

Two paths:

  --from-sklearn   materialize iris and wine from scikit-learn's bundled
                   copies; offline, deterministic, checksum-pinned.
  --download       download the remaining sets from the UCI repository and
                   canonicalize them (drops id columns, drops rows with
                   missing values where noted). Requires network access.

Every written file is re-loaded through the registry so its (N, d, k,
class sizes) characteristics are verified before it is kept; the sha256 of
the written file is printed so it can be pinned alongside results.

Vowel (the 871-point Indian vowel formant set) and Crude Oil (the classic
56-sample five-feature set) are not hosted in the UCI repository; place
them manually as data/vowel.csv and data/crude_oil.csv in canonical form.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from swarmclust.data import REGISTRY, LoadError, load_csv, registry_spec

UCI_BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases"

# name -> (url, drop_columns, label_column, na_values)
UCI_SOURCES = {
    "cancer": (f"{UCI_BASE}/breast-cancer-wisconsin/breast-cancer-wisconsin.data",
               (0,), -1, ("?",)),
    "cmc": (f"{UCI_BASE}/cmc/cmc.data", (), -1, ()),
    "glass": (f"{UCI_BASE}/glass/glass.data", (0,), -1, ()),
    "iris": (f"{UCI_BASE}/iris/iris.data", (), -1, ()),
    "pima": (f"{UCI_BASE}/pima-indians-diabetes/pima-indians-diabetes.data",
             (), -1, ()),
    "wine": (f"{UCI_BASE}/wine/wine.data", (), 0, ()),
    "zoo": (f"{UCI_BASE}/zoo/zoo.data", (0,), -1, ()),
}

# sha256 of the canonical CSVs this script writes from sklearn's copies
# (scikit-learn's iris fixes two transcription errors in the original
# archive file, so these differ from hashes of archive-derived CSVs).
SKLEARN_CHECKSUMS = {
    "iris": "3f2309a4b4712a43434b2b84cdb9158d5d33e12f3f116ee210a40b8e4c7d6480",
    "wine": "fd258b5c120dc10e7eeaef3927221ba61a4a86a303bae68bb89cfb0c642b60a5",
}


def write_canonical(name: str, rows: list[list[str]], labels: list[str],
                    out_dir: Path) -> Path:
    d = len(rows[0])
    out = out_dir / f"{name}.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"f{i}" for i in range(d)] + ["class"])
    for row, label in zip(rows, labels):
        writer.writerow(row + [label])
    out.write_text(buf.getvalue(), encoding="utf-8")
    return out


def verify(name: str, data_dir: Path) -> None:
    dataset = load_csv(registry_spec(name, data_dir))
    digest = hashlib.sha256((data_dir / f"{name}.csv").read_bytes()).hexdigest()
    print(f"{name}: N={dataset.n} d={dataset.d} classes={dataset.n_classes} "
          f"ok (sha256 {digest})")


def from_sklearn(data_dir: Path) -> None:
    try:
        from sklearn.datasets import load_iris, load_wine
    except ImportError:
        sys.exit("scikit-learn is not installed; use --download instead")
    for name, loader in (("iris", load_iris), ("wine", load_wine)):
        bundle = loader()
        rows = [[repr(float(v)) for v in row] for row in bundle.data]
        labels = [str(int(t)) for t in bundle.target]
        path = write_canonical(name, rows, labels, data_dir)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        if digest != SKLEARN_CHECKSUMS[name]:
            path.unlink()
            sys.exit(f"{name}: checksum mismatch ({digest}), file removed")
        try:
            verify(name, data_dir)
        except LoadError as exc:
            path.unlink()
            sys.exit(f"{name}: verification failed, file removed: {exc}")


def download(names, data_dir: Path) -> None:
    for name in names:
        if name not in UCI_SOURCES:
            print(f"{name}: no automatic source; see module docstring")
            continue
        url, drop, label_col, na_values = UCI_SOURCES[name]
        print(f"{name}: fetching {url}")
        raw = urllib.request.urlopen(url, timeout=60).read().decode("utf-8")
        rows, labels = [], []
        for line in raw.splitlines():
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if any(fields[i % len(fields)] in na_values for i in range(len(fields))):
                continue
            label_idx = label_col % len(fields)
            keep = [f for i, f in enumerate(fields)
                    if i != label_idx and i not in {c % len(fields) for c in drop}]
            rows.append(keep)
            labels.append(fields[label_idx])
        path = write_canonical(name, rows, labels, data_dir)
        try:
            verify(name, data_dir)
        except LoadError as exc:
            path.unlink()
            print(f"{name}: verification failed, file removed: {exc}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default="data", type=Path)
    parser.add_argument("--from-sklearn", action="store_true",
                        help="materialize iris and wine from scikit-learn")
    parser.add_argument("--download", nargs="*", metavar="NAME",
                        help="download named datasets (default: all with sources)")
    args = parser.parse_args()
    args.data_dir.mkdir(parents=True, exist_ok=True)

    if not args.from_sklearn and args.download is None:
        parser.error("choose --from-sklearn and/or --download")
    if args.from_sklearn:
        from_sklearn(args.data_dir)
    if args.download is not None:
        names = args.download or sorted(UCI_SOURCES)
        download(names, args.data_dir)
    missing = [n for n in sorted(REGISTRY) if not (args.data_dir / f"{n}.csv").exists()]
    if missing:
        print(f"still missing: {', '.join(missing)}")


if __name__ == "__main__":
    main()
