"""Download the pollen dataset and write data/pollen.csv.

The file is converted from the PMLB tab-separated copy into the CSV layout
the ``eann`` loader expects (four features, then the target), and its
SHA-256 is printed so it can be recorded next to the file.
"""

import argparse
import csv
import gzip
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

URL = "https://github.com/EpistasisLab/pmlb/raw/master/datasets/pollen/pollen.tsv.gz"
COLUMNS = ["ridge", "nub", "crack", "weight", "density"]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("-o", "--output", default=str(Path(__file__).parents[1] / "data" / "pollen.csv"))
    p.add_argument("--url", default=URL)
    args = p.parse_args(argv)
    with urllib.request.urlopen(args.url, timeout=60) as resp:
        raw = gzip.decompress(resp.read()).decode()
    rows = list(csv.reader(io.StringIO(raw), delimiter="\t"))
    header, body = [h.lower() for h in rows[0]], rows[1:]
    # PMLB names the response column "target"
    header = ["density" if h == "target" else h for h in header]
    order = [header.index(c) for c in COLUMNS]
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in body:
            w.writerow([r[i] for i in order])
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    print(f"{len(body)} records -> {out}\nsha256 {digest}")
    if len(body) != 3848:
        print(f"warning: expected 3848 records, got {len(body)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
