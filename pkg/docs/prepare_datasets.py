"""Build the CSV datasets used by the testbeds.

Both datasets are taken from wheels published on PyPI, so only a package
index is needed:

* Letter Recognition (20,000 x 16, 26 classes) from ``keel-ds``
  (``keel_ds/data/balanced/raw/letter.dat``).
* MNIST (70,000 x 784, 10 classes) from ``mnist-hub``
  (``mnist/data/mnist.pkl.gz``, the 50k/10k/10k pickle; pixels are stored
  as k/256 and are converted back to integers 0..255).

Usage::

    python docs/prepare_datasets.py [--out data]

Writes ``letter.csv.gz`` and ``mnist.csv.gz`` with a header row and the
label in the last column.
"""

import argparse
import gzip
import io
import pickle
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import numpy as np

SOURCES = {
    "keel-ds": "keel_ds-*.whl",
    "mnist-hub": "mnist_hub-*.whl",
}


def fetch(tmp: Path, package: str) -> Path:
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", str(tmp), package],
                   check=True)
    return next(tmp.glob(SOURCES[package]))


def write_csv(path: Path, header, rows) -> None:
    with gzip.open(path, "wt", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def letter(tmp: Path, out: Path) -> None:
    with zipfile.ZipFile(fetch(tmp, "keel-ds")) as z:
        text = z.read("keel_ds/data/balanced/raw/letter.dat").decode()
    rows = [line.split(",") for line in text.splitlines() if line and not line.startswith("@")]
    rows = [[v.strip() for v in r] for r in rows]
    write_csv(out / "letter.csv.gz", [f"f{i}" for i in range(16)] + ["letter"], rows)
    print(f"letter: {len(rows)} rows")


def mnist(tmp: Path, out: Path) -> None:
    with zipfile.ZipFile(fetch(tmp, "mnist-hub")) as z:
        raw = z.read("mnist/data/mnist.pkl.gz")
    parts = pickle.load(gzip.open(io.BytesIO(raw)), encoding="latin1")
    x = np.vstack([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    pixels = np.rint(x * 256).astype(np.int64)
    assert np.allclose(pixels / 256, x) and pixels.max() <= 255
    header = [f"p{i}" for i in range(pixels.shape[1])] + ["digit"]
    rows = ([str(v) for v in row] + [str(lab)] for row, lab in zip(pixels, y))
    write_csv(out / "mnist.csv.gz", header, rows)
    print(f"mnist: {len(y)} rows")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        letter(Path(tmp), out)
        mnist(Path(tmp), out)


if __name__ == "__main__":
    main()
