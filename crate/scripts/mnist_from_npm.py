#!/usr/bin/env python3
"""Convert the digits shipped in the npm `mnist` package to IDX files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/src/digits out/

Writes out/images-idx3-ubyte and out/labels-idx1-ubyte. Digits are
interleaved (0,1,...,9,0,1,...) so any prefix is close to class-balanced.
"""

import json
import struct
import sys
from pathlib import Path


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    per_digit = []
    for d in range(10):
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        assert len(flat) % 784 == 0
        per_digit.append([flat[i : i + 784] for i in range(0, len(flat), 784)])
    images, labels = [], []
    for i in range(max(map(len, per_digit))):
        for d in range(10):
            if i < len(per_digit[d]):
                images.append(bytes(min(255, round(v * 255)) for v in per_digit[d][i]))
                labels.append(d)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.writelines(images)
    with open(out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))
    print(f"{len(images)} images -> {out}")


if __name__ == "__main__":
    main()
