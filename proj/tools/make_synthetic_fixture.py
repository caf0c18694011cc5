#!/usr/bin/env python3
"""Writes the small synthetic dataset used by the test suite.

Each category directory holds manifest.json, one level_<id>.npy per feature
level (N x H x W x C float32) and 8-bit PNG masks for defective samples.
Healthy patches are i.i.d. Gaussian around a per-category template; defective
samples carry a shifted rectangle of patches whose image-space footprint is
the ground-truth mask.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE = 32
LEVELS = {4: (8, 8, 4), 6: (4, 4, 6), 7: (2, 2, 8)}


def make_category(root, name, rng, n_train, n_val_healthy, defect_counts, shift):
    out = Path(root) / name
    (out / "masks").mkdir(parents=True, exist_ok=True)
    records = []
    for k in range(n_train):
        records.append(dict(id=f"train_{k:03d}", split="train", label="healthy", defect_type=None, mask=None))
    for k in range(n_val_healthy):
        records.append(dict(id=f"val_good_{k:03d}", split="val", label="healthy", defect_type=None, mask=None))
    for dtype, count in defect_counts.items():
        for k in range(count):
            sid = f"val_{dtype}_{k:03d}"
            records.append(dict(id=sid, split="val", label="defective", defect_type=dtype, mask=f"masks/{sid}.png"))

    n = len(records)
    templates = {lid: rng.normal(size=(h, w, c)) for lid, (h, w, c) in LEVELS.items()}
    tensors = {lid: np.empty((n, h, w, c), dtype=np.float32) for lid, (h, w, c) in LEVELS.items()}
    for idx, rec in enumerate(records):
        box = None
        if rec["label"] == "defective":
            # Rectangle in normalized image coordinates, snapped to the finest grid.
            size = int(rng.integers(2, 4))
            top, left = (int(v) for v in rng.integers(0, 8 - size + 1, size=2))
            box = (top / 8, left / 8, (top + size) / 8, (left + size) / 8)
            mask = np.zeros((IMAGE, IMAGE), dtype=np.uint8)
            mask[int(box[0] * IMAGE):int(box[2] * IMAGE), int(box[1] * IMAGE):int(box[3] * IMAGE)] = 255
            Image.fromarray(mask, mode="L").save(out / rec["mask"])
        for lid, (h, w, c) in LEVELS.items():
            t = templates[lid] + 0.5 * rng.normal(size=(h, w, c))
            if box is not None:
                r0, c0 = int(np.floor(box[0] * h)), int(np.floor(box[1] * w))
                r1, c1 = max(r0 + 1, int(np.ceil(box[2] * h))), max(c0 + 1, int(np.ceil(box[3] * w)))
                t[r0:r1, c0:c1, :] += shift
            tensors[lid][idx] = t
    for lid, arr in tensors.items():
        np.save(out / f"level_{lid}.npy", arr)
    with open(out / "manifest.json", "w") as f:
        json.dump(records, f, indent=1)
        f.write("\n")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--output", default="tests/fixtures/synthetic")
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    make_category(args.output, "widget", rng, 40, 12, {"scratch": 12, "dent": 18}, 1.5)
    make_category(args.output, "gizmo", rng, 30, 8, {"crack": 10, "hole": 6}, 1.2)
    # Too few defectives for a pool of floor(0.2 * 30) = 6 plus one held out.
    make_category(args.output, "sparse", rng, 30, 6, {"chip": 6}, 1.5)


if __name__ == "__main__":
    main()
