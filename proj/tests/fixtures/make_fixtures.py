#!/usr/bin/env python3
"""Regenerates the committed dataset fixtures.

split_counts_baseline/ and split_counts_augmented/ hold one tiny image per
object with the per-class split counts of the baseline and augmented dataset
tables. eval_golden/ is a three-image scene with hand-scored predictions.
"""
import pathlib
import shutil
import struct
import zlib

HERE = pathlib.Path(__file__).resolve().parent
NAMES = ["commercial", "military"]

BASELINE = {"train": (218, 22), "val": (62, 9), "test": (36, 6)}
AUGMENTED = {"train": (307, 338), "val": (73, 43), "test": (36, 6)}


def png(width, height, rgb):
    def chunk(kind, data):
        body = kind + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body))

    raw = b"".join(b"\x00" + bytes(rgb) * width for _ in range(height))
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) +
            chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def config(root):
    (root / "data.yaml").write_text(
        "# fixture dataset\n"
        "train: train/images\n"
        "val: val/images\n"
        "test: test/images\n"
        f"nc: {len(NAMES)}\n"
        f"names: [{', '.join(NAMES)}]\n")


def counts_tree(name, table):
    root = HERE / name
    shutil.rmtree(root, ignore_errors=True)
    pixel = png(1, 1, (128, 160, 200))
    for split, per_class in table.items():
        (root / split / "images").mkdir(parents=True)
        (root / split / "labels").mkdir(parents=True)
        for cls, count in enumerate(per_class):
            for i in range(count):
                stem = f"{NAMES[cls]}_{i:04d}"
                (root / split / "images" / f"{stem}.png").write_bytes(pixel)
                (root / split / "labels" / f"{stem}.txt").write_text(f"{cls} 0.500000 0.500000 0.500000 0.500000\n")
    config(root)


GOLDEN_GT = {
    "a": ["0 0.25 0.25 0.2 0.2", "1 0.75 0.75 0.2 0.2"],
    "b": ["0 0.5 0.5 0.4 0.4"],
    "c": ["0 0.3 0.7 0.2 0.2", "1 0.7 0.3 0.2 0.2"],
}
GOLDEN_PRED = {
    "a": ["0 0.9 0.25 0.25 0.2 0.2", "0 0.6 0.26 0.25 0.2 0.2", "1 0.7 0.75 0.75 0.2 0.2"],
    "b": ["0 0.8 0.1 0.1 0.1 0.1", "0 0.5 0.5 0.5 0.4 0.4", "1 0.95 0.5 0.5 0.4 0.4"],
    "c": ["0 0.4 0.3 0.7 0.2 0.2"],
}


def golden_tree():
    root = HERE / "eval_golden"
    shutil.rmtree(root, ignore_errors=True)
    for split in ("train", "val"):
        (root / split).mkdir(parents=True)
        (root / split / ".gitkeep").write_text("")
    (root / "test" / "images").mkdir(parents=True)
    (root / "test" / "labels").mkdir(parents=True)
    (root / "preds").mkdir(parents=True)
    image = png(8, 8, (90, 120, 180))
    for stem, lines in GOLDEN_GT.items():
        (root / "test" / "images" / f"{stem}.png").write_bytes(image)
        (root / "test" / "labels" / f"{stem}.txt").write_text("\n".join(lines) + "\n")
        (root / "preds" / f"{stem}.txt").write_text("\n".join(GOLDEN_PRED[stem]) + "\n")
    config(root)


def jpeg_sample():
    from PIL import Image  # only needed for this one file

    root = HERE / "images"
    root.mkdir(exist_ok=True)
    img = Image.new("RGB", (16, 8))
    img.putdata([(x * 16, y * 32, 128) for y in range(8) for x in range(16)])
    img.save(root / "gradient.jpg", quality=95)


if __name__ == "__main__":
    jpeg_sample()
    counts_tree("split_counts_baseline", BASELINE)
    counts_tree("split_counts_augmented", AUGMENTED)
    golden_tree()
