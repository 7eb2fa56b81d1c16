#!/usr/bin/env python3
"""Independent reference for the hash-v1 embedder and the mock surface.

Computes the values frozen into the C++ tests. It shares no code with the
library: tokenizer, FNV-1a, normalisation and cosine are re-derived here.
"""
import json
import math
import pathlib
import re
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
DIM = 256


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def tokens(text: str):
    return [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]


def embed(text: str):
    v = [0.0] * DIM
    for t in tokens(text):
        v[fnv1a64(t.encode()) % DIM] += 1.0
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v] if n > 0 else v


def similarity(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return max(0.0, sum(x * y for x, y in zip(a, b)) / (na * nb))


def bucket(word):
    return fnv1a64(word.encode()) % DIM


def card_text(scale, task, labels, input_type):
    parts = []
    if scale is not None:
        parts.append(str(scale))
    if task:
        parts.append(task)
    if isinstance(labels, list):
        parts.extend(sorted(labels))
    else:
        parts.append(labels)
    parts.append(input_type)
    return " ".join(parts)


def card_file_text(path):
    c = json.loads(pathlib.Path(path).read_text())
    labels = c["label_space"]
    if isinstance(labels, list):
        labels = [" ".join(x.split()).lower() for x in labels]
    return card_text(c.get("scale"), c["task_description"], labels, c["input_type"])


def model_file_text(path):
    m = json.loads(pathlib.Path(path).read_text())
    return m["description"] + " " + m["structure"]


def fixture_report(root):
    cards = pathlib.Path(root) / "cards"
    new, a, b = (embed(card_file_text(cards / f)) for f in ("new.json", "dataset_a.json", "dataset_b.json"))
    print("sim(New, A) =", repr(similarity(new, a)))
    print("sim(New, B) =", repr(similarity(new, b)))
    print("sim(A, B) =", repr(similarity(a, b)))
    for data in ("coco.json", "nq.json"):
        d = embed(card_file_text(cards / data))
        for model in ("detector.json", "dpr.json"):
            print(f"assign score {data} vs {model} =", repr(similarity(d, embed(model_file_text(cards / model)))))


def main():
    if len(sys.argv) > 2 and sys.argv[1] == "--fixtures":
        fixture_report(sys.argv[2])
        return

    print("fnv1a64('') =", hex(fnv1a64(b"")))
    print("fnv1a64('a') =", hex(fnv1a64(b"a")))
    for w in ["dog", "cat", "image"]:
        print(f"bucket({w!r}) = {bucket(w)}  fnv={fnv1a64(w.encode())}")
    print("sim('dog cat','cat') =", repr(similarity(embed("dog cat"), embed("cat"))))
    print("card_text pets =", repr(card_text(5000, "classify pets", ["dog", "cat"], "image")))

    # Mock surface optimum class per dataset name.
    for name in sys.argv[1:]:
        h = fnv1a64(name.encode())
        print(f"lr* class {name!r}: mod3={h % 3} lr*=1e-{3 + h % 3}")


if __name__ == "__main__":
    main()
