"""Regenerate tests/fixtures/corpus: a small GT manifest, two detectors and a merge plan.

    python3 scripts/make_fixture_corpus.py [--out tests/fixtures/corpus] [--seed 7]

The corpus is committed; rerunning with the default seed reproduces it byte for byte.
"""

import argparse
import random
from pathlib import Path

from lttext.annotations import DatasetManifest, ImageAnnotation, Script, Split, TextInstance
from lttext.formats import write_canonical, write_detections
from lttext.synth import random_corpus, random_scene

PLAN = """\
name = "corpus"
require_at_least_one_instance = true

[[dataset]]
name = "KeepA"
policy = "keep"
train = "keep_a_train.json"
test = "keep_a_test.json"

[[dataset]]
name = "RatioB"
policy = "ratio"
train_fraction = 0.8
manifest = "ratio_b.json"

[[dataset]]
name = "MixedC"
policy = "english_ratio"
train_fraction = 0.8
manifest = "mixed_c.json"
"""


def scene_manifest(rng: random.Random, name: str, n: int, split: Split, latin_share: float = 1.0,
                   prefix: str = "img") -> DatasetManifest:
    images = []
    for k in range(n):
        im, _ = random_scene(rng, f"{prefix}_{k:04d}")
        script = Script.LATIN if rng.random() < latin_share else Script.NON_LATIN
        insts = tuple(TextInstance(t.polygon, t.care, t.transcription, t.categories, script=script)
                      for t in im.instances)
        images.append(ImageAnnotation(im.image_id, im.file_name, im.width, im.height, name, insts))
    return DatasetManifest(name, tuple(images), split)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/fixtures/corpus")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    gt, dets = random_corpus(args.seed, n_images=60, n_detectors=2)
    (out / "gt.json").write_bytes(write_canonical(gt))
    for k, d in enumerate(dets):
        (out / f"det{k}.json").write_bytes(write_detections(d))

    rng = random.Random(args.seed + 1)
    files = {
        "keep_a_train.json": scene_manifest(rng, "KeepA", 30, Split.TRAIN, prefix="tr"),
        "keep_a_test.json": scene_manifest(rng, "KeepA", 10, Split.TEST, prefix="te"),
        "ratio_b.json": scene_manifest(rng, "RatioB", 47, Split.UNSPLIT),
        "mixed_c.json": scene_manifest(rng, "MixedC", 33, Split.UNSPLIT, latin_share=0.6),
    }
    for name, m in files.items():
        (out / name).write_bytes(write_canonical(m))
    (out / "plan.toml").write_text(PLAN, encoding="utf-8")
    print(f"wrote {len(files) + 4} files to {out}")


if __name__ == "__main__":
    main()
