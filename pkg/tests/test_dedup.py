import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from lttext.dedup import (
    DedupConfig,
    candidate_pairs,
    dedup_directory,
    dedup_hashes,
    dhash64,
    read_hash_file,
    similarity,
)


def noise_image(seed, size=(64, 48)):
    rng = np.random.default_rng(seed)
    return Image.fromarray(rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8))


def test_threshold_maps_to_three_bits():
    assert DedupConfig().max_distance == 3
    assert similarity(0, 0b111) == pytest.approx(61 / 64)
    assert similarity(0, 0b1111) == 0.9375 < 0.95


def test_identical_images_flagged(tmp_path):
    img = noise_image(1)
    img.save(tmp_path / "a.png")
    img.save(tmp_path / "b.png")
    noise_image(2).save(tmp_path / "c.png")
    res = dedup_directory(tmp_path)
    assert [(a, b) for a, b, _ in res.pairs] == [("a.png", "b.png")]
    assert res.pairs[0][2] == 1.0
    assert res.survivors == ["a.png", "c.png"]
    assert res.removed == {"b.png": "a.png"}


def test_distance_four_is_kept():
    res = dedup_hashes({"x": 0, "y": 0b1111})
    assert res.pairs == [] and res.survivors == ["x", "y"]


def test_distance_three_is_flagged():
    res = dedup_hashes({"x": 0, "y": 0b111})
    assert [(a, b) for a, b, _ in res.pairs] == [("x", "y")]


def test_single_image_has_no_pairs():
    assert dedup_hashes({"only": 123}).pairs == []


def test_resized_copy_is_a_duplicate():
    img = noise_image(3, (128, 96)).resize((32, 24), Image.Resampling.BILINEAR)
    big = img.resize((256, 192), Image.Resampling.BICUBIC)
    assert similarity(dhash64(img), dhash64(big)) > 0.95


def test_undecodable_image_is_skipped(tmp_path):
    noise_image(1).save(tmp_path / "ok.png")
    (tmp_path / "broken.jpg").write_bytes(b"not an image")
    res = dedup_directory(tmp_path)
    assert res.survivors == ["ok.png"]
    assert [d.code for d in res.diagnostics] == ["undecodable_image"]


def test_directory_threads_agree(tmp_path):
    for k in range(6):
        noise_image(k % 3).save(tmp_path / f"{k}.png")
    a = dedup_directory(tmp_path, threads=1)
    b = dedup_directory(tmp_path, threads=4)
    assert a.pairs == b.pairs and a.survivors == b.survivors


def test_hash_file(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("image_id,hash\na,0x00ff\nb,00fe\n")
    assert read_hash_file(p) == {"a": 0xFF, "b": 0xFE}


def test_outputs_render():
    res = dedup_hashes({"a": 0, "b": 1, "c": 2**64 - 1})
    assert res.pairs_csv().splitlines()[0] == "id_a,id_b,similarity"
    assert res.survivors_text() == "a\nc\n"


hashes64 = st.integers(0, 2**64 - 1)


def _clustered(draw_base, flips, rng):
    out = {}
    for k, base in enumerate(draw_base):
        out[f"b{k}"] = base
        for j in range(rng.randint(0, 3)):
            h = base
            for bit in rng.sample(range(64), rng.choice(flips)):
                h ^= 1 << bit
            out[f"b{k}_{j}"] = h
    return out


@given(st.lists(hashes64, min_size=1, max_size=12), st.integers(0, 2**31))
def test_banding_finds_every_close_pair(bases, seed):
    hashes = _clustered(bases, [0, 1, 2, 3, 4, 6], random.Random(seed))
    cands = candidate_pairs(hashes, 3)
    for a, b in combinations(sorted(hashes), 2):
        if similarity(hashes[a], hashes[b]) > 0.95:
            assert (a, b) in cands


@given(st.lists(hashes64, min_size=1, max_size=12), st.integers(0, 2**31))
def test_banded_equals_exact(bases, seed):
    hashes = _clustered(bases, [0, 1, 2, 3, 5], random.Random(seed))
    assert dedup_hashes(hashes) == dedup_hashes(hashes, DedupConfig(exact=True))


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=4), st.integers(0, 255), max_size=10),
       st.integers(0, 2**31))
def test_survivors_independent_of_input_order(hashes, seed):
    items = list(hashes.items())
    random.Random(seed).shuffle(items)
    a, b = dedup_hashes(hashes), dedup_hashes(dict(items))
    assert a.survivors == b.survivors and a.pairs == b.pairs


@given(st.dictionaries(st.text("abc", min_size=1, max_size=3), st.integers(0, 31), max_size=8))
def test_survivor_is_smallest_id_of_its_component(hashes):
    res = dedup_hashes(hashes)
    for removed, survivor in res.removed.items():
        assert survivor < removed and survivor in res.survivors
    assert sorted(res.survivors + list(res.removed)) == sorted(hashes)


def test_invalid_threshold():
    with pytest.raises(ValueError):
        DedupConfig(similarity_threshold=0)
