import json
import random
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lttext.annotations import ChallengeCategory, DatasetManifest, Detection, DetectionSet, ImageAnnotation, TextInstance
from lttext.errors import MissingDiagonal
from lttext.evaluation import (
    HARD,
    NORM,
    EvalConfig,
    EvalMode,
    category_mode,
    eval_all_categories,
    evaluate,
    gap_report,
    match_image,
    mean_f,
    prf,
    relabel_for_mode,
    relabel_manifest,
)
from lttext.formats import load_manifest, parse_detections
from lttext.geometry import Polygon
from lttext.reference import FINETUNE_F, MAEDET_LTB, NINE_SET_ROW_DBNETPP
from lttext.reports import eval_report, pct, row_average
from lttext.synth import counts_fixture, random_corpus, random_scene

from oracles import max_matching_tp

C = ChallengeCategory
B = Polygon.box


def im(*instances, image_id="img"):
    return ImageAnnotation(image_id, image_id + ".jpg", 500, 500, "t", tuple(instances))


# -- relabelling -------------------------------------------------------------

def test_norm_is_identity():
    g = im(TextInstance(B(0, 0, 1, 1)), TextInstance(B(2, 2, 3, 3), care=False))
    assert relabel_for_mode(g, NORM) is g


def test_hard_keeps_only_tagged_care():
    g = im(TextInstance(B(0, 0, 1, 1), categories={C.BLURRED}), TextInstance(B(2, 2, 3, 3)),
           TextInstance(B(4, 4, 5, 5)))
    assert [t.care for t in relabel_for_mode(g, HARD).instances] == [True, False, False]


def test_hard_never_revives_dont_care():
    g = im(TextInstance(B(0, 0, 1, 1), care=False, categories={C.BLURRED}))
    assert [t.care for t in relabel_for_mode(g, HARD).instances] == [False]


def test_category_mode():
    g = im(TextInstance(B(0, 0, 1, 1), categories={C.BLURRED, C.OCCLUDED}),
           TextInstance(B(2, 2, 3, 3), categories={C.BLURRED}))
    out = relabel_for_mode(g, category_mode(C.OCCLUDED))
    assert [t.care for t in out.instances] == [True, False]


@pytest.mark.parametrize("text,expected", [("norm", "norm"), ("HARD", "hard"), ("category:occluded",
                                                                                 "category:occluded")])
def test_mode_parse(text, expected):
    assert str(EvalMode.parse(text)) == expected


def test_mode_parse_rejects_unknown_tag():
    with pytest.raises(ValueError):
        EvalMode.parse("category:blury")


def test_config_thresholds_validated():
    with pytest.raises(ValueError):
        EvalConfig(iou_threshold=0.0)
    with pytest.raises(ValueError):
        EvalConfig(dontcare_overlap_threshold=1.5)


# -- matching examples -------------------------------------------------------

def test_perfect_detector():
    gts = [B(0, 0, 10, 10), B(20, 0, 30, 10), B(40, 0, 50, 10)]
    r = match_image(im(*(TextInstance(g) for g in gts)), gts)
    assert (r.tp, r.fp, r.fn) == (3, 0, 0)


def test_two_gt_one_prediction():
    g = im(TextInstance(B(0, 0, 10, 10)), TextInstance(B(100, 0, 110, 10)))
    pred = B(0, 0, 10, 8)  # IoU 0.8
    r = match_image(g, [pred])
    assert (r.tp, r.fp, r.fn) == (1, 0, 1)
    p, rec, f = prf(r.tp, r.fp, r.fn)
    assert (p, rec) == (1.0, 0.5)
    assert f == pytest.approx(2 / 3)


def test_prediction_inside_dont_care_is_ignored():
    r = match_image(im(TextInstance(B(0, 0, 100, 100), care=False)), [B(10, 10, 20, 20)])
    assert (r.tp, r.fp, r.fn) == (0, 0, 0)
    assert r.ignored == [0]


def test_partial_dont_care_overlap_below_threshold_is_fp():
    r = match_image(im(TextInstance(B(0, 0, 10, 10), care=False)), [B(6, 0, 16, 10)])
    assert (r.tp, r.fp, r.fn) == (0, 1, 0)


def test_each_prediction_matches_once():
    g = im(TextInstance(B(0, 0, 10, 10)), TextInstance(B(0, 0, 10, 10)))
    r = match_image(g, [B(0, 0, 10, 10)])
    assert (r.tp, r.fp, r.fn) == (1, 0, 1)
    assert r.pairs[0][:2] == (0, 0)  # tie broken by gt index


def test_greedy_prefers_higher_iou():
    g = im(TextInstance(B(0, 0, 10, 10)))
    r = match_image(g, [B(0, 0, 10, 7), B(0, 0, 10, 9)])
    assert r.pairs[0][1] == 1 and (r.tp, r.fp) == (1, 1)


def test_iou_exactly_at_threshold_matches():
    r = match_image(im(TextInstance(B(0, 0, 10, 10))), [B(0, 0, 10, 5)])
    assert r.tp == 1


def test_empty_detections():
    gt, _ = counts_fixture(0, 0, 5)
    rep = evaluate(gt, DetectionSet("none", {}))
    assert (rep.precision, rep.recall, rep.f_measure) == (0.0, 0.0, 0.0)
    assert {d.code for d in rep.diagnostics} == {"missing_prediction"}


def test_orphan_predictions_ignored_with_warning():
    gt, det = counts_fixture(2, 0, 0)
    extra = dict(det.per_image)
    extra["ghost"] = (Detection(B(0, 0, 5, 5)),)
    rep = evaluate(gt, DetectionSet("d", extra))
    assert (rep.true_positives, rep.false_positives) == (2, 0)
    assert [d.code for d in rep.diagnostics] == ["orphan_prediction"]


def test_micro_aggregation():
    a = im(TextInstance(B(0, 0, 10, 10)), TextInstance(B(50, 0, 60, 10)), image_id="a")
    b = im(TextInstance(B(0, 0, 10, 10)), image_id="b")
    dets = DetectionSet("d", {"a": (Detection(B(0, 0, 10, 10)),),
                              "b": (Detection(B(0, 0, 10, 10)), Detection(B(200, 200, 210, 210)))})
    rep = evaluate(DatasetManifest("m", (a, b)), dets)
    assert (rep.true_positives, rep.false_positives, rep.false_negatives) == (2, 1, 1)
    assert rep.precision == pytest.approx(2 / 3)
    assert rep.recall == pytest.approx(2 / 3)
    assert rep.f_measure == pytest.approx(2 / 3)


def test_matching_fixture(matching_dir, expected_matching):
    gt = load_manifest(matching_dir / "gt.json")
    det = parse_detections(matching_dir / "det.json")
    rep = evaluate(gt, det, per_image=True)
    assert (rep.true_positives, rep.false_positives, rep.false_negatives) == (4, 1, 1)
    assert {k: list(v) for k, v in rep.per_image.items()} == expected_matching["per_image"]
    assert f"{rep.precision:.3f}" == f"{rep.recall:.3f}" == f"{rep.f_measure:.3f}" == "0.800"


# -- published numbers as arithmetic fixtures --------------------------------

def test_hard_row_formats_as_published():
    gt, det = counts_fixture(457, 543, 543)
    rep = evaluate(gt, det)
    assert pct(rep.f_measure) == MAEDET_LTB["hard"] == "45.7"
    assert "| 45.7 |" in eval_report(rep, "markdown")


def test_norm_row_formats_as_published():
    gt, det = counts_fixture(669, 331, 331)
    assert pct(evaluate(gt, det).f_measure) == MAEDET_LTB["norm"]


def test_average_column_reproduces_published_mean():
    cells, avg = NINE_SET_ROW_DBNETPP
    assert row_average(cells) == avg == "35.0"


def test_dptext_gap():
    g = gap_report({("TT", "TT"): FINETUNE_F["DPText-DETR"][("TT", "TT")],
                    ("TT", "IC15"): FINETUNE_F["DPText-DETR"][("TT", "IC15")]})
    assert g.gap("TT", "IC15") == Decimal("15.1")


def test_abcnet_gap():
    f = FINETUNE_F["ABCNet v2"]
    g = gap_report({k: v for k, v in f.items()})
    assert g.gap("IC15", "TT") == Decimal("10.4")
    assert g.gap("TT", "IC15") == Decimal("9.8")
    assert g.max_gap == Decimal("10.4")


def test_gap_identical_values_is_zero():
    assert gap_report({("A", "A"): 70.0, ("A", "B"): 70.0}).gap("A", "B") == 0


def test_gap_missing_diagonal():
    with pytest.raises(MissingDiagonal):
        gap_report({("A", "B"): 70.0})


def test_mean_of_nothing():
    with pytest.raises(ValueError):
        mean_f([])


def test_pct_rounds_half_up():
    assert pct(0.4565) == "45.7"
    assert pct(None) == "—"


# -- per-category table -------------------------------------------------------

def _tagged_corpus():
    gts = [TextInstance(B(0, 0, 10, 10), categories={C.BLURRED}),
           TextInstance(B(20, 0, 30, 10), categories={C.DENSE, C.BLURRED}),
           TextInstance(B(40, 0, 50, 10))]
    gt = DatasetManifest("m", (im(*gts),))
    return gt, DetectionSet("perfect", {"img": tuple(Detection(t.polygon) for t in gts)})


def test_perfect_detector_all_columns_one():
    gt, det = _tagged_corpus()
    (row,) = eval_all_categories(gt, [det])
    assert row.hard == row.norm == 1.0
    assert row.categories[C.BLURRED] == row.categories[C.DENSE] == 1.0


def test_absent_category_is_vacuous():
    gt, det = _tagged_corpus()
    (row,) = eval_all_categories(gt, [det])
    assert row.categories[C.OCCLUDED] is None
    rep = evaluate(gt, det, per_category=True)
    assert rep.to_dict()["per_category"]["occluded"]["f_measure"] is None


def test_category_predictions_on_other_instances_are_fp():
    gt, _ = _tagged_corpus()
    only_untagged = DetectionSet("d", {"img": (Detection(B(40, 0, 50, 10)),)})
    rep = evaluate(gt, only_untagged, EvalConfig(mode=category_mode(C.DENSE)))
    # the untagged box is don't-care in Dense mode, so its prediction is suppressed
    assert (rep.true_positives, rep.false_positives, rep.false_negatives) == (0, 0, 1)


# -- properties ---------------------------------------------------------------

seeds = st.integers(0, 2**31)


@given(seeds)
def test_counts_consistent(seed):
    rng = random.Random(seed)
    g, preds = random_scene(rng)
    r = match_image(g, preds)
    assert r.tp + r.fp + len(r.ignored) == len(preds)
    assert r.tp + r.fn == sum(t.care for t in g.instances)


@given(seeds)
def test_adding_prediction_never_decreases_tp_plus_fp(seed):
    rng = random.Random(seed)
    g, preds = random_scene(rng)
    before = match_image(g, preds)
    extra = Polygon.box(rng.uniform(0, 300), rng.uniform(0, 200), 350, 260)
    after = match_image(g, preds + [extra])
    assert after.tp + after.fp >= before.tp + before.fp


@given(seeds, st.floats(0.1, 0.9), st.floats(0.0, 0.1))
def test_raising_threshold_never_increases_tp(seed, t, dt):
    g, preds = random_scene(random.Random(seed))
    lo = match_image(g, preds, EvalConfig(iou_threshold=t))
    hi = match_image(g, preds, EvalConfig(iou_threshold=t + dt))
    assert hi.tp <= lo.tp


@given(seeds)
def test_greedy_never_beats_maximum_matching(seed):
    g, preds = random_scene(random.Random(seed))
    assert match_image(g, preds).tp <= max_matching_tp(g, preds)


@given(seeds, st.sampled_from(list(C)))
def test_category_mode_equals_norm_on_relabelled_manifest(seed, cat):
    gt, dets = random_corpus(seed, n_images=6, n_detectors=1)
    mode = category_mode(cat)
    a = evaluate(gt, dets[0], EvalConfig(mode=mode))
    b = evaluate(relabel_manifest(gt, mode), dets[0], EvalConfig(mode=NORM))
    da, db = a.to_dict(), b.to_dict()
    da.pop("mode"), db.pop("mode")
    assert json.dumps(da) == json.dumps(db)


@given(seeds)
def test_thread_count_does_not_change_report(seed):
    gt, dets = random_corpus(seed, n_images=12, n_detectors=1)
    one = evaluate(gt, dets[0], per_category=True, per_image=True, threads=1)
    many = evaluate(gt, dets[0], per_category=True, per_image=True, threads=4)
    assert json.dumps(one.to_dict()) == json.dumps(many.to_dict())


def test_recall_one_means_nothing_left_to_filter():
    from lttext.builder import FilterConfig, filter_undetected

    gt, dets = random_corpus(3, n_images=20, n_detectors=1)
    perfect = DetectionSet("p", {i.image_id: tuple(Detection(t.polygon) for t in i.instances if t.care)
                                 for i in gt.images})
    assert evaluate(gt, perfect).recall == 1.0
    assert not filter_undetected([perfect], gt, FilterConfig(0.5))
