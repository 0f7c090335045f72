"""Scoring, normalization, AUC, thresholding, and report emission."""

import numpy as np
import pytest

from faultgan.errors import UsageError
from faultgan.evaluator import (
    EvalReport,
    ScoredSample,
    emit_report,
    evaluate,
    normalize_scores,
    pick_threshold,
    roc_auc,
    score_dataset,
)
from faultgan.features import Standardizer
from faultgan.model import InputPipeline, build_model
from faultgan.signal_io import Subsample


def _scored(pairs):
    return [
        ScoredSample(score=s, l_apparent=s, l_latent=0.0, label=label, source=f"s{i}")
        for i, (label, s) in enumerate(pairs)
    ]


# -- normalize_scores ------------------------------------------------------------


def test_normalize_affine_map():
    assert normalize_scores([2.0, 4.0, 6.0]) == [0.0, 0.5, 1.0]


def test_normalize_degenerate_inputs():
    assert normalize_scores([5.0, 5.0]) == [0.0, 0.0]
    assert normalize_scores([3.0]) == [0.0]
    with pytest.raises(UsageError):
        normalize_scores([])


def test_normalize_preserves_order():
    rng = np.random.default_rng(0)
    for _ in range(20):
        scores = rng.normal(size=12).tolist()
        normed = normalize_scores(scores)
        assert np.array_equal(np.argsort(scores, kind="stable"), np.argsort(normed, kind="stable"))
        assert min(normed) == 0.0 and max(normed) == 1.0


# -- roc_auc ----------------------------------------------------------------------


def test_auc_perfect_separation():
    assert roc_auc(_scored([("normal", 0.1), ("fault", 0.9)])) == 1.0


def test_auc_all_ties():
    scored = _scored([("normal", 0.5), ("normal", 0.5), ("fault", 0.5)])
    assert roc_auc(scored) == 0.5


def test_auc_enumerated_pairs():
    # pairs (fault=2 vs normal=1): win; (fault=2 vs normal=3): loss -> 0.5
    scored = _scored([("normal", 1.0), ("normal", 3.0), ("fault", 2.0)])
    assert roc_auc(scored) == 0.5


def test_auc_single_class_raises():
    with pytest.raises(UsageError):
        roc_auc(_scored([("normal", 1.0)]))
    with pytest.raises(UsageError):
        roc_auc(_scored([("fault", 1.0), ("fault", 2.0)]))


def test_auc_matches_pair_enumeration_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        normals = rng.integers(0, 5, size=8) * 0.25
        faults = rng.integers(0, 5, size=5) * 0.25
        scored = _scored([("normal", float(v)) for v in normals] + [("fault", float(v)) for v in faults])
        wins = sum((f > n) + 0.5 * (f == n) for f in faults for n in normals)
        assert roc_auc(scored) == pytest.approx(wins / (len(faults) * len(normals)))


def test_auc_invariant_under_monotone_transforms():
    rng = np.random.default_rng(2)
    for _ in range(10):
        scored = _scored(
            [("normal", float(v)) for v in rng.normal(size=7)]
            + [("fault", float(v)) for v in rng.normal(loc=0.5, size=6)]
        )
        base = roc_auc(scored)
        for transform in (np.exp, lambda s: 3.0 * s + 11.0):
            mapped = [
                ScoredSample(score=float(transform(s.score)), l_apparent=0, l_latent=0,
                             label=s.label, source=s.source)
                for s in scored
            ]
            assert roc_auc(mapped) == pytest.approx(base)


# -- pick_threshold -----------------------------------------------------------------


def test_threshold_perfect_separation():
    thr, acc = pick_threshold(_scored([("normal", 0.1), ("normal", 0.2), ("fault", 0.8)]))
    assert acc == 1.0
    assert 0.2 < thr < 0.8


def test_threshold_enumerated_example():
    thr, acc = pick_threshold(_scored([("normal", 0.1), ("normal", 0.2), ("fault", 0.15)]))
    assert acc == pytest.approx(2.0 / 3.0)
    assert thr == pytest.approx(0.125)  # ties resolve to the lowest threshold


def test_threshold_majority_bound():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n_n = int(rng.integers(1, 8))
        n_f = int(rng.integers(1, 8))
        scored = _scored(
            [("normal", float(rng.normal())) for _ in range(n_n)]
            + [("fault", float(rng.normal())) for _ in range(n_f)]
        )
        _, acc = pick_threshold(scored)
        assert acc >= max(n_n, n_f) / (n_n + n_f) - 1e-12


def test_threshold_single_class_raises():
    with pytest.raises(UsageError):
        pick_threshold(_scored([("normal", 1.0), ("normal", 2.0)]))


def test_threshold_classification_rule_is_strictly_greater():
    scored = _scored([("normal", 0.5), ("fault", 1.5)])
    thr, acc = pick_threshold(scored)
    assert acc == 1.0
    assert 0.5 <= thr < 1.5


# -- score_dataset -------------------------------------------------------------------


def _tiny_state(length=32):
    pipe = InputPipeline(mode="raw", subsample_len=length, net_len=length,
                         standardizer=Standardizer.identity(1))
    return build_model(pipe, latent_dim=4, base_channels=4, n_down=2, seed=0)


def test_score_dataset_empty():
    assert score_dataset(_tiny_state(), []) == []


def test_score_dataset_duplicates_and_order():
    state = _tiny_state()
    rng = np.random.default_rng(4)
    a = Subsample(values=rng.normal(size=32).astype(np.float32), source_offset=0, label="normal", source="a")
    b = Subsample(values=rng.normal(size=32).astype(np.float32), source_offset=0, label="fault", source="b")
    scored = score_dataset(state, [a, b, a])
    assert [s.label for s in scored] == ["normal", "fault", "normal"]
    assert scored[0].score == scored[2].score
    assert scored[0].l_apparent == scored[2].l_apparent
    assert scored[0].score != scored[1].score


def test_score_decomposition_tight():
    state = _tiny_state()
    rng = np.random.default_rng(5)
    subs = [Subsample(values=rng.normal(size=32).astype(np.float32), source_offset=0, label="normal")
            for _ in range(130)]  # spans several scoring chunks
    for s in score_dataset(state, subs):
        assert abs(s.score - (s.l_apparent + s.l_latent)) <= 1e-6
        assert s.score >= 0


def test_score_chunking_matches_single(tmp_path):
    state = _tiny_state()
    rng = np.random.default_rng(6)
    subs = [Subsample(values=rng.normal(size=32).astype(np.float32), source_offset=0, label="normal")
            for _ in range(70)]
    all_at_once = score_dataset(state, subs)
    one_by_one = [score_dataset(state, [s])[0] for s in subs]
    for a, b in zip(all_at_once, one_by_one):
        assert a.score == pytest.approx(b.score, rel=1e-6)


# -- evaluate + emit_report ------------------------------------------------------------


def _mixed_subs(rng, n_normal=6, n_fault=4, length=32):
    subs = [Subsample(values=rng.normal(size=length).astype(np.float32), source_offset=0,
                      label="normal", source=f"n{i}") for i in range(n_normal)]
    subs += [Subsample(values=(rng.normal(size=length) + 3.0).astype(np.float32), source_offset=0,
                       label="fault", source=f"f{i}") for i in range(n_fault)]
    return subs


def test_evaluate_report_contents():
    state = _tiny_state()
    subs = _mixed_subs(np.random.default_rng(7))
    report = evaluate(state, subs, n_recon=2)
    assert len(report.scored) == len(subs) == len(report.normalized)
    assert 0.0 <= report.auc <= 1.0
    assert report.n_normal == 6 and report.n_fault == 4
    assert min(report.normalized) == 0.0 and max(report.normalized) == 1.0
    assert len(report.recon_pairs) == 2


def test_emit_report_files(tmp_path):
    state = _tiny_state()
    subs = _mixed_subs(np.random.default_rng(8))
    report = evaluate(state, subs, n_recon=2)
    paths = emit_report(report, tmp_path / "out")
    scores_lines = paths[0].read_text().splitlines()
    assert scores_lines[0] == "id,label,raw_score,norm_score,l_apparent,l_latent"
    assert len(scores_lines) == 1 + len(subs)
    metrics = dict(line.split("=", 1) for line in paths[1].read_text().splitlines())
    assert set(metrics) == {"auc", "accuracy", "threshold", "n_normal", "n_fault"}
    assert metrics["n_normal"] == "6" and metrics["n_fault"] == "4"
    recon_lines = paths[2].read_text().splitlines()
    assert recon_lines[0] == "id,channel,position,original,reconstructed"
    assert len(recon_lines) == 1 + 2 * 32  # two samples of length 32, one channel


def test_emit_report_rerun_byte_identical(tmp_path):
    state = _tiny_state()
    subs = _mixed_subs(np.random.default_rng(9))
    report = evaluate(state, subs, n_recon=1)
    a = emit_report(report, tmp_path / "a")
    b = emit_report(report, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
