# Copyright 2026 The freeseg Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import os
import pathlib

import numpy as np
import pytest

import freeseg

FIXTURES = pathlib.Path(os.environ.get("FREESEG_FIXTURES", pathlib.Path(__file__).parents[1] / "fixtures"))
CACHE = str(FIXTURES / "cache")


def column_major_runs(mask):
    flat = mask.T.reshape(-1)
    runs, current, n = [], 0, 0
    for v in flat:
        if v != current:
            runs.append(n)
            current, n = v, 0
        n += 1
    runs.append(n)
    return runs


def test_kmeans_separates_two_blobs():
    rng = np.random.default_rng(0)
    pts = np.vstack([rng.normal(0, 0.1, (50, 2)), rng.normal(5, 0.1, (50, 2))])
    out = freeseg.kmeans(pts, k=2, seed=3)
    a = out["assignments"]
    assert len(set(a[:50])) == 1 and len(set(a[50:])) == 1 and a[0] != a[50]
    centroids = out["centroids"]
    expected = sum(((pts[a == c] - centroids[c]) ** 2).sum() for c in range(2))
    assert out["inertia"] == pytest.approx(expected, rel=1e-9)


def test_eval_accumulator_matches_numpy():
    rng = np.random.default_rng(1)
    gt = rng.integers(0, 4, (16, 16)).astype(np.int32)
    pred = rng.integers(0, 4, (16, 16)).astype(np.int32)
    gt[0, :5] = 255
    acc = freeseg.EvalAccumulator(4)
    acc.update(gt, pred)
    keep = gt != 255
    conf = np.zeros((4, 4), dtype=np.uint64)
    np.add.at(conf, (gt[keep], pred[keep]), 1)
    assert (acc.confusion() == conf).all()
    tp = np.diag(conf).astype(float)
    iou = tp / (conf.sum(0) + conf.sum(1) - tp)
    assert acc.miou() == pytest.approx(iou.mean(), abs=1e-12)
    with pytest.raises(freeseg.DataError):
        acc.update(gt, pred[:8])


def test_rle_round_trip_and_runs():
    rng = np.random.default_rng(2)
    mask = (rng.random((7, 9)) > 0.6).astype(np.uint8)
    rle = freeseg.rle_encode(mask)
    assert rle["size"] == [7, 9]
    assert (freeseg.rle_decode(rle) == mask).all()
    raw = {"size": [7, 9], "counts": column_major_runs(mask)}
    assert (freeseg.rle_decode(raw) == mask).all()
    with pytest.raises(freeseg.DataError):
        freeseg.rle_decode({"size": [7, 9], "counts": [3]})


def test_polygon_rasterizes_a_rectangle():
    m = freeseg.polygon_to_mask([2, 2, 8, 2, 8, 6, 2, 6], 10, 12)
    assert m.shape == (10, 12)
    assert m[4, 5] == 1 and m[0, 0] == 0 and m[9, 11] == 0


def test_vocabulary_helpers():
    assert freeseg.extract_keywords("two dogs chasing a ball on the grass") == ["dog", "ball", "grass"]
    d = freeseg.decide_keyword([0.4, 0.1, 0.7])
    assert d["argmin"] == 1 and d["accepted"]
    assert d["mean_distance"] == pytest.approx(0.4)


def two_region_image():
    img = np.zeros((24, 24, 3), dtype=np.uint8)
    img[:, 12:] = 255
    coarse = np.zeros((24, 24), dtype=np.int32)
    coarse[:, 9:] = 3
    return img, coarse


@pytest.mark.parametrize("refine", [freeseg.dense_crf, freeseg.pamr])
def test_refinement_snaps_to_the_edge(refine):
    img, coarse = two_region_image()
    out = refine(img, coarse)
    assert out.shape == coarse.shape
    assert set(np.unique(out)) <= {0, 3}
    assert (out[:, 12:] == 3).all()
    assert (out[:, :12] == 0).mean() > (coarse[:, :12] == 0).mean()


def test_crf_rejects_unknown_parameter():
    img, coarse = two_region_image()
    with pytest.raises(freeseg.ConfigError):
        freeseg.dense_crf(img, coarse, w_smoth=1.0)


def test_config_round_trip(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("clustering:\n  k: 6\nrefinement:\n  method: pamr\n")
    c = freeseg.load_config(cfg)
    assert c["clustering"]["k"] == 6
    assert c["refinement"]["method"] == "pamr"
    cfg.write_text("clustering:\n  kay: 6\n")
    with pytest.raises(freeseg.ConfigError):
        freeseg.load_config(cfg)


def test_pipeline_open_vocabulary_on_fixture():
    p = freeseg.Pipeline({"cache_root": CACHE, "vocabulary": {"mode": "open"}})
    out = p.segment(FIXTURES / "images" / "bird.png")
    assert out["classes"] == ["unlabeled", "bird", "branch", "tree"]
    labels = out["labels"]
    assert labels.ndim == 2 and labels.dtype == np.int32
    assert set(np.unique(labels)) <= set(range(len(out["classes"])))
    # Segmenting the same pixels from an array gives the same labels.
    again = p.segment(_read_png(FIXTURES / "images" / "bird.png"), image_id="bird")
    assert (again["labels"] == labels).all()


def _read_png(path):
    pytest.importorskip("PIL")
    from PIL import Image

    return np.asarray(Image.open(path).convert("RGB"))


def test_missing_cache_is_a_backend_error(tmp_path):
    # Class prompts are embedded up front, so construction already fails.
    with pytest.raises(freeseg.BackendError):
        freeseg.Pipeline({"cache_root": str(tmp_path)}, classes=["unlabeled", "bird", "dog"])


def test_bench_is_deterministic_across_jobs():
    cfg = {"cache_root": CACHE, "dataset": {"name": "voc21", "root": str(FIXTURES / "voc")}}
    a = freeseg.bench(cfg, jobs=1)
    b = freeseg.bench(cfg, jobs=2)
    assert a["checksum"] == b["checksum"]
    assert len(a["images"]) == 3
    assert 0.0 <= a["miou"] <= 1.0
