from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from armvision.vision import (
    DetectedObject,
    ImageTooSmall,
    PipelineParams,
    RegionOfInterest,
    RoiOutOfBounds,
    connected_components,
    crop_roi,
    detect_objects,
    equalize_histogram,
    filter_small,
    label_components,
    morph_open,
    otsu_level,
    otsu_threshold,
    run_pipeline,
    sobel_edges,
    to_grayscale,
)

from oracles import otsu_sweep_oracle

masks = arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24)))
grays = arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)))


def brute_centroids(mask):
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    out = []
    for k in range(1, n + 1):
        ys, xs = np.nonzero(labels == k)
        out.append((len(xs), xs.mean(), ys.mean(), (ys[0], xs[0])))
    return out


# -- ROI / grayscale ----------------------------------------------------------

def test_crop_roi():
    img = np.arange(10 * 10 * 3, dtype=np.uint8).reshape(10, 10, 3)
    assert np.array_equal(crop_roi(img, RegionOfInterest.full(img)), img)
    out = crop_roi(img, RegionOfInterest(2, 3, 4, 5))
    assert out.shape == (5, 4, 3)
    assert np.array_equal(out[0, 0], img[3, 2])
    with pytest.raises(RoiOutOfBounds):
        crop_roi(img, RegionOfInterest(8, 8, 4, 4))


@pytest.mark.parametrize("rgb, gray", [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76)])
def test_grayscale(rgb, gray):
    assert to_grayscale(np.array([[rgb]], dtype=np.uint8))[0, 0] == gray


def test_grayscale_matches_float_formula():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    r, g, b = (img[..., i].astype(float) for i in range(3))
    expected = np.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5)
    # float evaluation can sit a hair off an exact .5; allow those cells only
    assert np.abs(to_grayscale(img).astype(int) - expected).max() <= 1
    assert (to_grayscale(img) == expected).mean() > 0.99


# -- equalization -------------------------------------------------------------

def test_equalize_constant_unchanged():
    img = np.full((5, 7), 128, np.uint8)
    assert np.array_equal(equalize_histogram(img), img)


def test_equalize_two_level():
    img = np.array([[100] * 8 + [101] * 8], np.uint8)
    out = equalize_histogram(img)
    # cdf(100) equals cdf_min, so the lower level lands on 0
    assert set(np.unique(out)) == {0, 255}


def test_equalize_uniform_histogram_is_identity():
    img = np.repeat(np.arange(256, dtype=np.uint8), 3).reshape(12, 64)
    assert np.array_equal(equalize_histogram(img), img)


def test_equalize_matches_pure_python_formula():
    rng = np.random.default_rng(5)
    img = rng.integers(40, 200, (30, 30), dtype=np.uint8)
    px = img.ravel().tolist()
    n = len(px)
    cdf = {v: sum(1 for p in px if p <= v) for v in set(px)}
    cmin = cdf[min(px)]
    out = equalize_histogram(img)
    for v in set(px):
        exp = int(Fraction(255 * (cdf[v] - cmin), n - cmin) + Fraction(1, 2))
        assert out[img == v][0] == exp


@given(grays)
def test_equalize_order_preserving(img):
    out = equalize_histogram(img).astype(int).ravel()
    src = img.astype(int).ravel()
    order = np.argsort(src, kind="stable")
    assert np.all(np.diff(out[order]) >= 0)


# -- Otsu ---------------------------------------------------------------------

def test_otsu_bimodal():
    img = np.array([[40] * 50 + [200] * 50], np.uint8)
    mask, t = otsu_threshold(img)
    assert 40 <= t <= 199
    assert np.array_equal(mask, img == 40)
    assert otsu_sweep_oracle(img) == t


def test_otsu_constant_image():
    img = np.full((4, 4), 77, np.uint8)
    mask, t = otsu_threshold(img)
    assert mask.shape == img.shape and not mask.any()


def test_otsu_dark_square():
    img = np.full((40, 40), 220, np.uint8)
    img[10:20, 15:30] = 35
    mask, _ = otsu_threshold(img)
    assert np.array_equal(mask, img == 35)
    light, _ = otsu_threshold(img, dark_foreground=False)
    assert np.array_equal(light, ~mask)


def test_otsu_matches_sweep_on_random_images():
    rng = np.random.default_rng(2024)
    for i in range(20):
        img = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        if i % 2:
            img = np.clip(rng.normal(rng.uniform(50, 200), 30, (16, 16)), 0, 255).astype(np.uint8)
        assert otsu_level(img) == otsu_sweep_oracle(img)


# -- Sobel --------------------------------------------------------------------

def sobel_loop_oracle(img):
    h, w = img.shape
    kx = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]
    out = np.zeros((h, w), np.uint8)
    for y in range(h):
        for x in range(w):
            gx = gy = 0
            for dy in range(3):
                for dx in range(3):
                    v = int(img[min(max(y + dy - 1, 0), h - 1), min(max(x + dx - 1, 0), w - 1)])
                    gx += kx[dy][dx] * v
                    gy += kx[dx][dy] * v
            out[y, x] = min(255, int(np.floor(np.hypot(gx, gy) + 0.5)))
    return out


def test_sobel_constant_is_zero():
    assert not sobel_edges(np.full((6, 9), 93, np.uint8)).any()


def test_sobel_vertical_step():
    img = np.zeros((8, 8), np.uint8)
    img[:, 4:] = 255
    out = sobel_edges(img)
    assert np.all(out[:, 3] == 255) and np.all(out[:, 4] == 255)
    assert not out[:, :3].any() and not out[:, 5:].any()


def test_sobel_too_small():
    with pytest.raises(ImageTooSmall):
        sobel_edges(np.zeros((2, 2), np.uint8))


def test_sobel_matches_loop_oracle():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (9, 11), dtype=np.uint8)
    assert np.array_equal(sobel_edges(img), sobel_loop_oracle(img))


# -- morphology ---------------------------------------------------------------

def test_open_removes_speck():
    m = np.zeros((7, 7), bool)
    m[3, 3] = True
    assert not morph_open(m, 1).any()


def test_open_keeps_square():
    m = np.zeros((20, 20), bool)
    m[5:15, 4:14] = True
    assert np.array_equal(morph_open(m, 1), m)


@settings(max_examples=60)
@given(masks, st.integers(1, 3))
def test_open_matches_scipy(m, r):
    se = np.ones((2 * r + 1, 2 * r + 1), bool)
    expected = ndimage.binary_dilation(ndimage.binary_erosion(m, se, border_value=0), se, border_value=0)
    assert np.array_equal(morph_open(m, r), expected)


@given(masks, st.integers(1, 2))
def test_open_anti_extensive_and_idempotent(m, r):
    o = morph_open(m, r)
    assert not (o & ~m).any()
    assert np.array_equal(morph_open(o, r), o)


# -- labeling -----------------------------------------------------------------

def test_components_empty():
    assert connected_components(np.zeros((5, 5), bool)) == []


def test_components_rectangle():
    m = np.zeros((10, 10), bool)
    m[3:7, 2:6] = True
    assert connected_components(m) == [DetectedObject(1, 16, 3.5, 4.5)]


def test_components_diagonal_pixels_join():
    m = np.zeros((4, 4), bool)
    m[1, 1] = m[2, 2] = True
    objs = connected_components(m)
    assert len(objs) == 1 and objs[0].area == 2


def test_components_labels_follow_raster_order():
    m = np.zeros((6, 10), bool)
    m[4:6, 0:2] = True  # first pixel at row 4
    m[0:3, 7:9] = True  # first pixel at row 0
    m[0, 1] = True
    objs = connected_components(m)
    assert [(o.label, o.area) for o in objs] == [(1, 1), (2, 6), (3, 4)]


@settings(max_examples=150)
@given(masks)
def test_components_match_scipy_oracle(m):
    labels, objs = label_components(m)
    ref = brute_centroids(m)
    # scipy numbers components by raster order of first pixel too
    assert len(objs) == len(ref)
    for o, (area, cx, cy, _) in zip(objs, ref):
        assert o.area == area
        assert o.centroid_x == pytest.approx(cx, abs=1e-9)
        assert o.centroid_y == pytest.approx(cy, abs=1e-9)
    assert sum(o.area for o in objs) == int(m.sum())
    assert len({o.label for o in objs}) == len(objs)
    for o in objs:
        ys, xs = np.nonzero(labels == o.label)
        assert xs.min() <= o.centroid_x <= xs.max() and ys.min() <= o.centroid_y <= ys.max()


@given(masks, st.integers(0, 6), st.integers(0, 6))
def test_centroids_translate_with_content(m, dx, dy):
    h, w = m.shape
    big = np.zeros((h + 6, w + 6), bool)
    big[:h, :w] = m
    moved = np.zeros_like(big)
    moved[dy:dy + h, dx:dx + w] = m
    a, b = connected_components(big), connected_components(moved)
    assert [o.area for o in a] == [o.area for o in b]
    for oa, ob in zip(a, b):
        # first moments are integers and shift by exactly area * d
        assert round(ob.centroid_x * ob.area) == round(oa.centroid_x * oa.area) + dx * oa.area
        assert round(ob.centroid_y * ob.area) == round(oa.centroid_y * oa.area) + dy * oa.area
        assert ob.centroid_x == pytest.approx(oa.centroid_x + dx, abs=1e-12)
        assert ob.centroid_y == pytest.approx(oa.centroid_y + dy, abs=1e-12)


def test_filter_small():
    objs = [DetectedObject(i + 1, a, 0.0, 0.0) for i, a in enumerate([3, 50, 7])]
    assert filter_small(objs, 0) == objs
    assert filter_small(objs, 10) == [objs[1]]
    assert filter_small(objs, 100) == []


# -- composite pipeline -------------------------------------------------------

def frame_with(rects, h=120, w=160, fg=40, bg=230):
    img = np.full((h, w, 3), bg, np.uint8)
    for x0, y0, x1, y1 in rects:
        img[y0:y1 + 1, x0:x1 + 1] = fg
    return img


def test_detect_blank_frame():
    assert detect_objects(np.full((48, 64, 3), 255, np.uint8)) == []


def test_detect_blank_noisy_frame():
    rng = np.random.default_rng(0)
    img = np.clip(230 + rng.integers(-5, 6, (120, 160, 3)), 0, 255).astype(np.uint8)
    assert detect_objects(img) == []


def test_detect_rectangles_exact_centroids():
    rects = [(10, 10, 29, 24), (60, 70, 89, 99), (120, 5, 140, 20)]
    objs = detect_objects(frame_with(rects))
    assert len(objs) == 3
    got = sorted((o.centroid_x, o.centroid_y) for o in objs)
    want = sorted(((x0 + x1) / 2, (y0 + y1) / 2) for x0, y0, x1, y1 in rects)
    assert np.abs(np.array(got) - np.array(want)).max() < 1e-9


def test_detect_removes_specks():
    img = frame_with([(40, 40, 59, 59)])
    for x, y in [(5, 5), (100, 10), (130, 90), (20, 100), (150, 60)]:
        img[y, x] = 40
    assert len(detect_objects(img, params=PipelineParams(min_area=20))) == 1


def test_detect_roi_offsets_centroids():
    img = frame_with([(60, 40, 79, 59)])
    objs = detect_objects(img, RegionOfInterest(50, 30, 60, 50))
    assert [(o.centroid_x, o.centroid_y) for o in objs] == [(69.5, 49.5)]


def test_pipeline_stages_and_determinism():
    img = frame_with([(10, 10, 29, 24)])
    a, b = run_pipeline(img), run_pipeline(img)
    assert set(a.stages) == {"gray", "equalized", "binary", "edges", "opened"}
    assert a.objects == b.objects
    assert all(np.array_equal(a.stages[k], b.stages[k]) for k in a.stages)


def test_light_polarity_finds_bright_objects():
    img = frame_with([(20, 20, 39, 39)], fg=240, bg=30)
    objs = detect_objects(img, params=PipelineParams(dark_foreground=False))
    assert [(o.area, o.centroid_x) for o in objs] == [(400, 29.5)]
