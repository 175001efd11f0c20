import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanefusion.geometry import (
    DenseModalMap,
    NormalizationError,
    PointCloud,
    SparseModalMap,
    available_backends,
    compose_modal_image,
    knn_complete,
    project_points,
)
from lanefusion.geometry.completion import BACKEND

from conftest import simple_calib

BACKENDS = available_backends()


# ── Oracle ───────────────────────────────────────────────────────────────

def brute_force_complete(channels, known, k):
    """Loop-per-pixel inverse-distance fill; ties broken by raster index."""
    nc, H, W = channels.shape
    pts = [(y, x) for y in range(H) for x in range(W) if known[y, x]]
    out = channels.astype(float).copy()
    for y in range(H):
        for x in range(W):
            if known[y, x]:
                continue
            ranked = sorted(pts, key=lambda p: ((p[0] - y) ** 2 + (p[1] - x) ** 2, p[0] * W + p[1]))[:k]
            inv = [1.0 / math.hypot(p[0] - y, p[1] - x) for p in ranked]
            for c in range(nc):
                out[c, y, x] = sum(w * channels[c, p[0], p[1]] for w, p in zip(inv, ranked)) / sum(inv)
    return out


def random_sparse(rng, H=12, W=17, p=0.1):
    known = rng.random((H, W)) < p
    if not known.any():
        known[rng.integers(H), rng.integers(W)] = True
    channels = rng.normal(size=(3, H, W)) * known
    return SparseModalMap(channels, known)


# ── project_points ───────────────────────────────────────────────────────

def test_optical_axis_point_hits_principal_point():
    sparse = project_points(PointCloud([[0, 0, 10, 0.3]]), simple_calib(cx=64, cy=40), 128, 128)
    assert sparse.known[40, 64]
    assert sparse.known.sum() == 1


def test_off_axis_point_pixel_and_channels():
    # u = (100 * 1 + 64 * 10) / 10 = 74
    sparse = project_points(PointCloud([[1, 0, 10, 0.5]]), simple_calib(), 128, 128)
    assert sparse.known[64, 74]
    assert sparse.channels[0, 64, 74] == pytest.approx(0.5)
    assert sparse.channels[1, 64, 74] == pytest.approx(10.0)  # sensor-frame z
    assert sparse.channels[2, 64, 74] == pytest.approx(math.sqrt(101.0))  # range, not depth


def test_point_behind_camera_dropped():
    sparse = project_points(PointCloud([[0, 0, -5, 1.0]]), simple_calib(), 128, 128)
    assert sparse.coverage == 0


def test_empty_cloud_gives_empty_map():
    sparse = project_points(PointCloud(), simple_calib(), 8, 4)
    assert sparse.channels.shape == (3, 4, 8)
    assert not sparse.known.any()


def test_collision_keeps_nearer_point():
    cloud = PointCloud([[0, 0, 20, 0.9], [0, 0, 10, 0.1], [0, 0, 15, 0.5]])
    sparse = project_points(cloud, simple_calib(), 128, 128)
    assert sparse.known.sum() == 1
    assert sparse.channels[2, 64, 64] == pytest.approx(10.0)
    assert sparse.channels[0, 64, 64] == pytest.approx(0.1)


def test_extrinsics_applied():
    # rotate sensor x-forward into camera z-forward
    R = np.array([[0.0, -1, 0], [0, 0, -1], [1, 0, 0]])
    sparse = project_points(PointCloud([[10, 0, 0, 0.2]]), simple_calib(R=R, T=np.array([0, 0, 0.0])), 128, 128)
    assert sparse.known[64, 64]
    assert sparse.channels[1, 64, 64] == 0.0  # height is the sensor-frame z


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projection_stays_in_bounds(seed):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-50, 50, (200, 3)), rng.random(200)])
    W, H = int(rng.integers(1, 60)), int(rng.integers(1, 60))
    sparse = project_points(PointCloud(pts), simple_calib(f=20, cx=W / 2, cy=H / 2), W, H)
    rows, cols = np.nonzero(sparse.known)
    assert np.all((0 <= cols) & (cols < W) & (0 <= rows) & (rows < H))
    assert np.all(sparse.channels[:, ~sparse.known] == 0)


def test_coverage_monotone_in_point_count():
    rng = np.random.default_rng(3)
    W, H = 64, 32
    calib = simple_calib(f=30, cx=W / 2, cy=H / 2)
    # frustum-filling cloud: every point lands inside the image
    u = rng.uniform(0, W, 3000)
    v = rng.uniform(0, H, 3000)
    z = rng.uniform(2, 30, 3000)
    pts = np.column_stack([(u - W / 2) * z / 30, (v - H / 2) * z / 30, z, rng.random(3000)])
    coverages = [project_points(PointCloud(pts[:n]), calib, W, H).coverage for n in range(0, 3001, 250)]
    assert all(a <= b for a, b in zip(coverages, coverages[1:]))
    assert coverages[-1] > 0.5


# ── knn_complete ─────────────────────────────────────────────────────────

@pytest.mark.parametrize("backend", BACKENDS)
def test_dense_input_unchanged(backend):
    rng = np.random.default_rng(0)
    channels = rng.random((3, 9, 11))
    dense = knn_complete(SparseModalMap(channels, np.ones((9, 11), bool)), backend=backend)
    assert np.array_equal(dense.channels, channels)
    assert not dense.degenerate


@pytest.mark.parametrize("backend", BACKENDS)
def test_equidistant_neighbours_give_arithmetic_mean(backend):
    channels = np.zeros((3, 5, 5))
    known = np.zeros((5, 5), bool)
    for (y, x), val in zip([(1, 2), (2, 1), (2, 3)], (3 / 9, 6 / 9, 9 / 9)):
        known[y, x] = True
        channels[:, y, x] = val
    dense = knn_complete(SparseModalMap(channels, known), 3, backend=backend)
    assert dense.channels[0, 2, 2] == (3 / 9 + 6 / 9 + 9 / 9) / 3
    assert dense.channels[0, 2, 2] == pytest.approx(6 / 9, abs=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_inverse_distance_weights(backend):
    # distances (1, 2, 2), values (10, 4, 4): weights (0.5, 0.25, 0.25) -> 7
    channels = np.zeros((3, 7, 7))
    known = np.zeros((7, 7), bool)
    for (y, x), val in zip([(3, 4), (3, 1), (1, 3)], (10.0, 4.0, 4.0)):
        known[y, x] = True
        channels[:, y, x] = val
    dense = knn_complete(SparseModalMap(channels, known), 3, backend=backend)
    assert dense.channels[0, 3, 3] == 7.0


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_matches_brute_force_oracle(backend, k):
    rng = np.random.default_rng(k)
    for _ in range(5):
        sparse = random_sparse(rng)
        got = knn_complete(sparse, k, backend=backend).channels
        np.testing.assert_allclose(got, brute_force_complete(sparse.channels, sparse.known, k), rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_fewer_known_than_k_uses_all(backend):
    channels = np.zeros((3, 4, 4))
    known = np.zeros((4, 4), bool)
    known[0, 0] = known[3, 3] = True
    channels[:, 0, 0], channels[:, 3, 3] = 1.0, 3.0
    dense = knn_complete(SparseModalMap(channels, known), 3, backend=backend)
    np.testing.assert_allclose(dense.channels, brute_force_complete(channels, known, 2), atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_no_known_pixels_is_degenerate(backend):
    dense = knn_complete(SparseModalMap(np.zeros((3, 4, 6)), np.zeros((4, 6), bool)), backend=backend)
    assert dense.degenerate
    assert not dense.channels.any()


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        knn_complete(SparseModalMap(np.zeros((3, 2, 2)), np.ones((2, 2), bool)), 0)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_bitwise_identical_on_frame_sized_maps():
    rng = np.random.default_rng(11)
    for p in (0.004, 0.015, 0.2):
        sparse = random_sparse(rng, 128, 256, p)
        a = knn_complete(sparse, backend="cython").channels
        b = knn_complete(sparse, backend="numpy").channels
        assert np.array_equal(a, b)


def test_default_backend_is_compiled_when_built():
    assert BACKEND in BACKENDS


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_known_preserved_and_completion_convex(seed, k):
    sparse = random_sparse(np.random.default_rng(seed))
    dense = knn_complete(sparse, k)
    known = sparse.known
    assert np.array_equal(dense.channels[:, known], sparse.channels[:, known])
    for c in range(3):
        vals = sparse.channels[c][known]
        filled = dense.channels[c][~known]
        assert np.all(filled >= vals.min() - 1e-12) and np.all(filled <= vals.max() + 1e-12)


# ── compose_modal_image ──────────────────────────────────────────────────

def _dense(channels):
    channels = np.asarray(channels, dtype=float)
    return DenseModalMap(channels, np.ones(channels.shape[1:], bool))


def test_identity_rescale():
    rng = np.random.default_rng(0)
    ch = rng.random((3, 4, 5))
    out = compose_modal_image(_dense(ch), [(0, 1)] * 3)
    assert np.array_equal(out.channels, ch)


def test_endpoints_map_to_range_ends():
    ch = np.zeros((3, 1, 2))
    ch[2] = [[5, 55]]
    out = compose_modal_image(_dense(ch), [(0, 1), (0, 1), (5, 55)])
    assert out.channels[2].tolist() == [[0.0, 1.0]]


def test_default_height_bounds():
    ch = np.zeros((3, 1, 1))
    ch[1] = -1.73
    out = compose_modal_image(_dense(ch))
    assert out.channels[1, 0, 0] == pytest.approx((-1.73 + 3) / 6)
    assert out.channels[1, 0, 0] == pytest.approx(0.21167, abs=5e-6)


def test_values_clamped():
    ch = np.full((3, 1, 2), 0.5)
    ch[2] = [[-10, 200]]
    out = compose_modal_image(_dense(ch))
    assert out.channels[2].tolist() == [[0.0, 1.0]]


def test_degenerate_bounds_rejected():
    with pytest.raises(NormalizationError, match="height"):
        compose_modal_image(_dense(np.zeros((3, 1, 1))), [(0, 1), (2, 2), (0, 1)])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_idempotent_with_unit_bounds(seed):
    ch = np.random.default_rng(seed).normal(0, 2, size=(3, 6, 7))
    once = compose_modal_image(_dense(ch), [(0, 1)] * 3)
    twice = compose_modal_image(once, [(0, 1)] * 3)
    assert np.array_equal(once.channels, twice.channels)
