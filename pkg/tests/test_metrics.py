import math

import numpy as np
import pytest

from pmcodec.metrics import (
    all_metrics,
    chamfer,
    chamfer_matrix,
    cov,
    cov_from_matrix,
    jsd,
    jsd_from_histograms,
    mmd,
    mmd_from_matrix,
    normalize_unit_cube,
    occupancy_histogram,
    one_nna,
    one_nna_from_matrix,
    sample_mesh,
    sample_points,
)

SQUARE_V = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
SQUARE_F = np.array([[0, 1, 2], [0, 2, 3]])

D_GR = np.array([[1.0, 5.0, 3.0], [2.0, 4.0, 6.0], [7.0, 8.0, 0.5]])


def brute_chamfer(a, b):
    d = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return d.min(1).mean() + d.min(0).mean()


def clouds(rng, k, n=64, shift=0.0):
    return [rng.random((n, 3)) * 0.5 + shift for _ in range(k)]


def test_sample_mean_unit_square():
    p = sample_points(SQUARE_V, SQUARE_F, 100_000, seed=0)
    assert np.allclose(p.mean(0), [0.5, 0.5, 0.0], atol=0.01)


def test_samples_inside_single_triangle():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    p = sample_points(v, [[0, 1, 2]], 5000, seed=1)
    assert (p[:, 0] >= -1e-12).all() and (p[:, 1] >= -1e-12).all()
    assert (p[:, 0] + p[:, 1] <= 1 + 1e-12).all()


def test_sampling_deterministic():
    a = sample_points(SQUARE_V, SQUARE_F, 2048, seed=5)
    b = sample_points(SQUARE_V, SQUARE_F, 2048, seed=5)
    assert a.shape == (2048, 3) and np.array_equal(a, b)


def test_zero_area_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(ValueError):
        sample_points(v, [[0, 1, 2]])


def test_sample_mesh_unit_cube(pyramid):
    p = sample_mesh(pyramid, 500, seed=0, n_bins=8)
    assert p.min() >= 0 and p.max() <= 1


def test_normalize_unit_cube():
    u = normalize_unit_cube([[2, 2, 2], [4, 3, 2]])
    assert np.allclose(u, [[0, 0, 0], [1, 0.5, 0]])


def test_chamfer_closed_forms():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[3.0, 4.0, 0.0]])
    assert chamfer(a, b) == pytest.approx(2 * 25)
    rng = np.random.default_rng(0)
    c = rng.random((100, 3))
    assert chamfer(c, c) == 0.0
    with pytest.raises(ValueError):
        chamfer(np.zeros((0, 3)), c)


def test_chamfer_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.random((int(rng.integers(1, 200)), 3))
        b = rng.random((int(rng.integers(1, 200)), 3))
        assert abs(chamfer(a, b) - brute_chamfer(a, b)) <= 1e-9
        assert chamfer(a, b) == chamfer(b, a)


def test_matrix_fixture_cov_mmd():
    # nearest refs of the gen rows: 0, 0, 2
    assert cov_from_matrix(D_GR) == pytest.approx(200 / 3)
    # column minima 1, 4, 0.5
    assert mmd_from_matrix(D_GR) == pytest.approx(5.5 / 3)


def test_matrix_fixture_one_nna():
    d_gg = np.array([[0.0, 1.0], [1.0, 0.0]])
    d_rr = np.array([[0.0, 9.0], [9.0, 0.0]])
    d_gr = np.array([[5.0, 2.0], [3.0, 4.0]])
    # g0 -> g1, g1 -> g0 (right); r0 -> g1, r1 -> g0 (wrong)
    assert one_nna_from_matrix(d_gg, d_gr, d_rr) == 50.0


def test_one_nna_needs_two():
    with pytest.raises(ValueError):
        one_nna_from_matrix(np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((2, 2)))


def test_identity_sets():
    rng = np.random.default_rng(2)
    s = clouds(rng, 6)
    assert cov(s, s) == 100.0
    assert mmd(s, s) == 0.0
    assert jsd(s, s) == 0.0


def test_all_identical_gen_covers_one():
    rng = np.random.default_rng(3)
    ref = clouds(rng, 5)
    gen = [ref[0]] * 4
    assert cov(gen, ref) <= 100 / 5


def test_far_outlier_leaves_mmd():
    rng = np.random.default_rng(4)
    gen, ref = clouds(rng, 4), clouds(rng, 4)
    base = mmd(gen, ref)
    assert mmd(gen + [rng.random((64, 3)) + 100], ref) == base


def test_separable_sets_give_full_accuracy():
    rng = np.random.default_rng(5)
    assert one_nna(clouds(rng, 5), clouds(rng, 5, shift=10)) == 100.0


def test_permutation_invariance():
    rng = np.random.default_rng(6)
    gen, ref = clouds(rng, 5), clouds(rng, 6)
    a = all_metrics(gen, ref)
    b = all_metrics(gen[::-1], ref[::-1])
    for k in a:
        assert a[k] == pytest.approx(b[k], abs=1e-12)
    assert 0 < a["cov"] <= 100 and 0 <= a["one_nna"] <= 100 and 0 <= a["jsd"] <= 1


def test_jsd_two_bin_oracle():
    p, q = [1.0, 0.0], [0.5, 0.5]
    m = [0.75, 0.25]
    kl_pm = 1.0 * math.log2(1.0 / 0.75)
    kl_qm = 0.5 * math.log2(0.5 / 0.75) + 0.5 * math.log2(0.5 / 0.25)
    want = 0.5 * (kl_pm + kl_qm)
    assert want == pytest.approx(0.3113, abs=1e-4)
    assert jsd_from_histograms(p, q) == pytest.approx(want, abs=1e-12)


def test_jsd_disjoint_is_one():
    a = [np.full((10, 3), 0.01)]
    b = [np.full((10, 3), 0.99)]
    assert jsd(a, b) == pytest.approx(1.0)


def test_occupancy_histogram():
    h = occupancy_histogram([np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5]])], resolution=2)
    assert h.sum() == 3 and h[0] == 1 and h[-1] == 2
