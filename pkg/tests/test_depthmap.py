import numpy as np
import pytest

from depthcurriculum.depthmap import MAX_DEPTH, MIN_DEPTH, as_depth_map, clamp_depth, density, valid_mask


def test_validity_threshold():
    m = np.array([[0.0, 0.0009, 0.001, 5.0]])
    assert valid_mask(m).tolist() == [[False, False, True, True]]


def test_density_all_valid():
    assert density(np.full((4, 6), 3.0)) == 1.0


def test_density_all_zero():
    assert density(np.zeros((4, 6))) == 0.0


def test_density_counts_fraction():
    m = np.zeros((2, 4))
    m[0, 0] = 1.0
    m[1, 3] = 79.0
    assert density(m) == 2 / 8


def test_density_permutation_invariant():
    rng = np.random.default_rng(0)
    m = np.where(rng.random((8, 8)) < 0.3, rng.uniform(1, 60, (8, 8)), 0.0)
    flat = m.reshape(-1)
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(flat.size)
        assert density(flat[perm].reshape(8, 8)) == density(m)


def test_clamp_depth():
    m = np.array([[0.0, 0.0005, 0.001, 100.0, 42.0]])
    out = clamp_depth(m)
    assert out.tolist() == [[0.0, 0.0, 0.001, 80.0, 42.0]]
    assert MIN_DEPTH == 0.001 and MAX_DEPTH == 80.0


@pytest.mark.parametrize(
    "bad",
    [np.zeros((0, 3)), np.zeros(5), np.zeros((2, 2, 2)), np.array([[1.0, -2.0]]), np.array([[np.nan]])],
)
def test_as_depth_map_rejects(bad):
    with pytest.raises(ValueError):
        as_depth_map(bad)
