import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from depthcurriculum.estimator import CurriculumDepthRegressor, DilationImputer
from depthcurriculum.depthmap import density
from depthcurriculum.pooling import dilate, max_pool2d, resize_nearest
from depthcurriculum.catalog import SyllabusSpec
from depthcurriculum.synthetic import generate_dataset


def sparse_batch(rng, n=4, h=16, w=32, dens=0.3):
    return np.where(rng.random((n, h, w)) < dens, rng.uniform(1, 60, (n, h, w)), 0.0)


class TestDilationImputer:
    def test_matches_functional_dilate(self):
        rng = np.random.default_rng(0)
        maps = sparse_batch(rng)
        imp = DilationImputer(iterations=2, kernel_size=2)
        out = imp.fit_transform(maps)
        spec = SyllabusSpec(2, (2, 2), (4, 8))
        for i in range(maps.shape[0]):
            assert np.array_equal(out[i], dilate(maps[i], spec, (16, 32)))

    def test_densifies(self):
        rng = np.random.default_rng(1)
        maps = sparse_batch(rng, dens=0.2)
        out = DilationImputer(iterations=3, kernel_size=2).transform(maps)
        for i in range(maps.shape[0]):
            assert density(out[i]) >= density(maps[i])

    def test_single_map_shape_preserved(self):
        rng = np.random.default_rng(2)
        m = sparse_batch(rng, n=1)[0]
        out = DilationImputer(iterations=1, kernel_size=4).transform(m)
        assert out.shape == m.shape

    def test_target_size(self):
        rng = np.random.default_rng(3)
        maps = sparse_batch(rng)
        out = DilationImputer(iterations=1, kernel_size=2, target_size=(8, 16)).transform(maps)
        assert out.shape == (4, 8, 16)

    def test_mean_method(self):
        m = np.array([[0.0, 0.0], [0.0, 8.0]])
        out = DilationImputer(iterations=1, kernel_size=2, method="mean").transform(m)
        assert out.tolist() == [[2.0, 2.0], [2.0, 2.0]]

    def test_bad_method(self):
        with pytest.raises(ValueError):
            DilationImputer(method="median").transform(np.ones((4, 4)))

    def test_get_params_round_trip(self):
        imp = DilationImputer(iterations=3, kernel_size=5, method="mean")
        params = imp.get_params()
        assert params["iterations"] == 3 and params["kernel_size"] == 5
        other = clone(imp)
        assert other.get_params() == params


@pytest.fixture(scope="module")
def fitted():
    records = generate_dataset(8, 16, 32, 0.3, seed=4)
    X = np.stack([r.image for r in records])
    y = np.stack([r.ground_truth for r in records])
    est = CurriculumDepthRegressor(
        curriculum="A", min_decrease=0.999, patience=3, patience_mode="cumulative",
        steps=40, batch_size=4, seed=4,
    )
    return est.fit(X, y), X, y


class TestCurriculumDepthRegressor:
    def test_predict_shape_and_range(self, fitted):
        est, X, y = fitted
        pred = est.predict(X)
        assert pred.shape == y.shape
        assert pred.min() >= 1e-3 and pred.max() <= 80.0

    def test_fit_attributes(self, fitted):
        est, X, y = fitted
        assert len(est.events_) == 40
        assert est.plan_.syllabuses[-1].is_identity
        assert len(est.train_history_) == 40

    def test_score_is_negative_rms(self, fitted):
        est, X, y = fitted
        assert est.score(X, y) <= 0.0

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            CurriculumDepthRegressor().predict(np.zeros((1, 16, 32, 3)))

    def test_get_params_and_clone(self):
        est = CurriculumDepthRegressor(steps=7, min_decrease=0.5, curriculum="B")
        params = est.get_params()
        assert params["steps"] == 7 and params["curriculum"] == "B"
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_identity_baseline_mode(self):
        records = generate_dataset(6, 16, 32, 0.3, seed=6)
        X = np.stack([r.image for r in records])
        y = np.stack([r.ground_truth for r in records])
        est = CurriculumDepthRegressor(curriculum=None, steps=10, batch_size=3, seed=6)
        est.fit(X, y)
        assert len(est.plan_.syllabuses) == 1
        assert est.plan_.syllabuses[0].is_identity

    def test_shape_validation(self):
        est = CurriculumDepthRegressor(steps=2)
        with pytest.raises(ValueError):
            est.fit(np.zeros((2, 16, 32, 3)), np.zeros((2, 8, 8)))
        with pytest.raises(ValueError):
            est.fit(np.zeros((2, 16, 32, 3)), np.zeros((3, 16, 32)))

    def test_uint8_images_accepted(self):
        records = generate_dataset(4, 16, 32, 0.5, seed=8)
        X = (np.stack([r.image for r in records]) * 255).astype(np.uint8)
        y = np.stack([r.ground_truth for r in records])
        est = CurriculumDepthRegressor(curriculum=None, steps=4, batch_size=2, seed=8)
        est.fit(X, y)
        assert est.predict(X).shape == y.shape
