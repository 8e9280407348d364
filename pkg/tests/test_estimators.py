import numpy as np
import pytest
from sklearn.base import clone

from lfpad import synth
from lfpad.estimators import DepthFromFocus, DepthMapRegressor, SpoofDepthClassifier


@pytest.fixture(scope="module")
def small_dataset():
    items = synth.make_dataset(3, 1, (3, 3, 32, 32), master_seed=31)
    images = np.array([it.sample.image for it in items], dtype=np.float32)
    depths = np.array([it.sample.depth_gt for it in items], dtype=np.float32)
    labels = np.array([int(it.sample.label) for it in items])
    fields = [it.lightfield for it in items]
    return fields, images, depths, labels


class TestDepthFromFocus:
    def test_transform_single_and_batch(self, small_dataset):
        fields, *_ = small_dataset
        est = DepthFromFocus(alphas=np.linspace(0, 1.5, 5), window=5)
        one = est.transform(fields[0])
        assert one.shape == (1, 32, 32)
        many = est.fit_transform(fields[:3])
        assert many.shape == (3, 32, 32)
        assert many.min() >= 0.0 and many.max() <= 1.0

    def test_get_set_params_round_trip(self):
        est = DepthFromFocus(window=7)
        params = est.get_params()
        assert params["window"] == 7
        cloned = clone(est)
        assert cloned.get_params()["window"] == 7

    def test_invalid_alphas_rejected(self):
        with pytest.raises(ValueError):
            DepthFromFocus(alphas=[0.5]).fit()


class TestDepthMapRegressor:
    def test_fit_predict_shapes(self, small_dataset):
        _, images, depths, _ = small_dataset
        est = DepthMapRegressor(
            width_scale=0.25, pretrain_size=8, pretrain_epochs=2,
            finetune_epochs=3, learning_rate=0.1, random_state=0,
        )
        est.fit(images, depths)
        pred = est.predict(images[:4])
        assert pred.shape == (4, 32, 32)
        assert pred.min() >= 0.0 and pred.max() <= 1.0
        assert len(est.pretrain_loss_) == 2
        assert len(est.finetune_loss_) == 3

    def test_score_is_negative_mse(self, small_dataset):
        _, images, depths, _ = small_dataset
        est = DepthMapRegressor(pretrain_epochs=0, finetune_epochs=2,
                                learning_rate=0.1, random_state=0)
        est.fit(images, depths)
        s = est.score(images, depths)
        assert s <= 0.0

    def test_sklearn_clone_compatible(self):
        est = DepthMapRegressor(finetune_epochs=7)
        assert clone(est).get_params()["finetune_epochs"] == 7

    def test_deterministic_per_seed(self, small_dataset):
        _, images, depths, _ = small_dataset
        preds = []
        for _ in range(2):
            est = DepthMapRegressor(pretrain_size=8, pretrain_epochs=1,
                                    finetune_epochs=2, learning_rate=0.1,
                                    random_state=5)
            est.fit(images, depths)
            preds.append(est.predict(images[:2]))
        assert np.array_equal(preds[0], preds[1])


class TestSpoofDepthClassifier:
    def test_fit_predict_two_class(self, small_dataset):
        _, _, depths, labels = small_dataset
        y = (labels != 0).astype(np.int64)
        est = SpoofDepthClassifier(
            mode="two", epochs=4, learning_rate=0.05, pretrain_size=10,
            pretrain_epochs=1, pretrain_lr=0.02, random_state=1,
        )
        est.fit(depths, y)
        proba = est.predict_proba(depths[:5])
        assert proba.shape == (5, 2)
        assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-6)
        preds = est.predict(depths[:5])
        assert set(preds) <= {0, 1}
        assert np.array_equal(est.classes_, [0, 1])

    def test_multi_class_shape(self, small_dataset):
        _, _, depths, labels = small_dataset
        est = SpoofDepthClassifier(
            mode="multi", epochs=2, learning_rate=0.05, pretrain_size=10,
            pretrain_epochs=1, random_state=2,
        )
        est.fit(depths, labels)
        assert est.predict_proba(depths[:3]).shape == (3, 5)

    def test_score_uses_accuracy(self, small_dataset):
        _, _, depths, labels = small_dataset
        y = (labels != 0).astype(np.int64)
        est = SpoofDepthClassifier(mode="two", epochs=2, learning_rate=0.05,
                                   pretrain_epochs=0, random_state=3)
        est.fit(depths, y)
        s = est.score(depths, y)
        assert 0.0 <= s <= 1.0

    def test_clone_compatible(self):
        est = SpoofDepthClassifier(mode="multi", epochs=9)
        assert clone(est).get_params()["epochs"] == 9
