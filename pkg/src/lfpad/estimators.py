"""Estimator-style wrappers so the models compose with the wider ecosystem.

Three surfaces follow the fit/transform/predict convention with
``get_params``/``set_params`` from :class:`sklearn.base.BaseEstimator`:

* :class:`DepthFromFocus` - stateless transformer, light fields to depth maps
* :class:`DepthMapRegressor` - two-stage trained image-to-depth regressor
* :class:`SpoofDepthClassifier` - staged fine-tuned attack classifier
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import depthnet, spoofclf, synth
from .lightfield import LightField, depth_from_focus
from .validation import check_image_stack


class DepthFromFocus(TransformerMixin, BaseEstimator):
    """Depth maps from light fields via the sharpest slice of a refocus stack.

    Stateless: ``fit`` only validates parameters. ``transform`` accepts a
    single :class:`LightField` or a sequence of them and returns an
    ``(n, h, w)`` array of depth maps in [0, 1].
    """

    def __init__(self, alphas=tuple(np.linspace(0.0, synth.DISPARITY_PER_DEPTH, 13)),
                 window: int = 9):
        self.alphas = alphas
        self.window = window

    def fit(self, X=None, y=None):
        alphas = [float(a) for a in self.alphas]
        if len(alphas) < 2 or any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alphas must be strictly increasing with >= 2 entries")
        return self

    def transform(self, X):
        self.fit()
        fields = [X] if isinstance(X, LightField) else list(X)
        maps = [depth_from_focus(lf, list(self.alphas), self.window) for lf in fields]
        return np.stack(maps)


class DepthMapRegressor(BaseEstimator):
    """Image-to-depth regressor with a generic pretrain stage before fit.

    ``fit(X, y)`` first trains on an internally generated corpus of smooth
    synthetic surfaces, then fine-tunes on the provided images/depths.
    Set ``pretrain_epochs=0`` to train from scratch.
    """

    def __init__(self, width_scale: float = 0.25, pretrain_size: int = 80,
                 pretrain_epochs: int = 220, pretrain_res: int = 32,
                 finetune_epochs: int = 90, learning_rate: float = 0.15,
                 finetune_lr: float = 0.1, batch_size: int = 4,
                 random_state: int = 0):
        self.width_scale = width_scale
        self.pretrain_size = pretrain_size
        self.pretrain_epochs = pretrain_epochs
        self.pretrain_res = pretrain_res
        self.finetune_epochs = finetune_epochs
        self.learning_rate = learning_rate
        self.finetune_lr = finetune_lr
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        X = check_image_stack(X, "X")
        y = check_image_stack(y, "y")
        h, w = X.shape[1:]
        config = depthnet.DepthNetConfig((h, w), self.width_scale)
        self.net_ = depthnet.build_depthnet(config, seed=self.random_state)
        corpus_seed = int(
            np.random.SeedSequence([self.random_state, 100]).generate_state(1)[0]
        )
        self.pretrain_loss_: list[float] = []
        if self.pretrain_epochs > 0:
            res = min(self.pretrain_res, h, w)
            gi, gd = synth.make_generic_depth_corpus(self.pretrain_size, res, res, corpus_seed)
            self.pretrain_loss_ = depthnet.train_depthnet(
                self.net_, gi, gd,
                depthnet.TrainRecipe("pretrain", self.pretrain_epochs, self.learning_rate),
                seed=self.random_state, batch_size=self.batch_size,
            )
        self.finetune_loss_ = depthnet.train_depthnet(
            self.net_, X, y,
            depthnet.TrainRecipe("finetune", self.finetune_epochs, self.finetune_lr),
            seed=self.random_state, batch_size=self.batch_size,
        )
        return self

    def predict(self, X):
        X = check_image_stack(X, "X")
        return depthnet.predict_depth_batch(self.net_, X, batch_size=self.batch_size)

    def score(self, X, y):
        """Negative mean squared error (higher is better)."""
        y = check_image_stack(y, "y")
        pred = self.predict(X)
        return -float(np.mean((pred - y) ** 2))


class SpoofDepthClassifier(ClassifierMixin, BaseEstimator):
    """Attack classifier over depth maps with backbone pretrain + head fine-tune."""

    def __init__(self, mode: str = "two", width_scale: float = 0.125,
                 epochs: int | None = None,
                 learning_rate: float = spoofclf.DEFAULT_LEARNING_RATE,
                 batch_size: int = 8, pretrain_size: int = 60,
                 pretrain_epochs: int = 8, pretrain_lr: float = 0.01,
                 augment: bool = False, random_state: int = 0):
        self.mode = mode
        self.width_scale = width_scale
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.pretrain_size = pretrain_size
        self.pretrain_epochs = pretrain_epochs
        self.pretrain_lr = pretrain_lr
        self.augment = augment
        self.random_state = random_state

    def fit(self, X, y):
        X = check_image_stack(X, "X")
        y = np.asarray(y, dtype=np.int64)
        h, w = X.shape[1:]
        config = spoofclf.ClassifierConfig(self.mode, (h, w), self.width_scale)
        self.classes_ = np.arange(config.n_classes)
        self.net_ = spoofclf.build_classifier(config, seed=self.random_state)
        corpus_seed = int(
            np.random.SeedSequence([self.random_state, 101]).generate_state(1)[0]
        )
        self.pretrain_loss_: list[float] = []
        if self.pretrain_epochs > 0:
            gi, gl = synth.make_generic_shape_corpus(self.pretrain_size, h, w, corpus_seed)
            self.pretrain_loss_ = spoofclf.pretrain_backbone(
                self.net_, gi, gl, epochs=self.pretrain_epochs,
                learning_rate=self.pretrain_lr, seed=self.random_state,
                batch_size=self.batch_size,
            )
        epochs = spoofclf.DEFAULT_EPOCHS[self.mode] if self.epochs is None else self.epochs
        self.finetune_loss_ = spoofclf.finetune(
            self.net_, X, y, epochs=epochs, learning_rate=self.learning_rate,
            seed=self.random_state, batch_size=self.batch_size, augment=self.augment,
        )
        return self

    def predict_proba(self, X):
        X = check_image_stack(X, "X")
        return spoofclf.predict_batch(self.net_, X, batch_size=self.batch_size)

    def predict(self, X):
        proba = self.predict_proba(X)
        return np.array([spoofclf.rank_classes(p)[0] for p in proba], dtype=np.int64)
