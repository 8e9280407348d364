"""lfpad: light-field finger-dorsal presentation attack detection.

Synthetic light-field capture with analytic depth ground truth, an
encoder-decoder depth regressor trained in two stages, a staged fine-tuned
spoof classifier, and the standard biometric evaluation suite
(FAR/FRR/TER/HTER/CRR plus CMC curves).
"""

from .codecs import (
    decode_depthmap,
    decode_lightfield,
    encode_depthmap,
    encode_lightfield,
)
from .estimators import DepthFromFocus, DepthMapRegressor, SpoofDepthClassifier
from .lightfield import ChannelLayout, LightField, RefocusStack, depth_from_focus, focus_measure, refocus
from .synth import AttackClass, LabeledSample, SceneSpec, heightfield, make_dataset, render_lightfield

__version__ = "0.1.0"

__all__ = [
    "AttackClass",
    "ChannelLayout",
    "DepthFromFocus",
    "DepthMapRegressor",
    "LabeledSample",
    "LightField",
    "RefocusStack",
    "SceneSpec",
    "SpoofDepthClassifier",
    "decode_depthmap",
    "decode_lightfield",
    "depth_from_focus",
    "encode_depthmap",
    "encode_lightfield",
    "focus_measure",
    "heightfield",
    "make_dataset",
    "refocus",
    "render_lightfield",
    "__version__",
]
