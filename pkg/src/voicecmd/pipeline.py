"""Clip-to-features glue shared by training, recognition, and the daemon."""

from .endpoint import EndpointParams, extract_word
from .features import FeatureParams, extract_features


def word_features(clip, endpoint_params=EndpointParams(), feature_params=FeatureParams()):
    """Endpoint ``clip``, keep the longest word, and return its features and segment."""
    word_clip, segment = extract_word(clip, endpoint_params)
    return extract_features(word_clip, feature_params), segment
