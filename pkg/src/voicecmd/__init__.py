"""Isolated-word voice commands with continuous left-to-right HMMs.

Pipeline: :mod:`~voicecmd.audio` (WAV and capture) ->
:mod:`~voicecmd.endpoint` (energy/ZCR word detection) ->
:mod:`~voicecmd.features` (MFCC + normalized energy) ->
:mod:`~voicecmd.hmm` (training, scoring, recognition) with models kept by
:mod:`~voicecmd.store`, and :mod:`~voicecmd.daemon` driving the listen loop.
"""

from .audio import AudioClip, load_wav, record, save_wav
from .endpoint import EndpointParams, Segment, detect_word_boundaries, extract_word
from .features import FeatureParams, FeatureSequence, extract_features, mfcc
from .hmm import (
    RecognitionResult,
    Status,
    TrainingConfig,
    WordHmm,
    fit_word_model,
    forward_log_likelihood,
    init_hmm,
    recognize,
    train_word_model,
    viterbi,
)
from .pipeline import word_features
from .store import ModelRegistry, load_registry, save_model

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "load_wav", "save_wav", "record",
    "EndpointParams", "Segment", "detect_word_boundaries", "extract_word",
    "FeatureParams", "FeatureSequence", "extract_features", "mfcc",
    "WordHmm", "TrainingConfig", "RecognitionResult", "Status",
    "init_hmm", "viterbi", "forward_log_likelihood", "fit_word_model",
    "train_word_model", "recognize",
    "ModelRegistry", "load_registry", "save_model", "word_features",
]
