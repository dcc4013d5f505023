"""Simultaneous translation with Gaussian multi-head attention, at desk scale."""

from .attention import GmaConfig, TrackLayout, track_count
from .data import ParallelCorpus, Vocabulary, build_vocab, make_synthetic
from .kernels import BACKEND
from .model import GmaTransformer, ModelConfig
from .policy import PolicyTrace, simulate_streaming, validate_trace, wait_k_trace

__version__ = "0.1.0"

__all__ = ["GmaConfig", "TrackLayout", "track_count", "ParallelCorpus", "Vocabulary",
           "build_vocab", "make_synthetic", "BACKEND", "GmaTransformer", "ModelConfig",
           "PolicyTrace", "simulate_streaming", "validate_trace", "wait_k_trace"]
