"""Graph cepstrum features for partially synchronized distributed microphones."""

from ._backend import BACKEND
from .audio_io import AudioClip, load_manifest, load_wav, segment_clips, write_wav
from .dsp import StftParams, StftTensor, channel_log_vectors, freq_log_vectors, stft
from .features import (
    FeatureSequence,
    PcaBasis,
    basis_similarity,
    cepstrum,
    fit_pca_basis,
    graph_cepstrum,
    spatial_cepstrum,
)
from .gmm import GmmModel, classify_clip, evaluate, train_gmm
from .graph import GraphBasis, MicGraph, graph_basis, laplacian
from .sync_sim import DesyncSpec, SceneSpec, Source, inject_desync, synthesize_scene

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AudioClip",
    "DesyncSpec",
    "FeatureSequence",
    "GmmModel",
    "GraphBasis",
    "MicGraph",
    "PcaBasis",
    "SceneSpec",
    "Source",
    "StftParams",
    "StftTensor",
    "basis_similarity",
    "cepstrum",
    "channel_log_vectors",
    "classify_clip",
    "evaluate",
    "fit_pca_basis",
    "freq_log_vectors",
    "graph_basis",
    "graph_cepstrum",
    "inject_desync",
    "laplacian",
    "load_manifest",
    "load_wav",
    "segment_clips",
    "spatial_cepstrum",
    "stft",
    "synthesize_scene",
    "train_gmm",
    "write_wav",
]
