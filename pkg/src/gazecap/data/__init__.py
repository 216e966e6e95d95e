"""Dataset formats, toy features, the synthetic scene generator and run configs."""

from .config import RunConfig, parse_config_file
from .dataset import Dataset, read_captions
from .features import FEATURE_DIM, FeatureFile, read_features, toy_extract, write_features
from .synth import SynthConfig, render_scene, synth_generate

__all__ = [
    "FEATURE_DIM",
    "Dataset",
    "FeatureFile",
    "RunConfig",
    "SynthConfig",
    "parse_config_file",
    "read_captions",
    "read_features",
    "render_scene",
    "synth_generate",
    "toy_extract",
    "write_features",
]
