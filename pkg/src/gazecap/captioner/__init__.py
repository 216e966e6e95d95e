"""Attention LSTM captioner: model, decoding, training and checkpoints."""

from .decode import Hypothesis, ScoredCaption, beam_decode, beam_search, decode, greedy_batch
from .model import (
    MODEL_VARIANTS,
    AttentionTrace,
    BatchLoss,
    CaptionerParams,
    ModelConfig,
    batch_loss,
    decoder_step,
    init_params,
    init_state,
    lstm_step,
    sequence_loss,
    word_distribution,
)
from .train import EpochLog, Example, Trainer, TrainConfig, TrainingDiverged, TrainResult, train, validation_bleu1
from .vocab import Vocabulary

__all__ = [
    "MODEL_VARIANTS",
    "AttentionTrace",
    "BatchLoss",
    "CaptionerParams",
    "EpochLog",
    "Example",
    "Hypothesis",
    "ModelConfig",
    "ScoredCaption",
    "TrainConfig",
    "TrainResult",
    "Trainer",
    "TrainingDiverged",
    "Vocabulary",
    "batch_loss",
    "beam_decode",
    "beam_search",
    "decode",
    "decoder_step",
    "greedy_batch",
    "init_params",
    "init_state",
    "lstm_step",
    "sequence_loss",
    "train",
    "validation_bleu1",
    "word_distribution",
]
