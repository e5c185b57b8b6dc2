"""Behavioral stylometry for chess: learn per-game style embeddings and
identify players by cosine nearest-centroid over small game sets."""

__version__ = "0.1.0"

from .encoder import EncoderConfig, GameEncoder, init_encoder, positional_encoding
from .encoding import GameSequence, SkipGame, encode_game, encode_move, pad_or_window
from .extractor import ExtractorConfig, MoveFeatureExtractor, init_extractor
from .ge2e import GE2ECriterion, centroid_excluding, ge2e_loss, similarity_matrix
from .pgn import FilterConfig, GameRecord, filter_games, parse_pgn, split_player
from .train import CorpusIndex, TrainConfig, Trainer, learning_rate, sample_episode

__all__ = [
    "CorpusIndex", "EncoderConfig", "ExtractorConfig", "FilterConfig",
    "GE2ECriterion", "GameEncoder", "GameRecord", "GameSequence",
    "MoveFeatureExtractor", "SkipGame", "TrainConfig", "Trainer",
    "centroid_excluding", "encode_game", "encode_move", "filter_games",
    "ge2e_loss", "init_encoder", "init_extractor", "learning_rate",
    "pad_or_window", "parse_pgn", "positional_encoding", "sample_episode",
    "similarity_matrix", "split_player",
]
