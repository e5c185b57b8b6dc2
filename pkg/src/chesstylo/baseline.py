"""Opening-move baseline: games become sparse 4096-dimensional vectors of
from/to square indices, players become centroids, identification is cosine
nearest-centroid. Also supports the all-moves variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import SkipGame
from .evaluate import PlayerVector, identify, player_move_count, player_vector
from .pgn import GameRecord
from .rules import Move, parse_square

VECTOR_DIM = 4096


@dataclass
class MoveIndexVector:
    values: np.ndarray       # (4096,) non-negative counts
    n_moves: int


def move_to_index(move: str | Move) -> int:
    """64*from + to with a1=0..h8=63; promotion piece is ignored and castling
    uses the king's from/to squares (as in UCI)."""
    if isinstance(move, Move):
        frm, to = move.frm, move.to
    else:
        if move in ("0000", "", None):
            raise ValueError("null move has no index")
        frm, to = parse_square(move[:2]), parse_square(move[2:4])
    return 64 * frm + to


def _player_moves(record: GameRecord, player_id: str) -> list[str]:
    offset = 0 if record.player_color(player_id) == "white" else 1
    return record.moves[offset::2]


def _vector_from_moves(moves: list[str]) -> MoveIndexVector:
    values = np.zeros(VECTOR_DIM, dtype=np.float64)
    for uci in moves:
        values[move_to_index(uci)] += 1.0
    return MoveIndexVector(values, len(moves))


def game_vector_5hot(record: GameRecord, player_id: str, k: int = 0,
                     rng: np.random.Generator | None = None) -> MoveIndexVector:
    """Sum of one-hots for 5 sequential player moves starting at index k.

    With an rng, the 5-move window start is sampled uniformly from the
    available range instead of fixed at k (sensitivity-check mode).
    """
    moves = _player_moves(record, player_id)
    if len(moves) < k + 5:
        raise SkipGame(
            f"{player_id} made {len(moves)} moves in {record.game_id}; need {k + 5}")
    start = k
    if rng is not None and len(moves) > k + 5:
        start = int(rng.integers(k, len(moves) - 5 + 1))
    return _vector_from_moves(moves[start:start + 5])


def game_vector_all_moves(record: GameRecord, player_id: str,
                          k: int = 0) -> MoveIndexVector:
    """Sum of one-hots for all the player's moves from index k onward."""
    moves = _player_moves(record, player_id)
    if len(moves) <= k:
        raise SkipGame(
            f"{player_id} made {len(moves)} moves in {record.game_id}; k={k}")
    return _vector_from_moves(moves[k:])


def baseline_player_vector(vectors: list[MoveIndexVector],
                           player_id: str = "") -> PlayerVector:
    return player_vector([v.values for v in vectors], player_id)


baseline_identify = identify


class BaselineEmbedder:
    """Drop-in embedder for the evaluation harness; mode "5hot" or "all"."""

    def __init__(self, mode: str = "5hot"):
        if mode not in ("5hot", "all"):
            raise ValueError(f"unknown baseline mode {mode!r}")
        self.mode = mode

    def usable(self, record: GameRecord, player_id: str, k: int) -> bool:
        n = player_move_count(record, player_id)
        return n >= k + 5 if self.mode == "5hot" else n > k

    def game_vectors(self, pairs, k: int) -> np.ndarray:
        fn = game_vector_5hot if self.mode == "5hot" else game_vector_all_moves
        return np.stack([fn(record, pid, k).values for record, pid in pairs])
