"""Move and game encoding into the 34-channel 8x8 input representation.

Channel map:
  0-11   piece planes of the board before the move (P,N,B,R,Q,K white then black)
  12-23  piece planes of the board after the move
  24-25  repetition flags for the before/after positions
  26-29  castling rights K,Q,k,q before the move (constant planes)
  30     side to move before the move (all ones if white)
  31     halfmove clock / 100, clipped to 1 (constant plane)
  32     border mask (the 28 edge squares)
  33     all ones

Boards are absolute orientation: row 0 is rank 1 for both colors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .pgn import GameRecord
from .rules import (CASTLE_BK, CASTLE_BQ, CASTLE_WK, CASTLE_WQ, Board, Move)

NUM_CHANNELS = 34

BORDER_PLANE = np.zeros((8, 8), dtype=np.float32)
BORDER_PLANE[0, :] = BORDER_PLANE[7, :] = 1.0
BORDER_PLANE[:, 0] = BORDER_PLANE[:, 7] = 1.0

CACHE_MAGIC = b"CTSQ"
CACHE_VERSION = 1


class SkipGame(Exception):
    """The target player has too few moves at this truncation to encode."""


class EncodingError(Exception):
    pass


@dataclass
class GameSequence:
    planes: np.ndarray          # (L, 34, 8, 8) float32
    mask: np.ndarray            # (L,) bool; trues are a prefix
    player_id: str
    color: str                  # "white" | "black"
    k_start: int = 0
    game_id: str = ""

    def __len__(self) -> int:
        return len(self.planes)


@dataclass
class PackedGame:
    """Compact per-move snapshots of one player's moves in one game.

    Planes are materialized on demand; this keeps large corpora in memory
    at ~140 bytes per move instead of ~8.5 KB.
    """
    boards: np.ndarray          # (L, 2, 64) uint8 piece codes, before/after
    reps: np.ndarray            # (L, 2) bool repetition flags
    castling: np.ndarray        # (L,) uint8 rights bitmask before the move
    white_to_move: bool
    halfmove: np.ndarray        # (L,) uint16 halfmove clock before the move
    player_id: str
    game_id: str

    def __len__(self) -> int:
        return len(self.boards)

    @property
    def color(self) -> str:
        return "white" if self.white_to_move else "black"

    def to_planes(self, start: int = 0, length: int | None = None) -> np.ndarray:
        stop = len(self) if length is None else min(start + length, len(self))
        n = stop - start
        planes = np.zeros((n, NUM_CHANNELS, 8, 8), dtype=np.float32)
        boards = self.boards[start:stop].reshape(n, 2, 8, 8)
        for snap in range(2):
            base = 12 * snap
            snap_boards = boards[:, snap]
            for code in range(1, 13):
                planes[:, base + code - 1] = snap_boards == code
        planes[:, 24] = self.reps[start:stop, 0, None, None]
        planes[:, 25] = self.reps[start:stop, 1, None, None]
        castling = self.castling[start:stop]
        for i, bit in enumerate((CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ)):
            planes[:, 26 + i] = ((castling & bit) > 0)[:, None, None]
        if self.white_to_move:
            planes[:, 30] = 1.0
        planes[:, 31] = np.clip(self.halfmove[start:stop] / 100.0, 0.0, 1.0)[:, None, None]
        planes[:, 32] = BORDER_PLANE
        planes[:, 33] = 1.0
        return planes

    def to_sequence(self, k: int = 0) -> GameSequence:
        if len(self) <= k:
            raise SkipGame(
                f"player {self.player_id} made {len(self)} moves in {self.game_id}; k={k}")
        return GameSequence(
            planes=self.to_planes(start=k),
            mask=np.ones(len(self) - k, dtype=bool),
            player_id=self.player_id,
            color=self.color,
            k_start=k,
            game_id=self.game_id,
        )


def pack_game(record: GameRecord, player_id: str) -> PackedGame:
    """Replay a game and collect snapshots for every move of player_id."""
    color = record.player_color(player_id)
    target_white = color == "white"
    board = Board()
    seen: dict = {board.position_key(): 1}
    boards, reps, castlings, halfmoves = [], [], [], []
    for uci in record.moves:
        mover_white = board.white_to_move
        if mover_white == target_white:
            before = bytes(board.board)
            rep_before = seen[board.position_key()] >= 2
            castling = board.castling
            halfmove = board.halfmove_clock
            board.push(Move.from_uci(uci))
            key = board.position_key()
            seen[key] = seen.get(key, 0) + 1
            boards.append((before, bytes(board.board)))
            reps.append((rep_before, seen[key] >= 2))
            castlings.append(castling)
            halfmoves.append(halfmove)
        else:
            board.push(Move.from_uci(uci))
            key = board.position_key()
            seen[key] = seen.get(key, 0) + 1
    board_arr = np.frombuffer(b"".join(b for pair in boards for b in pair),
                              dtype=np.uint8).reshape(len(boards), 2, 64).copy() \
        if boards else np.zeros((0, 2, 64), dtype=np.uint8)
    return PackedGame(
        boards=board_arr,
        reps=np.array(reps, dtype=bool).reshape(len(boards), 2),
        castling=np.array(castlings, dtype=np.uint8),
        white_to_move=target_white,
        halfmove=np.array(halfmoves, dtype=np.uint16),
        player_id=player_id,
        game_id=record.game_id,
    )


def encode_move(board_before: Board, board_after: Board,
                repetition_before: bool = False,
                repetition_after: bool = False) -> np.ndarray:
    """Encode a single legal transition into a (34, 8, 8) plane stack."""
    for mv in board_before.legal_moves():
        board_before.push(mv)
        same = board_before.board == board_after.board
        board_before.pop()
        if same:
            break
    else:
        raise EncodingError(
            f"no legal move of {board_before.fen()!r} yields {board_after.fen()!r}")
    packed = PackedGame(
        boards=np.frombuffer(bytes(board_before.board) + bytes(board_after.board),
                             dtype=np.uint8).reshape(1, 2, 64).copy(),
        reps=np.array([[repetition_before, repetition_after]]),
        castling=np.array([board_before.castling], dtype=np.uint8),
        white_to_move=board_before.white_to_move,
        halfmove=np.array([board_before.halfmove_clock], dtype=np.uint16),
        player_id="",
        game_id="",
    )
    return packed.to_planes()[0]


def encode_game(record: GameRecord, player_id: str, k: int = 0) -> GameSequence:
    """Encode the target player's moves from index k onward; raises SkipGame
    if the player made <= k moves."""
    return pack_game(record, player_id).to_sequence(k)


def pad_or_window(seq: GameSequence, length: int,
                  rng: np.random.Generator) -> GameSequence:
    """Random contiguous window if too long, zero-padding if too short."""
    if length < 1:
        raise ValueError("length must be >= 1")
    n = len(seq)
    if n > length:
        start = int(rng.integers(0, n - length + 1))
        return replace(seq,
                       planes=seq.planes[start:start + length],
                       mask=seq.mask[start:start + length],
                       k_start=seq.k_start + start)
    if n == length:
        return seq
    pad = length - n
    planes = np.concatenate(
        [seq.planes, np.zeros((pad,) + seq.planes.shape[1:], dtype=seq.planes.dtype)])
    mask = np.concatenate([seq.mask, np.zeros(pad, dtype=bool)])
    return replace(seq, planes=planes, mask=mask)


def write_sequence_cache(path, sequences: list[GameSequence]) -> None:
    """Binary container: magic, version, dims, then per-sequence float32 planes."""
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<III", CACHE_VERSION, NUM_CHANNELS, len(sequences)))
        for seq in sequences:
            pid = seq.player_id.encode()
            gid = seq.game_id.encode()
            fh.write(struct.pack("<HH", len(pid), len(gid)))
            fh.write(pid)
            fh.write(gid)
            fh.write(struct.pack("<BiI", seq.color == "white", seq.k_start, len(seq)))
            fh.write(np.packbits(seq.mask).tobytes())
            fh.write(seq.planes.astype("<f4").tobytes())


def read_sequence_cache(path) -> list[GameSequence]:
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise IOError(f"{path}: not a sequence cache file")
        version, channels, count = struct.unpack("<III", fh.read(12))
        if version != CACHE_VERSION:
            raise IOError(f"{path}: unsupported cache version {version}")
        sequences = []
        for _ in range(count):
            pid_len, gid_len = struct.unpack("<HH", fh.read(4))
            pid = fh.read(pid_len).decode()
            gid = fh.read(gid_len).decode()
            white, k_start, length = struct.unpack("<BiI", fh.read(9))
            mask = np.unpackbits(
                np.frombuffer(fh.read((length + 7) // 8), dtype=np.uint8))[:length].astype(bool)
            planes = np.frombuffer(fh.read(length * channels * 64 * 4), dtype="<f4")
            planes = planes.reshape(length, channels, 8, 8).copy()
            sequences.append(GameSequence(planes=planes, mask=mask, player_id=pid,
                                          color="white" if white else "black",
                                          k_start=k_start, game_id=gid))
    return sequences
