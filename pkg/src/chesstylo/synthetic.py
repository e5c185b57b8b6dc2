"""Stylized deterministic bots and self-play corpus generation.

Each bot ranks legal moves by seeded piece-square tables plus a hashed
position jitter, with a seeded opening preference. Distinct style seeds
give distinct policies, providing ground-truth identities for end-to-end
stylometry verification without real data.
"""

from __future__ import annotations

import zlib

import numpy as np

from .pgn import GameRecord
from .rules import EMPTY, WK, WP, Board, Move

PIECE_VALUES = {1: 100, 2: 310, 3: 320, 4: 500, 5: 900, 6: 0}

# base piece-square tables, white perspective, row 0 = rank 1
_PAWN = [
    0, 0, 0, 0, 0, 0, 0, 0,
    5, 10, 10, -20, -20, 10, 10, 5,
    5, -5, -10, 0, 0, -10, -5, 5,
    0, 0, 0, 20, 20, 0, 0, 0,
    5, 5, 10, 25, 25, 10, 5, 5,
    10, 10, 20, 30, 30, 20, 10, 10,
    50, 50, 50, 50, 50, 50, 50, 50,
    0, 0, 0, 0, 0, 0, 0, 0,
]
_KNIGHT = [
    -50, -40, -30, -30, -30, -30, -40, -50,
    -40, -20, 0, 5, 5, 0, -20, -40,
    -30, 5, 10, 15, 15, 10, 5, -30,
    -30, 0, 15, 20, 20, 15, 0, -30,
    -30, 5, 15, 20, 20, 15, 5, -30,
    -30, 0, 10, 15, 15, 10, 0, -30,
    -40, -20, 0, 0, 0, 0, -20, -40,
    -50, -40, -30, -30, -30, -30, -40, -50,
]
_BISHOP = [
    -20, -10, -10, -10, -10, -10, -10, -20,
    -10, 5, 0, 0, 0, 0, 5, -10,
    -10, 10, 10, 10, 10, 10, 10, -10,
    -10, 0, 10, 10, 10, 10, 0, -10,
    -10, 5, 5, 10, 10, 5, 5, -10,
    -10, 0, 5, 10, 10, 5, 0, -10,
    -10, 0, 0, 0, 0, 0, 0, -10,
    -20, -10, -10, -10, -10, -10, -10, -20,
]
_ROOK = [
    0, 0, 0, 5, 5, 0, 0, 0,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    5, 10, 10, 10, 10, 10, 10, 5,
    0, 0, 0, 0, 0, 0, 0, 0,
]
_QUEEN = [
    -20, -10, -10, -5, -5, -10, -10, -20,
    -10, 0, 5, 0, 0, 0, 0, -10,
    -10, 5, 5, 5, 5, 5, 0, -10,
    0, 0, 5, 5, 5, 5, 0, -5,
    -5, 0, 5, 5, 5, 5, 0, -5,
    -10, 0, 5, 5, 5, 5, 0, -10,
    -10, 0, 0, 0, 0, 0, 0, -10,
    -20, -10, -10, -5, -5, -10, -10, -20,
]
_KING = [
    20, 30, 10, 0, 0, 10, 30, 20,
    20, 20, 0, 0, 0, 0, 20, 20,
    -10, -20, -20, -20, -20, -20, -20, -10,
    -20, -30, -30, -40, -40, -30, -30, -20,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
]
BASE_TABLES = np.array([_PAWN, _KNIGHT, _BISHOP, _ROOK, _QUEEN, _KING], dtype=np.float64)

# candidate scripted moves per own-move slot; each bot takes one per slot
WHITE_OPENING_CHOICES = [
    ["e2e4", "d2d4", "c2c4", "g1f3", "b1c3", "f2f4", "g2g3", "b2b3"],
    ["g1f3", "b1c3", "d2d4", "e2e4", "c2c4", "g2g3", "f2f4", "d2d3"],
    ["f1c4", "f1b5", "g2g3", "c2c3", "d2d3", "b1c3", "g1f3", "h2h3"],
    ["e1g1", "d2d3", "h2h3", "a2a3", "c1f4", "c1g5", "b2b4", "d1e2"],
    ["f1e1", "b1d2", "c2c3", "a2a4", "h2h4", "g2g4", "d1d2", "c1e3"],
]
BLACK_OPENING_CHOICES = [
    ["e7e5", "c7c5", "e7e6", "c7c6", "d7d5", "g8f6", "g7g6", "d7d6"],
    ["g8f6", "b8c6", "d7d6", "e7e6", "d7d5", "g7g6", "c7c6", "b7b6"],
    ["f8e7", "f8c5", "g7g6", "b8c6", "g8f6", "d7d6", "h7h6", "a7a6"],
    ["e8g8", "f8g7", "c8d7", "d8e7", "h7h6", "a7a6", "b7b5", "c8e6"],
    ["f8e8", "b8d7", "c7c6", "a7a5", "h7h5", "d8c7", "c8g4", "b7b6"],
]

OPENING_BONUS = 5000.0
STYLE_AMPLITUDE = 80.0
JITTER_SCALE = 30.0


class BotPolicy:
    """Deterministic seeded move policy with optional strength noise."""

    def __init__(self, style_seed: int, strength_noise: float = 0.0):
        self.style_seed = style_seed
        self.strength_noise = strength_noise
        rng = np.random.default_rng(style_seed)
        self.tables = BASE_TABLES + rng.uniform(
            -STYLE_AMPLITUDE, STYLE_AMPLITUDE, size=BASE_TABLES.shape)
        # odd multipliers permute Z/8, so no two bots share a slot preference
        self.white_line = [choices[(style_seed * (2 * slot + 1) + slot) % 8]
                           for slot, choices in enumerate(WHITE_OPENING_CHOICES)]
        self.black_line = [choices[(style_seed * (2 * slot + 1) + slot) % 8]
                           for slot, choices in enumerate(BLACK_OPENING_CHOICES)]
        self.bot_id = f"bot{style_seed:03d}"

    def _pst(self, piece: int, sq: int, as_white: bool) -> float:
        kind = piece if piece <= 6 else piece - 6
        if not as_white:
            sq = sq ^ 56  # mirror ranks
        return float(self.tables[kind - 1][sq])

    def _jitter(self, position_key: bytes, move: Move) -> float:
        h = zlib.crc32(position_key + move.uci().encode() +
                       self.style_seed.to_bytes(8, "little", signed=True))
        return (h / 0xFFFFFFFF) * JITTER_SCALE

    def score_move(self, board: Board, move: Move, own_move_index: int) -> float:
        white = board.white_to_move
        piece = board.board[move.frm]
        after_piece = piece if not move.promo else (move.promo if white else move.promo + 6)
        score = self._pst(after_piece, move.to, white) - self._pst(piece, move.frm, white)
        captured = board.board[move.to]
        if captured == EMPTY and (piece in (WP, WP + 6)) and move.to == board.ep_square:
            captured = 1
        if captured != EMPTY:
            kind = captured if captured <= 6 else captured - 6
            score += PIECE_VALUES[kind]
        if move.promo:
            score += PIECE_VALUES[move.promo]
        piece_kind = piece if piece <= 6 else piece - 6
        if piece_kind == WK and abs(move.to - move.frm) == 2:
            score += 40.0  # castling is usually tidy
        uci = move.uci()
        line = self.white_line if white else self.black_line
        if own_move_index < len(line) and uci == line[own_move_index]:
            score += OPENING_BONUS / (2 ** own_move_index)
        score += self._jitter(bytes(board.board), move)
        return score

    def select(self, board: Board, own_move_index: int,
               rng: np.random.Generator | None = None) -> Move:
        legal = board.legal_moves()
        if not legal:
            raise ValueError("no legal moves")
        ranked = sorted(legal,
                        key=lambda m: (-self.score_move(board, m, own_move_index),
                                       m.uci()))
        # book moves are memorized and never blundered
        in_book = own_move_index < len(self.white_line)
        if not in_book and self.strength_noise > 0 and rng is not None \
                and rng.random() < self.strength_noise:
            return ranked[int(rng.integers(0, min(3, len(ranked))))]
        return ranked[0]


def make_bot(style_seed: int, strength_noise: float = 0.0) -> BotPolicy:
    return BotPolicy(style_seed, strength_noise)


def play_game(white: BotPolicy, black: BotPolicy, seed: int,
              max_plies: int = 160) -> tuple[list[str], str]:
    """Self-play one game; returns (UCI moves, PGN result). Games past the
    ply cap are adjudicated as draws."""
    board = Board()
    rng = np.random.default_rng(seed)
    counts = {board.position_key(): 1}
    moves: list[str] = []
    own_index = [0, 0]
    while len(moves) < max_plies:
        bot = white if board.white_to_move else black
        side = 0 if board.white_to_move else 1
        if board.is_checkmate():
            return moves, "0-1" if board.white_to_move else "1-0"
        if board.is_stalemate() or board.has_insufficient_material() \
                or board.halfmove_clock >= 100:
            return moves, "1/2-1/2"
        mv = bot.select(board, own_index[side], rng)
        own_index[side] += 1
        board.push(mv)
        moves.append(mv.uci())
        key = board.position_key()
        counts[key] = counts.get(key, 0) + 1
        if counts[key] >= 3:
            return moves, "1/2-1/2"
    return moves, "1/2-1/2"


def generate_corpus(bots: list[BotPolicy], games_per_pair: int,
                    seed: int, max_plies: int = 160) -> list[GameRecord]:
    """Round-robin self-play: every bot pair plays games_per_pair games with
    alternating colors. Deterministic given seed."""
    if len(bots) < 2:
        raise ValueError("need at least 2 bots")
    records = []
    for i in range(len(bots)):
        for j in range(i + 1, len(bots)):
            for g in range(games_per_pair):
                if g % 2 == 0:
                    w, b = bots[i], bots[j]
                else:
                    w, b = bots[j], bots[i]
                game_seed = (seed * 1_000_003 + i * 10_007 + j * 101 + g) & 0x7FFFFFFF
                moves, result = play_game(w, b, game_seed,
                                          max_plies=max_plies)
                records.append(GameRecord(
                    game_id=f"synth-{w.bot_id}-{b.bot_id}-{g:04d}",
                    white_id=w.bot_id,
                    black_id=b.bot_id,
                    moves=moves,
                    time_control_seconds=300,
                    white_rating=1500,
                    black_rating=1500,
                    date="2020-01-01",
                ))
    return records


def records_to_pgn(records: list[GameRecord]) -> str:
    """Render records as standard PGN (SAN regenerated via the rules engine)."""
    chunks = []
    for rec in records:
        board = Board()
        sans = []
        for uci in rec.moves:
            mv = Move.from_uci(uci)
            sans.append(board.san(mv))
            board.push(mv)
        movetext = []
        for n, san in enumerate(sans):
            if n % 2 == 0:
                movetext.append(f"{n // 2 + 1}.")
            movetext.append(san)
        headers = [
            ("Event", "Synthetic self-play"),
            ("Site", f"synthetic/{rec.game_id}"),
            ("Date", rec.date or "????.??.??"),
            ("White", rec.white_id),
            ("Black", rec.black_id),
            ("Result", "*"),
            ("WhiteElo", str(rec.white_rating or "?")),
            ("BlackElo", str(rec.black_rating or "?")),
            ("TimeControl", f"{rec.time_control_seconds}+0"),
            ("GameId", rec.game_id),
        ]
        head = "\n".join(f'[{k} "{v}"]' for k, v in headers)
        chunks.append(head + "\n\n" + " ".join(movetext) + " *\n")
    return "\n".join(chunks)
