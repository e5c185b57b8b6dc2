"""Move-tensor encoding tests.

The piece-plane oracle below replays UCI moves with a plain 64-entry piece
map and explicit loops. It shares no code with the rules engine, so a bug in
move generation or plane layout cannot cancel itself out.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chesstylo.encoding import (BORDER_PLANE, NUM_CHANNELS, EncodingError,
                                GameSequence, SkipGame, encode_game,
                                encode_move, pack_game, pad_or_window,
                                read_sequence_cache, write_sequence_cache)
from chesstylo.pgn import GameRecord
from chesstylo.rules import Board
from chesstylo.synthetic import generate_corpus, make_bot

# ---------------------------------------------------------------------------
# oracle: dictionary-based UCI replayer

_START = {}
for f, ch in enumerate("RNBQKBNR"):
    _START[f] = ch
    _START[8 + f] = "P"
    _START[48 + f] = "p"
    _START[56 + f] = ch.lower()


def _sq(name):
    return (ord(name[0]) - ord("a")) + 8 * (int(name[1]) - 1)


def oracle_replay(ucis):
    """Yield the piece map after each move, starting from the move-0 map."""
    pieces = dict(_START)
    yield dict(pieces)
    for uci in ucis:
        frm, to = _sq(uci[:2]), _sq(uci[2:4])
        piece = pieces.pop(frm)
        if piece in "Kk" and abs(to - frm) == 2:  # castling: move the rook too
            rook_from = to + 1 if to > frm else to - 2
            rook_to = (frm + to) // 2
            pieces[rook_to] = pieces.pop(rook_from)
        if piece in "Pp" and to % 8 != frm % 8 and to not in pieces:
            victim = to - 8 if piece == "P" else to + 8  # en passant
            del pieces[victim]
        pieces[to] = piece
        if len(uci) == 5:  # promotion
            pieces[to] = uci[4].upper() if piece == "P" else uci[4].lower()
        yield dict(pieces)


_PLANE_OF = {ch: i for i, ch in enumerate("PNBRQKpnbrqk")}


def oracle_piece_planes(pieces):
    planes = np.zeros((12, 8, 8), dtype=np.float32)
    for sq, ch in pieces.items():
        planes[_PLANE_OF[ch], sq // 8, sq % 8] = 1.0
    return planes


# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus():
    bots = [make_bot(i, strength_noise=0.1) for i in range(4)]
    return generate_corpus(bots, games_per_pair=4, seed=11)


def _check_game_planes(rec, player_id):
    seq = encode_game(rec, player_id)
    maps = list(oracle_replay(rec.moves))
    target_white = rec.white_id == player_id
    own_idx = 0
    for ply in range(len(rec.moves)):
        white_moves = ply % 2 == 0
        if white_moves != target_white:
            continue
        before = oracle_piece_planes(maps[ply])
        after = oracle_piece_planes(maps[ply + 1])
        np.testing.assert_array_equal(seq.planes[own_idx, 0:12], before)
        np.testing.assert_array_equal(seq.planes[own_idx, 12:24], after)
        own_idx += 1
    assert own_idx == len(seq)


class TestPiecePlanesAgainstOracle:
    def test_sample_games_both_colors(self, corpus):
        for rec in corpus[:20]:
            _check_game_planes(rec, rec.white_id)
            _check_game_planes(rec, rec.black_id)


class TestAuxiliaryChannels:
    def test_start_position_channels(self):
        board = Board()
        after = Board()
        after.push_uci("e2e4")
        planes = encode_move(board, after)
        assert planes.shape == (NUM_CHANNELS, 8, 8)
        for ch in (26, 27, 28, 29, 30, 33):  # castling KQkq, side, ones
            np.testing.assert_array_equal(planes[ch], 1.0)
        np.testing.assert_array_equal(planes[24], 0.0)  # no repetition
        np.testing.assert_array_equal(planes[25], 0.0)
        np.testing.assert_array_equal(planes[31], 0.0)  # halfmove clock 0
        np.testing.assert_array_equal(planes[32], BORDER_PLANE)

    def test_border_mask_is_28_edge_squares(self):
        assert BORDER_PLANE.sum() == 28
        assert BORDER_PLANE[0, 0] == BORDER_PLANE[7, 7] == 1.0
        assert BORDER_PLANE[3, 3] == 0.0

    def test_side_to_move_black(self):
        board = Board()
        board.push_uci("e2e4")
        after = board.copy()
        after.push_uci("e7e5")
        planes = encode_move(board, after)
        np.testing.assert_array_equal(planes[30], 0.0)

    def test_castling_rights_degrade(self):
        board = Board()
        board.set_fen("r3k2r/8/8/8/8/8/8/R3K2R w Kq - 0 1")
        after = board.copy()
        after.push_uci("e1g1")
        planes = encode_move(board, after)
        np.testing.assert_array_equal(planes[26], 1.0)  # K
        np.testing.assert_array_equal(planes[27], 0.0)  # Q gone
        np.testing.assert_array_equal(planes[28], 0.0)  # k gone
        np.testing.assert_array_equal(planes[29], 1.0)  # q

    def test_halfmove_clock_scaled_and_clipped(self):
        board = Board()
        board.set_fen("k7/8/8/8/8/8/8/KR6 w - - 37 40")
        after = board.copy()
        after.push_uci("b1b2")
        planes = encode_move(board, after)
        np.testing.assert_allclose(planes[31], 0.37)
        board.set_fen("k7/8/8/8/8/8/8/KR6 w - - 150 80")
        after = board.copy()
        after.push_uci("b1b2")
        np.testing.assert_array_equal(encode_move(board, after)[31], 1.0)

    def test_repetition_flags(self):
        moves = ["g1f3", "g8f6", "f3g1", "f6g8", "g1f3", "g8f6"]
        rec = GameRecord(game_id="rep", white_id="w", black_id="b", moves=moves,
                         time_control_seconds=None, white_rating=None,
                         black_rating=None, date=None)
        seq = encode_game(rec, "w")
        # white's third move recreates a twice-seen position on both sides
        assert seq.planes[2, 24].max() == 1.0
        assert seq.planes[2, 25].max() == 1.0
        assert seq.planes[0, 24].max() == 0.0

    def test_illegal_transition_rejected(self):
        board = Board()
        after = Board()
        after.push_uci("e2e4")
        after.push_uci("e7e5")
        with pytest.raises(EncodingError):
            encode_move(board, after)


class TestTruncation:
    def test_k_composition(self, corpus):
        """Encoding at k then windowing equals encoding the truncated view."""
        rec = corpus[0]
        for k in (0, 5, 15):
            full = encode_game(rec, rec.white_id)
            if len(full) <= k:
                pytest.skip("sample game too short")
            trunc = encode_game(rec, rec.white_id, k=k)
            np.testing.assert_array_equal(trunc.planes, full.planes[k:])
            assert trunc.k_start == k

    def test_skip_game_when_too_short(self):
        rec = GameRecord(game_id="short", white_id="w", black_id="b",
                         moves=["e2e4", "e7e5"], time_control_seconds=None,
                         white_rating=None, black_rating=None, date=None)
        with pytest.raises(SkipGame):
            encode_game(rec, "w", k=1)

    def test_packed_matches_encode_game(self, corpus):
        rec = corpus[1]
        packed = pack_game(rec, rec.black_id)
        np.testing.assert_array_equal(packed.to_sequence(0).planes,
                                      encode_game(rec, rec.black_id).planes)


def _random_sequence(rng, n):
    return GameSequence(planes=rng.random((n, NUM_CHANNELS, 8, 8), dtype=np.float32),
                        mask=np.ones(n, dtype=bool), player_id="p", color="white",
                        k_start=0, game_id="g")


class TestPadOrWindow:
    @given(n=st.integers(1, 90), length=st.integers(1, 48), seed=st.integers(0, 99))
    @settings(max_examples=40, deadline=None)
    def test_shape_and_mask(self, n, length, seed):
        rng = np.random.default_rng(seed)
        seq = _random_sequence(rng, n)
        out = pad_or_window(seq, length, rng)
        assert len(out) == length
        assert out.mask.sum() == min(n, length)
        assert out.mask[:out.mask.sum()].all()  # true prefix

    def test_window_is_contiguous_slice(self):
        rng = np.random.default_rng(0)
        seq = _random_sequence(rng, 40)
        out = pad_or_window(seq, 16, rng)
        offset = out.k_start - seq.k_start
        np.testing.assert_array_equal(out.planes, seq.planes[offset:offset + 16])

    def test_padding_is_zero(self):
        rng = np.random.default_rng(0)
        seq = _random_sequence(rng, 5)
        out = pad_or_window(seq, 12, rng)
        np.testing.assert_array_equal(out.planes[5:], 0.0)

    def test_bad_length(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            pad_or_window(_random_sequence(rng, 4), 0, rng)


class TestCache:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        seqs = [_random_sequence(rng, n) for n in (4, 9, 1)]
        path = tmp_path / "seqs.bin"
        write_sequence_cache(path, seqs)
        back = read_sequence_cache(path)
        assert len(back) == 3
        for a, b in zip(seqs, back):
            np.testing.assert_array_equal(a.planes, b.planes)
            np.testing.assert_array_equal(a.mask, b.mask)
            assert a.player_id == b.player_id

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(OSError):
            read_sequence_cache(path)
