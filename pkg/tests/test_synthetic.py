"""Stylized bot and corpus generation tests."""

import numpy as np
import pytest

from chesstylo.pgn import ParseStats, parse_pgn
from chesstylo.rules import Board, Move
from chesstylo.synthetic import (BASE_TABLES, BotPolicy, generate_corpus,
                                 make_bot, play_game, records_to_pgn)
import io


class TestBotPolicy:
    def test_deterministic_construction(self):
        a, b = make_bot(3), make_bot(3)
        np.testing.assert_array_equal(a.tables, b.tables)
        assert a.white_line == b.white_line
        assert a.black_line == b.black_line

    def test_distinct_styles(self):
        a, b = make_bot(0), make_bot(1)
        assert not np.allclose(a.tables, b.tables)
        assert a.white_line != b.white_line

    def test_opening_slots_distinct_across_bots(self):
        bots = [make_bot(i) for i in range(8)]
        for slot in range(len(bots[0].white_line)):
            assert len({bot.white_line[slot] for bot in bots}) == 8
            assert len({bot.black_line[slot] for bot in bots}) == 8

    def test_perturbation_bounded(self):
        bot = make_bot(5)
        from chesstylo.synthetic import STYLE_AMPLITUDE
        assert np.abs(bot.tables - BASE_TABLES).max() <= STYLE_AMPLITUDE

    def test_first_move_follows_book(self):
        for seed in range(8):
            bot = make_bot(seed)
            mv = bot.select(Board(), own_move_index=0)
            assert mv.uci() == bot.white_line[0]

    def test_selection_deterministic_without_noise(self):
        bot = make_bot(2)
        board = Board()
        board.push_uci("e2e4")
        board.push_uci("e7e5")
        a = bot.select(board, own_move_index=1)
        b = bot.select(board, own_move_index=1)
        assert a == b

    def test_noise_requires_rng(self):
        bot = BotPolicy(1, strength_noise=0.5)
        mv = bot.select(Board(), own_move_index=0, rng=None)
        assert mv.uci() == bot.white_line[0]  # no rng -> deterministic path

    def test_book_moves_never_noisy(self):
        bot = BotPolicy(1, strength_noise=1.0)
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert bot.select(Board(), 0, rng).uci() == bot.white_line[0]


class TestPlayGame:
    def test_game_is_legal_and_terminates(self):
        moves, result = play_game(make_bot(0, 0.1), make_bot(1, 0.1), seed=5)
        assert result in ("1-0", "0-1", "1/2-1/2")
        board = Board()
        for uci in moves:  # raises if any move is illegal
            board.push_uci(uci)

    def test_deterministic_given_seed(self):
        a = play_game(make_bot(0, 0.2), make_bot(1, 0.2), seed=9)
        b = play_game(make_bot(0, 0.2), make_bot(1, 0.2), seed=9)
        assert a == b

    def test_ply_cap(self):
        moves, _ = play_game(make_bot(0), make_bot(1), seed=1, max_plies=30)
        assert len(moves) <= 30


class TestGenerateCorpus:
    def test_round_robin_counts(self):
        bots = [make_bot(i, 0.1) for i in range(3)]
        records = generate_corpus(bots, games_per_pair=4, seed=2)
        assert len(records) == 3 * 4  # 3 pairs x 4 games
        per_bot = {}
        for rec in records:
            for pid in (rec.white_id, rec.black_id):
                per_bot[pid] = per_bot.get(pid, 0) + 1
        assert all(v == 8 for v in per_bot.values())

    def test_colors_alternate(self):
        bots = [make_bot(i) for i in range(2)]
        records = generate_corpus(bots, games_per_pair=4, seed=2)
        whites = [r.white_id for r in records]
        assert whites[0] != whites[1]

    def test_deterministic(self):
        bots = [make_bot(i, 0.1) for i in range(2)]
        a = generate_corpus(bots, 2, seed=4)
        b = generate_corpus(bots, 2, seed=4)
        assert [r.moves for r in a] == [r.moves for r in b]

    def test_needs_two_bots(self):
        with pytest.raises(ValueError):
            generate_corpus([make_bot(0)], 2, seed=0)


class TestPgnEmission:
    def test_round_trip_through_parser(self):
        bots = [make_bot(i, 0.1) for i in range(2)]
        records = generate_corpus(bots, games_per_pair=2, seed=6)
        text = records_to_pgn(records)
        stats = ParseStats()
        parsed = list(parse_pgn(io.StringIO(text), stats))
        assert stats.skipped == 0
        assert len(parsed) == len(records)
        for orig, back in zip(records, parsed):
            assert back.moves == orig.moves
            assert back.white_id == orig.white_id

    def test_headers_present(self):
        bots = [make_bot(i) for i in range(2)]
        text = records_to_pgn(generate_corpus(bots, 1, seed=0))
        assert '[White "bot000"]' in text or '[White "bot001"]' in text
        assert "[TimeControl" in text
