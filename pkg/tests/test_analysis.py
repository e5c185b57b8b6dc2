"""Analysis and export tests."""

import json

import numpy as np
import pytest

from chesstylo.analysis import (attention_profile, attention_received,
                                export_vectors, opening_label, reply_label,
                                split_distance, write_attention_json)
from chesstylo.baseline import BaselineEmbedder
from chesstylo.encoder import EncoderConfig, init_encoder
from chesstylo.encoding import pack_game
from chesstylo.evaluate import PlayerVector
from chesstylo.extractor import ExtractorConfig, init_extractor
from chesstylo.pgn import GameRecord
from chesstylo.synthetic import generate_corpus, make_bot

TINY_EXT = ExtractorConfig(num_blocks=1, channels=8, se_ratio=4, output_dim=12)
TINY_ENC = EncoderConfig(model_dim=32, num_blocks=2, num_heads=2, head_dim=8,
                         ff_dim=48, embed_dim=16, max_positions=64,
                         feature_dim=12)


@pytest.fixture(scope="module")
def corpus():
    bots = [make_bot(i, strength_noise=0.1) for i in range(3)]
    return generate_corpus(bots, games_per_pair=4, seed=3)


@pytest.fixture(scope="module")
def model():
    return init_extractor(TINY_EXT, 0), init_encoder(TINY_ENC, 1)


class TestAttention:
    def test_received_sums_to_query_count(self, corpus, model):
        extractor, encoder = model
        rec = corpus[0]
        planes = pack_game(rec, rec.white_id).to_planes(length=20)
        received = attention_received(extractor, encoder, planes)
        assert received.shape == (len(planes),)
        assert received.sum() == pytest.approx(len(planes), rel=1e-5)
        assert (received >= 0).all()

    def test_profile_aggregates(self, corpus, model):
        extractor, encoder = model
        pairs = [(rec, rec.white_id) for rec in corpus[:4]]
        profile = attention_profile(extractor, encoder, pairs, k=0, max_len=24)
        assert profile["k"] == 0
        assert profile["n_games"] == 4
        assert len(profile["mean"]) == len(profile["positions"])
        assert max(profile["count"]) == 4

    def test_profile_skips_short_games(self, model):
        extractor, encoder = model
        rec = GameRecord(game_id="s", white_id="w", black_id="b",
                         moves=["e2e4", "e7e5"], time_control_seconds=None,
                         white_rating=None, black_rating=None, date=None)
        profile = attention_profile(extractor, encoder, [(rec, "w")], k=5)
        assert profile["n_games"] == 0

    def test_write_attention_json(self, tmp_path):
        path = tmp_path / "attn.json"
        write_attention_json(path, [{"k": 0, "mean": [1.0]}],
                             provenance={"tool": "x"})
        payload = json.loads(path.read_text())
        assert payload["profiles"][0]["k"] == 0
        assert payload["provenance"]["tool"] == "x"


class TestExport:
    def test_tsv_pair(self, tmp_path):
        vectors = np.arange(6, dtype=np.float64).reshape(2, 3)
        metadata = [{"game_id": "g1", "player_id": "p"},
                    {"game_id": "g2", "player_id": "p"}]
        vec_path, meta_path = export_vectors(vectors, metadata, tmp_path / "emb")
        rows = [line.split("\t") for line in vec_path.read_text().splitlines()]
        assert len(rows) == 2 and len(rows[0]) == 3
        assert float(rows[1][2]) == 5.0
        meta_lines = meta_path.read_text().splitlines()
        assert meta_lines[0] == "game_id\tplayer_id"
        assert meta_lines[1] == "g1\tp"

    def test_shape_errors(self, tmp_path):
        with pytest.raises(ValueError):
            export_vectors(np.zeros(4), [{}], tmp_path / "x")
        with pytest.raises(ValueError):
            export_vectors(np.zeros((2, 3)), [{}], tmp_path / "x")


def _rec(gid, moves, white="w", black="b"):
    return GameRecord(game_id=gid, white_id=white, black_id=black, moves=moves,
                      time_control_seconds=None, white_rating=None,
                      black_rating=None, date=None)


class TestLabels:
    def test_opening_label_modal(self):
        games = [_rec("a", ["e2e4", "e7e5"]), _rec("b", ["e2e4", "c7c5"]),
                 _rec("c", ["d2d4", "d7d5"]),
                 _rec("d", ["g1f3", "g8f6"], white="other", black="w")]
        assert opening_label(games, "w") == "e2e4"

    def test_opening_label_tie_lexicographic(self):
        games = [_rec("a", ["e2e4"]), _rec("b", ["d2d4"])]
        assert opening_label(games, "w") == "d2d4"

    def test_opening_label_no_white_games(self):
        assert opening_label([_rec("a", ["e2e4"], white="x")], "w") == "none"

    def test_reply_label(self):
        games = [_rec("a", ["e2e4", "c7c5"], white="x", black="w"),
                 _rec("b", ["e2e4", "c7c5"], white="x", black="w"),
                 _rec("c", ["e2e4", "e7e5"], white="x", black="w"),
                 _rec("d", ["d2d4", "d7d5"], white="x", black="w")]
        assert reply_label(games, "w", "e2e4") == "c7c5"
        assert reply_label(games, "w", "c2c4") == "none"


class TestSplitDistance:
    def _white_games(self, first, n, tail):
        return [_rec(f"{first}-{i}", [first] + tail) for i in range(n)]

    def test_within_distance_small_for_same_style(self):
        tail = ["e7e5", "g1f3", "b8c6", "f1c4", "g8f6", "d2d3", "d7d6",
                "c2c3", "a7a6", "b1d2", "f8e7"]
        games = self._white_games("e2e4", 3, tail) \
            + self._white_games("d2d4", 3, tail)
        embedder = BaselineEmbedder("all")
        within, cross = split_distance(games, "w", embedder, k=1)
        assert 0.0 <= within <= 2.0
        assert cross is None

    def test_cross_distance_reported(self):
        tail = ["e7e5", "g1f3", "b8c6", "f1c4", "g8f6", "d2d3", "d7d6",
                "c2c3", "a7a6", "b1d2", "f8e7"]
        games = self._white_games("e2e4", 2, tail) \
            + self._white_games("d2d4", 2, tail)
        other = [PlayerVector("o", np.ones(4096), 1)]
        within, cross = split_distance(games, "w", BaselineEmbedder("all"),
                                       k=1, other_centroids=other)
        assert cross is not None and 0.0 <= cross <= 2.0

    def test_needs_both_openings(self):
        games = self._white_games("e2e4", 3, ["e7e5"] * 11)
        with pytest.raises(ValueError):
            split_distance(games, "w", BaselineEmbedder("all"), k=0)
