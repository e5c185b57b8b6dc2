"""Identification harness tests: vectors, rankings, metrics, task plumbing."""

import json

import numpy as np
import pytest

from chesstylo.evaluate import (PlayerVector, StylometryTask, cosine_distance,
                                identify, load_centroid_index,
                                mean_reciprocal_rank, player_move_count,
                                player_vector, precision_at_n, run_task,
                                save_centroid_index)
from chesstylo.pgn import GameRecord


class TestPlayerVector:
    def test_unnormalized_mean(self):
        games = np.array([[1.0, 0.0], [0.0, 1.0]])
        vec = player_vector(games, "p")
        np.testing.assert_array_equal(vec.values, [0.5, 0.5])  # norm < 1 kept
        assert vec.n_games == 2

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            player_vector(np.zeros((0, 4)))


class TestCosineDistance:
    def test_known_values(self):
        assert cosine_distance(np.array([1.0, 0]), np.array([1.0, 0])) == 0.0
        assert cosine_distance(np.array([1.0, 0]), np.array([0, 1.0])) == 1.0
        assert cosine_distance(np.array([1.0, 0]), np.array([-1.0, 0])) == 2.0

    def test_scale_invariant(self):
        u, v = np.array([1.0, 2.0, 3.0]), np.array([2.0, -1.0, 0.5])
        assert cosine_distance(u, v) == pytest.approx(cosine_distance(3 * u, 7 * v))

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine_distance(np.zeros(3), np.ones(3))


class TestIdentify:
    def _cands(self):
        return [PlayerVector("a", np.array([1.0, 0.0]), 1),
                PlayerVector("b", np.array([0.0, 1.0]), 1),
                PlayerVector("c", np.array([1.0, 1.0]), 1)]

    def test_ranking_order(self):
        query = PlayerVector("q", np.array([0.9, 0.1]), 1)
        ranks = identify(query, self._cands())
        assert [pid for pid, _ in ranks] == ["a", "c", "b"]

    def test_lexicographic_tie_break(self):
        cands = [PlayerVector("z", np.array([1.0, 0.0]), 1),
                 PlayerVector("a", np.array([2.0, 0.0]), 1)]
        ranks = identify(PlayerVector("q", np.array([1.0, 0.0]), 1), cands)
        assert [pid for pid, _ in ranks] == ["a", "z"]

    def test_empty_candidates(self):
        with pytest.raises(ValueError):
            identify(PlayerVector("q", np.ones(2), 1), [])


class TestMetrics:
    def _rankings(self):
        return [[("a", 0.1), ("b", 0.2), ("c", 0.3)],
                [("b", 0.1), ("a", 0.2), ("c", 0.3)],
                [("c", 0.1), ("b", 0.2), ("a", 0.3)]]

    def test_precision_at_n(self):
        truths = ["a", "a", "a"]
        assert precision_at_n(self._rankings(), truths, 1) == pytest.approx(1 / 3)
        assert precision_at_n(self._rankings(), truths, 2) == pytest.approx(2 / 3)
        assert precision_at_n(self._rankings(), truths, 3) == 1.0

    def test_p1_never_exceeds_p5(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            ids = [f"p{i}" for i in range(10)]
            rankings, truths = [], []
            for _ in range(6):
                order = rng.permutation(10)
                rankings.append([(ids[i], float(j)) for j, i in enumerate(order)])
                truths.append(ids[int(rng.integers(0, 10))])
            assert precision_at_n(rankings, truths, 1) \
                <= precision_at_n(rankings, truths, 5)

    def test_mrr(self):
        truths = ["a", "a", "a"]
        expected = (1.0 + 1 / 2 + 1 / 3) / 3
        assert mean_reciprocal_rank(self._rankings(), truths) == pytest.approx(expected)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            precision_at_n(self._rankings(), ["a"], 1)


class TestTaskValidation:
    def test_eval_pool_must_be_subset(self):
        with pytest.raises(ValueError):
            StylometryTask(["a", "b"], ["a", "c"])

    def test_negative_k(self):
        with pytest.raises(ValueError):
            StylometryTask(["a"], ["a"], k=-1)

    def test_from_file(self, tmp_path):
        path = tmp_path / "task.json"
        path.write_text(json.dumps({
            "candidate_pool": ["a", "b"], "evaluation_pool": ["a"],
            "ref_size": 3, "query_size": 2, "k": 5, "seed": 1}))
        task = StylometryTask.from_file(path)
        assert task.k == 5
        path.write_text(json.dumps({"candidate_pool": ["a"],
                                    "evaluation_pool": ["a"], "bogus": 1}))
        with pytest.raises(ValueError):
            StylometryTask.from_file(path)


def _move_count_record():
    return GameRecord(game_id="g", white_id="w", black_id="b",
                      moves=["e2e4", "e7e5", "g1f3"], time_control_seconds=None,
                      white_rating=None, black_rating=None, date=None)


def test_player_move_count():
    rec = _move_count_record()
    assert player_move_count(rec, "w") == 2
    assert player_move_count(rec, "b") == 1


class _StubEmbedder:
    """Embeds each game as a one-hot of the owner, plus tiny noise."""

    def __init__(self, ids):
        self.index = {pid: i for i, pid in enumerate(ids)}
        self.rng = np.random.default_rng(0)

    def usable(self, record, player_id, k):
        return player_move_count(record, player_id) > k

    def game_vectors(self, pairs, k):
        out = np.zeros((len(pairs), len(self.index)))
        for row, (_, pid) in enumerate(pairs):
            out[row, self.index[pid]] = 1.0
        return out + self.rng.normal(scale=1e-3, size=out.shape)


def _store(ids, n_ref=6, n_query=6, n_moves=30):
    store = {}
    for pid in ids:
        def recs(part, count):
            return [GameRecord(game_id=f"{pid}-{part}{i}", white_id=pid,
                               black_id="opp", moves=["e2e4"] * n_moves,
                               time_control_seconds=None, white_rating=None,
                               black_rating=None, date=None)
                    for i in range(count)]
        store[pid] = {"reference": recs("r", n_ref), "query": recs("q", n_query)}
    return store


class TestRunTask:
    def test_perfect_embedder_gets_perfect_score(self):
        ids = [f"p{i}" for i in range(6)]
        task = StylometryTask(ids, ids, ref_size=4, query_size=4, k=0, seed=0)
        result = run_task(task, _StubEmbedder(ids), _store(ids))
        assert result.precision_at_1 == 1.0
        assert result.mrr == 1.0

    def test_distractors_never_raise_p1(self):
        ids = [f"p{i}" for i in range(6)]
        eval_ids = ids[:3]
        store = _store(ids)
        embedder = _StubEmbedder(ids)
        small = run_task(StylometryTask(eval_ids, eval_ids, ref_size=4,
                                        query_size=4, k=0, seed=0), embedder, store)
        big = run_task(StylometryTask(ids, eval_ids, ref_size=4,
                                      query_size=4, k=0, seed=0), embedder, store)
        assert big.precision_at_1 <= small.precision_at_1

    def test_missing_player_raises(self):
        ids = ["p0", "p1"]
        task = StylometryTask(ids + ["ghost"], ids, ref_size=4, query_size=4)
        with pytest.raises(ValueError):
            run_task(task, _StubEmbedder(ids + ["ghost"]), _store(ids))

    def test_result_json_shape(self):
        ids = [f"p{i}" for i in range(4)]
        task = StylometryTask(ids, ids, ref_size=4, query_size=4, k=0, seed=0)
        result = run_task(task, _StubEmbedder(ids), _store(ids))
        payload = json.loads(result.to_json())
        assert set(payload) >= {"task", "metrics", "rankings"}
        assert payload["metrics"]["P@1"] == 1.0


class TestCentroidIndex:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        vectors = [PlayerVector(f"p{i}", rng.normal(size=8), i + 1)
                   for i in range(5)]
        path = tmp_path / "index.bin"
        save_centroid_index(path, vectors)
        back = load_centroid_index(path)
        assert [v.player_id for v in back] == [v.player_id for v in vectors]
        for a, b in zip(vectors, back):
            np.testing.assert_allclose(a.values, b.values, atol=1e-6)
            assert a.n_games == b.n_games

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_centroid_index(tmp_path / "x.bin", [])
