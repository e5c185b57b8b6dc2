"""Few-shot stylometry evaluation: candidate centroids from reference games,
cosine nearest-centroid identification, and P@n / MRR metrics."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .encoding import NUM_CHANNELS, SkipGame, pack_game
from .pgn import GameRecord

log = logging.getLogger(__name__)


@dataclass
class StylometryTask:
    candidate_pool: list[str]
    evaluation_pool: list[str]
    ref_size: int = 100
    query_size: int = 100
    k: int = 15
    seed: int = 0

    def __post_init__(self):
        c, e = set(self.candidate_pool), set(self.evaluation_pool)
        if not e <= c:
            raise ValueError(
                f"evaluation pool not contained in candidate pool: {sorted(e - c)[:5]}")
        if self.ref_size < 1 or self.query_size < 1:
            raise ValueError("ref_size and query_size must be >= 1")
        if self.k < 0:
            raise ValueError("k must be >= 0")

    @classmethod
    def from_file(cls, path) -> "StylometryTask":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown task keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class PlayerVector:
    player_id: str
    values: np.ndarray
    n_games: int


@dataclass
class TaskResult:
    task: dict
    rankings: dict[str, list[tuple[str, float]]]   # target -> top-10 (pid, distance)
    precision_at_1: float
    precision_at_5: float
    mrr: float
    per_player_meta: dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "task": self.task,
            "metrics": {"P@1": self.precision_at_1, "P@5": self.precision_at_5,
                        "MRR": self.mrr},
            "rankings": {pid: [[c, d] for c, d in ranks]
                         for pid, ranks in self.rankings.items()},
            "per_player": self.per_player_meta,
        }, indent=1)


def player_vector(embeddings: list[np.ndarray] | np.ndarray,
                  player_id: str = "") -> PlayerVector:
    """Componentwise mean of game vectors; intentionally not re-normalized."""
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.ndim != 2 or len(arr) == 0:
        raise ValueError("need a nonempty list of equal-dimension embeddings")
    return PlayerVector(player_id, arr.mean(axis=0), len(arr))


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine distance undefined for zero-norm vectors")
    return float(1.0 - np.dot(u, v) / (nu * nv))


def identify(query_vec: PlayerVector,
             candidates: list[PlayerVector]) -> list[tuple[str, float]]:
    """Full ranking by ascending cosine distance; ties break lexicographically."""
    if not candidates:
        raise ValueError("empty candidate list")
    scored = [(cosine_distance(query_vec.values, c.values), c.player_id)
              for c in candidates]
    scored.sort()
    return [(pid, dist) for dist, pid in scored]


def precision_at_n(rankings: list[list[tuple[str, float]]],
                   truths: list[str], n: int) -> float:
    if len(rankings) != len(truths):
        raise ValueError(f"{len(rankings)} rankings for {len(truths)} truths")
    hits = sum(1 for ranks, truth in zip(rankings, truths)
               if truth in [pid for pid, _ in ranks[:n]])
    return hits / len(truths)


def mean_reciprocal_rank(rankings: list[list[tuple[str, float]]],
                         truths: list[str]) -> float:
    total = 0.0
    for ranks, truth in zip(rankings, truths):
        for i, (pid, _) in enumerate(ranks):
            if pid == truth:
                total += 1.0 / (i + 1)
                break
    return total / len(truths)


def player_move_count(record: GameRecord, player_id: str) -> int:
    n = len(record.moves)
    return (n + 1) // 2 if record.player_color(player_id) == "white" else n // 2


class ModelEmbedder:
    """Embeds games with a trained extractor + encoder pair."""

    def __init__(self, extractor, encoder, batch_size: int = 64):
        self.extractor = extractor
        self.encoder = encoder
        self.batch_size = batch_size
        self.max_len = encoder.config.max_positions

    def usable(self, record: GameRecord, player_id: str, k: int) -> bool:
        return player_move_count(record, player_id) > k

    @torch.no_grad()
    def game_vectors(self, pairs: list[tuple[GameRecord, str]], k: int) -> np.ndarray:
        self.extractor.eval()
        self.encoder.eval()
        out = []
        for lo in range(0, len(pairs), self.batch_size):
            batch = pairs[lo:lo + self.batch_size]
            seqs = []
            for record, pid in batch:
                packed = pack_game(record, pid)
                if len(packed) <= k:
                    raise SkipGame(f"{pid} has <= {k} moves in {record.game_id}")
                seqs.append(packed.to_planes(start=k, length=self.max_len))
            longest = max(len(s) for s in seqs)
            planes = np.zeros((len(seqs), longest, NUM_CHANNELS, 8, 8), np.float32)
            mask = np.zeros((len(seqs), longest), dtype=bool)
            for i, s in enumerate(seqs):
                planes[i, :len(s)] = s
                mask[i, :len(s)] = True
            planes_t = torch.from_numpy(planes)
            B, L = planes_t.shape[:2]
            features = self.extractor(planes_t.reshape(B * L, NUM_CHANNELS, 8, 8))
            emb = self.encoder(features.reshape(B, L, -1), torch.from_numpy(mask))
            out.append(emb.numpy())
        return np.concatenate(out) if out else np.zeros((0, self.encoder.config.embed_dim))


def _sample_games(records: list[GameRecord], player_id: str, k: int, size: int,
                  embedder, rng: np.random.Generator) -> list[GameRecord]:
    usable = [r for r in records if embedder.usable(r, player_id, k)]
    if not usable:
        raise ValueError(f"player {player_id} has no usable games at k={k}")
    if len(usable) < size:
        log.warning("player %s: only %d usable games (wanted %d)",
                    player_id, len(usable), size)
        return usable
    picks = rng.choice(len(usable), size=size, replace=False)
    return [usable[i] for i in picks]


def run_task(task: StylometryTask, embedder,
             game_store: dict[str, dict[str, list[GameRecord]]]) -> TaskResult:
    """game_store maps player_id -> {"reference": [...], "query": [...]}."""
    rng = np.random.default_rng(task.seed)
    offenders = [pid for pid in task.candidate_pool
                 if not game_store.get(pid, {}).get("reference")]
    offenders += [pid for pid in task.evaluation_pool
                  if not game_store.get(pid, {}).get("query")]
    if offenders:
        raise ValueError(f"players with no usable games: {sorted(set(offenders))[:10]}")

    candidates = []
    for pid in sorted(task.candidate_pool):
        refs = _sample_games(game_store[pid]["reference"], pid, task.k,
                             task.ref_size, embedder, rng)
        vectors = embedder.game_vectors([(r, pid) for r in refs], task.k)
        candidates.append(player_vector(vectors, pid))

    rankings = {}
    meta = {}
    truths = []
    ordered = []
    for pid in sorted(task.evaluation_pool):
        queries = _sample_games(game_store[pid]["query"], pid, task.k,
                                task.query_size, embedder, rng)
        vectors = embedder.game_vectors([(r, pid) for r in queries], task.k)
        query_vec = player_vector(vectors, pid)
        ranking = identify(query_vec, candidates)
        rankings[pid] = ranking[:10]
        ordered.append(ranking)
        truths.append(pid)
        meta[pid] = {"n_query": len(queries)}

    return TaskResult(
        task=task.__dict__ | {"candidate_pool_size": len(task.candidate_pool)},
        rankings=rankings,
        precision_at_1=precision_at_n(ordered, truths, 1),
        precision_at_5=precision_at_n(ordered, truths, 5),
        mrr=mean_reciprocal_rank(ordered, truths),
        per_player_meta=meta,
    )


def build_game_store(records, manifest: dict) -> dict[str, dict[str, list[GameRecord]]]:
    store: dict[str, dict[str, list[GameRecord]]] = {}
    parts = {pid: {"reference": set(split["reference"]), "query": set(split["query"])}
             for pid, split in manifest["players"].items()}
    for rec in records:
        for pid in (rec.white_id, rec.black_id):
            if pid in parts:
                for part in ("reference", "query"):
                    if rec.game_id in parts[pid][part]:
                        store.setdefault(pid, {"reference": [], "query": []})[
                            part].append(rec)
    return store


def save_centroid_index(path, vectors: list[PlayerVector]) -> None:
    """Binary index: JSON header line (ids, dim) + float32 matrix."""
    if not vectors:
        raise ValueError("no vectors to save")
    dim = len(vectors[0].values)
    header = json.dumps({"ids": [v.player_id for v in vectors], "dim": dim,
                         "n_games": [v.n_games for v in vectors]})
    matrix = np.stack([v.values for v in vectors]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(matrix.tobytes())


def load_centroid_index(path) -> list[PlayerVector]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        matrix = np.frombuffer(fh.read(), dtype="<f4").reshape(-1, header["dim"])
    return [PlayerVector(pid, matrix[i].astype(np.float64), header["n_games"][i])
            for i, pid in enumerate(header["ids"])]
