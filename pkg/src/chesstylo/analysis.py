"""Post-hoc analyses: attention profiles over move positions, TSV exports
for embedding-projector tools, opening-preference labels, and the e4/d4
within-player split distance."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import numpy as np
import torch

from .encoding import NUM_CHANNELS, pack_game
from .evaluate import PlayerVector, cosine_distance, player_vector
from .pgn import GameRecord


@torch.no_grad()
def attention_received(extractor, encoder, planes: np.ndarray) -> np.ndarray:
    """Attention received per move position for one game: the per-position
    column sum over query rows, averaged over blocks and heads.

    Sums to the number of query positions (each query row sums to 1).
    """
    extractor.eval()
    encoder.eval()
    L = len(planes)
    planes_t = torch.from_numpy(planes).reshape(L, NUM_CHANNELS, 8, 8)
    features = extractor(planes_t).reshape(1, L, -1)
    mask = torch.ones(1, L, dtype=torch.bool)
    weights = encoder.attention_weights(features, mask)
    stacked = torch.stack(weights)          # (blocks, 1, heads, L, L)
    received = stacked.sum(dim=-2).mean(dim=(0, 1, 2))   # sum queries, avg rest
    return received.numpy()


def attention_profile(extractor, encoder, games: list[tuple[GameRecord, str]],
                      k: int, max_len: int | None = None) -> dict:
    """Aggregate per-position attention received across games at truncation k."""
    max_len = max_len or encoder.config.max_positions
    per_position: dict[int, list[float]] = {}
    used = 0
    for record, pid in games:
        packed = pack_game(record, pid)
        if len(packed) <= k:
            continue
        planes = packed.to_planes(start=k, length=max_len)
        received = attention_received(extractor, encoder, planes)
        for pos, value in enumerate(received):
            per_position.setdefault(pos, []).append(float(value))
        used += 1
    positions = sorted(per_position)
    return {
        "k": k,
        "n_games": used,
        "positions": positions,
        "mean": [float(np.mean(per_position[p])) for p in positions],
        "std": [float(np.std(per_position[p])) for p in positions],
        "count": [len(per_position[p]) for p in positions],
    }


def attention_profiles(extractor, encoder, games, k_list=(0, 5, 10, 15),
                       max_len=None) -> list[dict]:
    return [attention_profile(extractor, encoder, games, k, max_len) for k in k_list]


def export_vectors(vectors: np.ndarray, metadata: list[dict],
                   out_prefix: str | Path) -> tuple[Path, Path]:
    """Write a projector-compatible TSV pair: vectors and aligned metadata."""
    vectors = np.asarray(vectors)
    if vectors.ndim != 2:
        raise ValueError(f"expected a 2-D vector array, got shape {vectors.shape}")
    if len(metadata) != len(vectors):
        raise ValueError(
            f"{len(metadata)} metadata rows for {len(vectors)} vectors")
    out_prefix = Path(out_prefix)
    vec_path = out_prefix.with_name(out_prefix.name + "_vectors.tsv")
    meta_path = out_prefix.with_name(out_prefix.name + "_metadata.tsv")
    with open(vec_path, "w") as fh:
        for row in vectors.astype(np.float32):
            fh.write("\t".join(repr(float(x)) for x in row) + "\n")
    columns = list(metadata[0].keys()) if metadata else []
    with open(meta_path, "w") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in metadata:
            fh.write("\t".join(str(row.get(c, "")) for c in columns) + "\n")
    return vec_path, meta_path


def opening_label(player_games: list[GameRecord], player_id: str) -> str:
    """Modal first move (UCI) the player made as White; "none" if no White
    games; ties break to the lexicographically smaller move."""
    counts = Counter(g.moves[0] for g in player_games
                     if g.white_id == player_id and g.moves)
    if not counts:
        return "none"
    best = max(counts.values())
    return min(m for m, c in counts.items() if c == best)


def reply_label(player_games: list[GameRecord], player_id: str,
                white_first: str) -> str:
    """Modal reply the player made as Black to a given White first move."""
    counts = Counter(g.moves[1] for g in player_games
                     if g.black_id == player_id and len(g.moves) >= 2
                     and g.moves[0] == white_first)
    if not counts:
        return "none"
    best = max(counts.values())
    return min(m for m, c in counts.items() if c == best)


def split_distance(games_as_white: list[GameRecord], player_id: str,
                   embedder, k: int,
                   other_centroids: list[PlayerVector] | None = None,
                   ) -> tuple[float, float | None]:
    """Cosine distance between the player's e4-game and d4-game centroids,
    plus the mean distance from their overall centroid to other players'."""
    e4 = [g for g in games_as_white if g.moves and g.moves[0] == "e2e4"
          and embedder.usable(g, player_id, k)]
    d4 = [g for g in games_as_white if g.moves and g.moves[0] == "d2d4"
          and embedder.usable(g, player_id, k)]
    if not e4 or not d4:
        raise ValueError(
            f"player {player_id} needs usable games opening both e4 ({len(e4)}) "
            f"and d4 ({len(d4)}) at k={k}")
    e4_vecs = embedder.game_vectors([(g, player_id) for g in e4], k)
    d4_vecs = embedder.game_vectors([(g, player_id) for g in d4], k)
    within = cosine_distance(player_vector(e4_vecs).values,
                             player_vector(d4_vecs).values)
    cross = None
    if other_centroids:
        own = player_vector(np.concatenate([e4_vecs, d4_vecs])).values
        cross = float(np.mean([cosine_distance(own, c.values)
                               for c in other_centroids]))
    return within, cross


def write_attention_json(path, profiles: list[dict], provenance: dict | None = None) -> None:
    payload = {"profiles": profiles}
    if provenance:
        payload["provenance"] = provenance
    Path(path).write_text(json.dumps(payload, indent=1))
