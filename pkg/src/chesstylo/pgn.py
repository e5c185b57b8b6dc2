"""PGN ingestion: parsing, filtering, player bucketing, and game splits.

Input archives may be plain ``.pgn`` or compressed (``.bz2``, ``.gz``;
``.zst`` when a zstandard module is importable). Every parsed game is
replayed through the rules engine, so emitted records are guaranteed legal.
"""

from __future__ import annotations

import bz2
import gzip
import hashlib
import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .rules import Board, IllegalMoveError

log = logging.getLogger(__name__)

RESULT_TOKENS = {"1-0", "0-1", "1/2-1/2", "*"}

BUCKET_EDGES = [(1_000, "1K"), (5_000, "5K"), (10_000, "10K"),
                (20_000, "20K"), (30_000, "30K"), (40_000, "40K+")]


@dataclass
class GameRecord:
    game_id: str
    white_id: str
    black_id: str
    moves: list[str]                      # UCI, validated by replay
    time_control_seconds: int | None = None
    white_rating: int | None = None
    black_rating: int | None = None
    date: str | None = None

    def player_color(self, player_id: str) -> str:
        if player_id == self.white_id:
            return "white"
        if player_id == self.black_id:
            return "black"
        raise KeyError(f"{player_id} did not play in game {self.game_id}")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "GameRecord":
        return cls(**json.loads(line))


@dataclass
class PlayerCorpus:
    player_id: str
    games: list[GameRecord] = field(default_factory=list)
    bucket: str | None = None
    seen: bool = True


@dataclass
class SplitAssignment:
    player_id: str
    train_ids: list[str]
    reference_ids: list[str]
    query_ids: list[str]
    seed: int


@dataclass
class FilterConfig:
    """Declarative game/player filters.

    The rating-variance threshold is a tunable default, not a published
    number; see README.
    """
    min_moves: int = 10
    time_control_range: tuple[int, int] | None = (180, 420)
    min_mean_rating: float | None = None
    max_mean_rating: float | None = None
    max_rating_std: float | None = 150.0

    @classmethod
    def from_file(cls, path: str | Path) -> "FilterConfig":
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown filter config keys: {sorted(unknown)}")
        if "time_control_range" in data and data["time_control_range"] is not None:
            data["time_control_range"] = tuple(data["time_control_range"])
        return cls(**data)


class ParseStats:
    def __init__(self):
        self.parsed = 0
        self.skipped = 0

    def __repr__(self):
        return f"ParseStats(parsed={self.parsed}, skipped={self.skipped})"


def open_pgn(path: str | Path) -> IO[str]:
    """Open a possibly-compressed PGN file as a text stream."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".bz2":
        return io.TextIOWrapper(bz2.open(path, "rb"), encoding="utf-8", errors="replace")
    if suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    if suffix == ".zst":
        try:
            import zstandard
        except ImportError as exc:
            raise IOError(f"cannot read {path}: no zstandard module available") from exc
        fh = zstandard.ZstdDecompressor().stream_reader(open(path, "rb"))
        return io.TextIOWrapper(fh, encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


_HEADER_RE = re.compile(r'^\[(\w+)\s+"(.*)"\]\s*$')
_COMMENT_RE = re.compile(r"\{[^}]*\}")
_NAG_RE = re.compile(r"\$\d+")
_MOVE_NUMBER_RE = re.compile(r"\d+\.(\.\.)?")


def _strip_variations(text: str) -> str:
    out = []
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def _parse_time_control(tc: str | None) -> int | None:
    if not tc or tc in ("-", "?"):
        return None
    base = tc.split("+")[0]
    try:
        return int(base)
    except ValueError:
        return None


def _parse_rating(value: str | None) -> int | None:
    try:
        return int(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        return None


def _iter_raw_games(stream: IO[str]) -> Iterator[tuple[dict, str]]:
    """Split a PGN stream into (headers, movetext) chunks."""
    headers: dict[str, str] = {}
    movetext_lines: list[str] = []
    in_moves = False
    for line in stream:
        stripped = line.strip()
        m = _HEADER_RE.match(stripped)
        if m and not in_moves:
            headers[m.group(1)] = m.group(2)
        elif m and in_moves:
            yield headers, " ".join(movetext_lines)
            headers = {m.group(1): m.group(2)}
            movetext_lines = []
            in_moves = False
        elif stripped:
            in_moves = True
            movetext_lines.append(stripped)
        elif in_moves:
            yield headers, " ".join(movetext_lines)
            headers = {}
            movetext_lines = []
            in_moves = False
    if headers or movetext_lines:
        yield headers, " ".join(movetext_lines)


def _replay_movetext(movetext: str) -> list[str]:
    text = _COMMENT_RE.sub(" ", movetext)
    text = _strip_variations(text)
    text = _NAG_RE.sub(" ", text)
    text = _MOVE_NUMBER_RE.sub(" ", text)
    board = Board()
    moves = []
    for token in text.split():
        if token in RESULT_TOKENS:
            break
        mv = board.push_san(token)
        moves.append(mv.uci())
    return moves


def parse_pgn(stream: IO[str], stats: ParseStats | None = None,
              source: str = "pgn") -> Iterator[GameRecord]:
    """Yield one validated GameRecord per game; malformed games are skipped."""
    stats = stats if stats is not None else ParseStats()
    for n, (headers, movetext) in enumerate(_iter_raw_games(stream)):
        try:
            moves = _replay_movetext(movetext)
            if not moves:
                raise ValueError("no moves")
            white = headers.get("White")
            black = headers.get("Black")
            if not white or not black:
                raise ValueError("missing player names")
            site = headers.get("Site", "")
            game_id = headers.get("GameId") or (
                site.rsplit("/", 1)[-1] if "/" in site
                else f"{source}#{n}")
            record = GameRecord(
                game_id=game_id,
                white_id=white,
                black_id=black,
                moves=moves,
                time_control_seconds=_parse_time_control(headers.get("TimeControl")),
                white_rating=_parse_rating(headers.get("WhiteElo")),
                black_rating=_parse_rating(headers.get("BlackElo")),
                date=headers.get("UTCDate", headers.get("Date", "")).replace(".", "-") or None,
            )
        except (IllegalMoveError, ValueError, KeyError) as exc:
            stats.skipped += 1
            log.debug("skipping malformed game %d: %s", n, exc)
            continue
        stats.parsed += 1
        yield record


def parse_pgn_file(path: str | Path, stats: ParseStats | None = None) -> Iterator[GameRecord]:
    with open_pgn(path) as stream:
        yield from parse_pgn(stream, stats=stats, source=Path(path).name)


def filter_games(records: Iterable[GameRecord], min_moves: int = 10,
                 time_control_range: tuple[int, int] | None = (180, 420),
                 ) -> Iterator[GameRecord]:
    """Keep games where both sides made >= min_moves moves, the time control
    is in range, and the two sides are distinct players."""
    if min_moves < 0:
        raise ValueError("min_moves must be >= 0")
    for rec in records:
        if len(rec.moves) < 2 * min_moves:
            continue
        if rec.white_id == rec.black_id:
            continue
        if time_control_range is not None:
            tc = rec.time_control_seconds
            if tc is None or not time_control_range[0] <= tc <= time_control_range[1]:
                continue
        yield rec


def build_player_corpora(records: Iterable[GameRecord]) -> dict[str, PlayerCorpus]:
    corpora: dict[str, PlayerCorpus] = {}
    for rec in records:
        for pid in (rec.white_id, rec.black_id):
            corpora.setdefault(pid, PlayerCorpus(pid)).games.append(rec)
    return corpora


def filter_players(corpora: dict[str, PlayerCorpus],
                   config: FilterConfig) -> dict[str, PlayerCorpus]:
    """Apply rating mean/variance criteria over each player's games."""
    kept = {}
    for pid, corpus in corpora.items():
        ratings = []
        for rec in corpus.games:
            r = rec.white_rating if pid == rec.white_id else rec.black_rating
            if r is not None:
                ratings.append(r)
        if ratings:
            mean = float(np.mean(ratings))
            std = float(np.std(ratings))
            if config.min_mean_rating is not None and mean < config.min_mean_rating:
                continue
            if config.max_mean_rating is not None and mean > config.max_mean_rating:
                continue
            if config.max_rating_std is not None and std > config.max_rating_std:
                continue
        kept[pid] = corpus
    return kept


def bucket_players(corpora: dict[str, PlayerCorpus]) -> dict[str, str]:
    """Assign game-count buckets; players below 1,000 games are dropped."""
    buckets = {}
    for pid, corpus in corpora.items():
        n = len(corpus.games)
        label = None
        for lo, name in BUCKET_EDGES:
            if n >= lo:
                label = name
        if label is not None:
            corpus.bucket = label
            buckets[pid] = label
    return buckets


def _player_rng(seed: int, player_id: str) -> np.random.Generator:
    digest = hashlib.sha256(player_id.encode()).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def split_player(corpus: PlayerCorpus, seed: int,
                 min_games: int = 10) -> SplitAssignment:
    """Deterministic 80/10/10 split; floor rounding, remainder to train."""
    ids = [g.game_id for g in corpus.games]
    n = len(ids)
    if n < min_games:
        raise ValueError(
            f"player {corpus.player_id} has {n} games; need >= {min_games} to split")
    rng = _player_rng(seed, corpus.player_id)
    order = rng.permutation(n)
    n_ref = n // 10
    n_query = n // 10
    shuffled = [ids[i] for i in order]
    return SplitAssignment(
        player_id=corpus.player_id,
        train_ids=shuffled[: n - n_ref - n_query],
        reference_ids=shuffled[n - n_ref - n_query: n - n_query],
        query_ids=shuffled[n - n_query:],
        seed=seed,
    )


def write_records(path: str | Path, records: Iterable[GameRecord]) -> int:
    count = 0
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
            count += 1
    return count


def read_records(path: str | Path) -> Iterator[GameRecord]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield GameRecord.from_json(line)


def write_split_manifest(path: str | Path, splits: Iterable[SplitAssignment],
                         seed: int) -> None:
    manifest = {
        "seed": seed,
        "players": {
            s.player_id: {
                "train": s.train_ids,
                "reference": s.reference_ids,
                "query": s.query_ids,
            } for s in splits
        },
    }
    Path(path).write_text(json.dumps(manifest, indent=1))


def read_split_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
